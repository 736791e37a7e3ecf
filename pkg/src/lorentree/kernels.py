"""Hot-kernel selection: compiled extension when built, numpy fallback.

The compiled module `_kernels` (built from _kernels.pyx when Cython and a C
compiler are available) and `_kernels_py` implement the same functions;
whichever loads is re-exported here.  `BACKEND` names the one in use, and
`benchmarks/bench_kernels.py` compares the two when both are present.
"""

try:
    from . import _kernels as _impl  # type: ignore[attr-defined]
except ImportError:
    from . import _kernels_py as _impl

BACKEND = _impl.BACKEND
gromov_table = _impl.gromov_table
dist_table = _impl.dist_table
wreath_pair_counts = _impl.wreath_pair_counts

__all__ = ["BACKEND", "gromov_table", "dist_table", "wreath_pair_counts"]
