"""Compare the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N] [--depth D]

Times gromov_table/dist_table over the full depth-D ternary ball and
wreath_pair_counts over a depth-3 wreath model, for every backend that
imports, and prints a small table.  Results are checked for agreement
before timing so a fast-but-wrong kernel cannot win.
"""

import argparse
import time

import numpy as np

from lorentree import _kernels_py
from lorentree.gelfand import WreathModel
from lorentree.trees import ball


def load_backends():
    backends = [("python", _kernels_py)]
    try:
        from lorentree import _kernels
        backends.insert(0, ("cython", _kernels))
    except ImportError:
        pass
    return backends


def ball_table(r, depth):
    verts = ball(r, depth)
    addr = np.full((len(verts), depth), -1, dtype=np.int64)
    lengths = np.zeros(len(verts), dtype=np.int64)
    for i, v in enumerate(verts):
        if v:
            addr[i, : len(v)] = v
        lengths[i] = len(v)
    return addr, lengths


def timeit(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5,
                    help="timing repetitions, best-of (default 5)")
    ap.add_argument("--depth", type=int, default=7,
                    help="ball depth for the table kernels (default 7)")
    args = ap.parse_args()

    backends = load_backends()
    print(f"backends: {', '.join(name for name, _ in backends)}")

    addr, lengths = ball_table(3, args.depth)
    print(f"\ntable kernels on the depth-{args.depth} ternary ball "
          f"({len(lengths)} vertices):")
    rows = []
    for kernel in ("gromov_table", "dist_table"):
        outs = {}
        for name, mod in backends:
            fn = getattr(mod, kernel)
            best, out = timeit(lambda: fn(addr, lengths), args.repeat)
            outs[name] = out
            rows.append((kernel, name, best))
        ref = outs["python"]
        for name, out in outs.items():
            assert np.array_equal(out, ref), f"{kernel}/{name} disagrees"

    model = WreathModel(3, 3)
    inv_arrs = np.argsort(model.arrs, axis=1)
    wargs = (model.arrs, inv_arrs, model.shells,
             model._sorted_codes, model._sorted, model.m + 1)
    print(f"wreath_pair_counts on the q=3, m=3 model "
          f"(order {model.order}):")
    outs = {}
    for name, mod in backends:
        fn = mod.wreath_pair_counts
        best, out = timeit(lambda: fn(*wargs), args.repeat)
        outs[name] = out
        rows.append(("wreath_pair_counts", name, best))
    ref = outs["python"]
    for name, out in outs.items():
        assert np.array_equal(out, ref), f"wreath_pair_counts/{name} disagrees"

    print(f"\n{'kernel':<22}{'backend':<10}{'best (ms)':>12}")
    base = {}
    for kernel, name, best in rows:
        base.setdefault(kernel, best if name == "cython" else None)
    for kernel, name, best in rows:
        speed = ""
        cy = base.get(kernel)
        if name == "python" and cy:
            speed = f"  ({best / cy:.1f}x slower than cython)"
        print(f"{kernel:<22}{name:<10}{best * 1e3:>12.3f}{speed}")


if __name__ == "__main__":
    main()
