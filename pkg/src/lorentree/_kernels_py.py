"""Pure-numpy implementations of the hot kernels.

Same contracts as the compiled extension `_kernels`; `kernels` picks
whichever is available at import time.
"""

import numpy as np

BACKEND = "python"


def gromov_table(addr: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    """(x|y) for all address pairs.

    addr: (N, D) int array of labels padded with -1; lengths: (N,).
    Returns the (N, N) matrix of common-prefix lengths.
    """
    a = addr[:, None, :]
    b = addr[None, :, :]
    match = (a == b) & (a >= 0)
    return np.cumprod(match, axis=2, dtype=np.int64).sum(axis=2)


def dist_table(addr: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    """Tree distances |x| + |y| - 2 (x|y) for all pairs."""
    g = gromov_table(addr, lengths)
    return lengths[:, None] + lengths[None, :] - 2 * g


def wreath_pair_counts(arrs, inv_arrs, shells, sorted_codes, sorted_idx,
                       n_shells):
    """counts[x, a, b] = #{y : shell(y) = a, shell(y^-1 x) = b}.

    arrs: (G, V) vertex-permutation arrays; inv_arrs: their inverses;
    shells: (G,); sorted_codes/sorted_idx: the group's encoded-and-sorted
    lookup arrays (code = arr . V^arange(V)).
    """
    g, nv = arrs.shape
    powers = nv ** np.arange(nv, dtype=np.int64)
    counts = np.zeros((g, n_shells, n_shells), dtype=np.int64)
    a_codes = shells * n_shells
    for x in range(g):
        prod = inv_arrs[:, arrs[x]]          # (y^-1 x)(v) = y^-1(x(v))
        codes = prod @ powers
        pos = np.searchsorted(sorted_codes, codes)
        idx = sorted_idx[pos]
        flat = np.bincount(a_codes + shells[idx], minlength=n_shells ** 2)
        counts[x] = flat.reshape(n_shells, n_shells)
    return counts
