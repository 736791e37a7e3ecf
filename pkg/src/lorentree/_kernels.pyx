# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the hot kernels.

Same contracts as ``lorentree._kernels_py`` (the reference semantics);
``lorentree.kernels`` re-exports whichever module loads.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"


def gromov_table(addr, lengths):
    """(x|y) for all address pairs.

    addr: (N, D) int array of labels padded with -1; lengths: (N,).
    Returns the (N, N) matrix of common-prefix lengths.
    """
    cdef cnp.int64_t[:, ::1] a = np.ascontiguousarray(addr, dtype=np.int64)
    cdef cnp.int64_t[::1] ln = np.ascontiguousarray(lengths, dtype=np.int64)
    cdef Py_ssize_t n = a.shape[0]
    out_arr = np.zeros((n, n), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, k, lim
    cdef cnp.int64_t g
    for i in range(n):
        for j in range(i, n):
            lim = ln[i] if ln[i] < ln[j] else ln[j]
            g = 0
            for k in range(lim):
                if a[i, k] != a[j, k]:
                    break
                g += 1
            out[i, j] = g
            out[j, i] = g
    return out_arr


def dist_table(addr, lengths):
    """Tree distances |x| + |y| - 2 (x|y) for all pairs."""
    g = gromov_table(addr, lengths)
    ln = np.ascontiguousarray(lengths, dtype=np.int64)
    return ln[:, None] + ln[None, :] - 2 * g


def wreath_pair_counts(arrs, inv_arrs, shells, sorted_codes, sorted_idx,
                       n_shells):
    """counts[x, a, b] = #{y : shell(y) = a, shell(y^-1 x) = b}.

    arrs: (G, V) vertex-permutation arrays; inv_arrs: their inverses;
    shells: (G,); sorted_codes/sorted_idx: the group's encoded-and-sorted
    lookup arrays (code = arr . V^arange(V)).
    """
    cdef cnp.int64_t[:, ::1] ar = np.ascontiguousarray(arrs, dtype=np.int64)
    cdef cnp.int64_t[:, ::1] inv = np.ascontiguousarray(inv_arrs,
                                                        dtype=np.int64)
    cdef cnp.int64_t[::1] sh = np.ascontiguousarray(shells, dtype=np.int64)
    cdef cnp.int64_t[::1] codes = np.ascontiguousarray(sorted_codes,
                                                       dtype=np.int64)
    cdef cnp.int64_t[::1] sidx = np.ascontiguousarray(sorted_idx,
                                                      dtype=np.int64)
    cdef Py_ssize_t g = ar.shape[0], nv = ar.shape[1]
    cdef Py_ssize_t ns = int(n_shells)
    cdef cnp.int64_t[::1] powers = nv ** np.arange(nv, dtype=np.int64)
    counts_arr = np.zeros((g, ns, ns), dtype=np.int64)
    cdef cnp.int64_t[:, :, ::1] counts = counts_arr
    cdef Py_ssize_t x, y, v, lo, hi, mid
    cdef cnp.int64_t code
    for x in range(g):
        for y in range(g):
            code = 0
            for v in range(nv):
                code += inv[y, ar[x, v]] * powers[v]
            lo, hi = 0, g  # leftmost position of code in sorted_codes
            while lo < hi:
                mid = (lo + hi) // 2
                if codes[mid] < code:
                    lo = mid + 1
                else:
                    hi = mid
            counts[x, sh[y], sh[sidx[lo]]] += 1
    return counts_arr
