"""Bi-invariant convolution algebra on the horospherical subgroup.

Fix the stabilizer chain K_0 < K_1 < ... inside the group N of tree
automorphisms fixing a horosphere's center and all of its "levels": K_j is
the joint stabilizer of the axis vertex c(j) and the attracting end.  A
compactly supported bi-K_0-invariant function is constant on the shells
K_n - K_{n-1}, so it is a finite linear combination of

    1_{K_0},  chi_n = 1_{K_n - K_{n-1}}  (n >= 1),

encoded here as a coefficient sequence (ShellFn).  With Haar measure
normalized by mu(K_0) = 1 and [K_n : K_{n-1}] = q - 1 (q the tree valence),
the convolution of basis elements closes in shell coordinates:

    chi_n * chi_m = mu(K_n - K_{n-1}) chi_m            (n < m)
    chi_n * chi_n = mu(K_n - K_{n-1}) 1_{K_n} - mu(K_{n-1}) chi_n
    1_{K_0} * f   = f                                  (unit)

All arithmetic in this module is exact rational: there are no tolerances
anywhere.  WreathModel provides an independent brute-force oracle: the
automorphism group of a rooted (q-1)-ary tree of depth m realizes the chain
K_0 < ... < K_m faithfully at finite depth, and convolution by explicit
summation over that finite group must agree with the shell rules.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np

from .kernels import wreath_pair_counts

__all__ = [
    "ShellFn",
    "HaarWeights",
    "unit",
    "chi",
    "ball_fn",
    "convolve",
    "commutator_residual",
    "spherical_phi0",
    "check_spherical",
    "positive_definite_witness",
    "WreathModel",
    "wreath_oracle_convolve",
    "spherical_solution_space",
]


class HaarWeights:
    """Haar measure data for the K_j chain, normalized by mu(K_0) = 1."""

    def __init__(self, q: int):
        if q < 3:
            raise ValueError("valence must be at least 3")
        self.q = q

    def mu_K(self, n: int) -> int:
        if n < 0:
            raise ValueError("negative index")
        return (self.q - 1) ** n

    def mu_shell(self, n: int) -> int:
        """mu(K_n - K_{n-1}); the n = 0 shell is K_0 itself."""
        if n == 0:
            return 1
        return self.mu_K(n) - self.mu_K(n - 1)


class ShellFn:
    """kappa_0 1_{K_0} + sum_n kappa_n chi_n, exact rational coefficients."""

    __slots__ = ("q", "coeffs")

    def __init__(self, q: int, coeffs=()):
        if q < 3:
            raise ValueError("valence must be at least 3")
        cs = [Fraction(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.q = q
        self.coeffs = tuple(cs)

    @property
    def max_shell(self) -> int:
        return len(self.coeffs) - 1

    def coeff(self, n: int) -> Fraction:
        return self.coeffs[n] if 0 <= n < len(self.coeffs) else Fraction(0)

    def is_zero(self) -> bool:
        return not self.coeffs

    def __add__(self, other: "ShellFn") -> "ShellFn":
        if self.q != other.q:
            raise ValueError("valence mismatch")
        n = max(len(self.coeffs), len(other.coeffs))
        return ShellFn(self.q,
                       [self.coeff(i) + other.coeff(i) for i in range(n)])

    def __sub__(self, other: "ShellFn") -> "ShellFn":
        return self + other.scale(-1)

    def scale(self, c) -> "ShellFn":
        c = Fraction(c)
        return ShellFn(self.q, [c * x for x in self.coeffs])

    def __eq__(self, other):
        if not isinstance(other, ShellFn):
            return NotImplemented
        return self.q == other.q and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.q, self.coeffs))

    def __repr__(self):
        return f"ShellFn(q={self.q}, coeffs={self.coeffs})"


def unit(q: int) -> ShellFn:
    return ShellFn(q, (1,))

def chi(q: int, n: int) -> ShellFn:
    if n < 1:
        raise ValueError("chi_n is defined for n >= 1; use unit() for K_0")
    return ShellFn(q, (0,) * n + (1,))

def ball_fn(q: int, n: int) -> ShellFn:
    """1_{K_n} = 1_{K_0} + chi_1 + ... + chi_n."""
    return ShellFn(q, (1,) * (n + 1))


def convolve(f: ShellFn, g: ShellFn) -> ShellFn:
    if f.q != g.q:
        raise ValueError("valence mismatch")
    q = f.q
    haar = HaarWeights(q)
    out = [Fraction(0)] * (max(len(f.coeffs), len(g.coeffs), 1))
    def add(n, c):
        while len(out) <= n:
            out.append(Fraction(0))
        out[n] += c
    for n, fn in enumerate(f.coeffs):
        if fn == 0:
            continue
        for m, gm in enumerate(g.coeffs):
            if gm == 0:
                continue
            c = fn * gm
            if n == 0:
                add(m, c)
            elif m == 0:
                add(n, c)
            elif n != m:
                add(max(n, m), c * haar.mu_shell(min(n, m)))
            else:
                ms = haar.mu_shell(n)
                for i in range(n + 1):
                    add(i, c * ms)
                add(n, -c * haar.mu_K(n - 1))
    return ShellFn(q, out)


def commutator_residual(f: ShellFn, g: ShellFn) -> ShellFn:
    """f*g - g*f; identically zero since the pair is commutative."""
    return convolve(f, g) - convolve(g, f)


def spherical_phi0(q: int) -> ShellFn:
    """The normalized spherical function 1_{K_0} - chi_1/(q-2)."""
    if q < 3:
        raise ValueError("no spherical function of this form below valence 3")
    return ShellFn(q, (1, Fraction(-1, q - 2)))


def _proportionality(conv: ShellFn, phi: ShellFn):
    """Return c with conv = c*phi, or None if not proportional."""
    if conv.is_zero():
        return Fraction(0)
    k = next((i for i, x in enumerate(phi.coeffs) if x != 0), None)
    if k is None:
        return None
    c = conv.coeff(k) / phi.coeffs[k]
    return c if conv == phi.scale(c) else None


def check_spherical(phi: ShellFn, max_shell: int = 5) -> dict:
    """Verify phi * b = c_b phi for each basis element b; return the c_b map.

    Keys are shell indices: 0 for 1_{K_0}, n for chi_n.  Requires the
    normalization phi(e) = kappa_0 = 1.
    """
    if phi.coeff(0) != 1:
        raise ValueError("spherical check requires phi(e) = 1")
    out = {}
    for n in range(max_shell + 1):
        b = unit(phi.q) if n == 0 else chi(phi.q, n)
        c = _proportionality(convolve(phi, b), phi)
        if c is None:
            raise ValueError(
                f"phi * (shell-{n} basis element) is not a multiple of phi")
        out[n] = c
    return out


def positive_definite_witness(phi: ShellFn):
    """Return (c, phi * phi-check) verifying phi * phi-check = c phi, c >= 0.

    Shells are symmetric (each shell contains the inverses of its elements),
    so phi-check = phi for shell functions; the wreath oracle checks that
    identification honestly.
    """
    conv = convolve(phi, phi)
    c = _proportionality(conv, phi)
    if c is None:
        raise ValueError("phi * phi-check is not proportional to phi")
    if c < 0:
        raise ValueError(f"negative witness constant {c}")
    return c, conv


# ---------------------------------------------------------------------------
# Finite wreath-group oracle
# ---------------------------------------------------------------------------

class WreathModel:
    """Aut(rooted (q-1)-ary tree of depth m) as a finite model of K_m.

    The rooted tree is the part of T_q hanging below the axis vertex c(m)
    away from the attracting end; the spine vertex (0,)*(m-j) models c(j).
    K_j is the stabilizer of its flag, [K_j : K_{j-1}] = q - 1, and the
    shell of an element z is the least n with z c(n) = c(n).  Counting
    measure is normalized by mu(K_0) = 1, i.e. weights 1/|K_0-model|.
    """

    MAX_ORDER = 200_000

    def __init__(self, q: int, m: int):
        if q < 3 or m < 1:
            raise ValueError("need q >= 3 and depth m >= 1")
        d = q - 1
        internal = [v for k in range(m) for v in self._level(d, k)]
        order = math.factorial(d) ** len(internal)
        if order > self.MAX_ORDER:
            raise ValueError(f"wreath model order {order} too large")
        self.q, self.m, self.order = q, m, order
        self.vertices = [v for k in range(1, m + 1) for v in self._level(d, k)]
        self.v_index = {v: i for i, v in enumerate(self.vertices)}
        nv = len(self.vertices)
        # materialize every element as a permutation array of the vertices;
        # the image letter at depth k is the node permutation at the
        # original prefix applied to the original letter (portrait action)
        perms_per_node = list(itertools.permutations(range(d)))
        arrs = np.empty((order, nv), dtype=np.int64)
        for ei, choice in enumerate(
                itertools.product(perms_per_node, repeat=len(internal))):
            node_perm = dict(zip(internal, choice))
            for vi, v in enumerate(self.vertices):
                img = tuple(node_perm[v[:k]][a] for k, a in enumerate(v))
                arrs[ei, vi] = self.v_index[img]
        self.arrs = arrs
        self._codes = self._encode(arrs)
        self._sorted = np.argsort(self._codes)
        self._sorted_codes = self._codes[self._sorted]
        # shell of z: least n with the flag (0,)*(m-n) fixed (the root flag
        # at n = m is always fixed); scan n upward, first fixed flag wins
        shells = np.full(order, m, dtype=np.int64)
        assigned = np.zeros(order, dtype=bool)
        for n in range(m):
            flag = self.v_index[(0,) * (m - n)]
            fixed = (arrs[:, flag] == flag) & ~assigned
            shells[fixed] = n
            assigned |= fixed
        self.shells = shells
        self.k0_size = int(np.count_nonzero(shells == 0))
        self._pair_counts = None

    @staticmethod
    def _level(d: int, k: int):
        return list(itertools.product(range(d), repeat=k))

    def _encode(self, arrs: np.ndarray) -> np.ndarray:
        nv = arrs.shape[1]
        if nv ** nv > 2 ** 62:
            raise ValueError("model too large to encode")
        powers = nv ** np.arange(nv, dtype=np.int64)
        return arrs @ powers

    def _index_of(self, arrs: np.ndarray) -> np.ndarray:
        codes = self._encode(arrs)
        pos = np.searchsorted(self._sorted_codes, codes)
        idx = self._sorted[pos]
        if not np.array_equal(self._codes[idx], codes):
            raise AssertionError("product fell outside the group")
        return idx

    def mu_K_from_chain(self, n: int) -> Fraction:
        """mu(K_n) by honest counting: |K_n-model| / |K_0-model|."""
        if not 0 <= n <= self.m:
            raise ValueError("index outside model depth")
        size = int(np.count_nonzero(self.shells <= n))
        return Fraction(size, self.k0_size)

    def pair_counts(self) -> np.ndarray:
        """counts[x, a, b] = #{y : shell(y) = a, shell(y^-1 x) = b}."""
        if self._pair_counts is None:
            inv_arrs = np.argsort(self.arrs, axis=1)
            inv_idx = self._index_of(inv_arrs)
            # shells are symmetric under inversion (phi-check = phi)
            if not np.array_equal(self.shells[inv_idx], self.shells):
                raise AssertionError("shells are not inverse-symmetric")
            self._pair_counts = wreath_pair_counts(
                self.arrs, inv_arrs, self.shells,
                self._sorted_codes, self._sorted, self.m + 1)
        return self._pair_counts


def wreath_oracle_convolve(f: ShellFn, g: ShellFn,
                           model: WreathModel) -> ShellFn:
    """Convolution by explicit summation over the finite wreath group.

    (f*g)(x) = sum_y f(y) g(y^-1 x) / |K_0-model|, evaluated at every x and
    re-expressed in shell coordinates (constancy on shells is asserted).
    """
    if f.q != g.q or f.q != model.q:
        raise ValueError("valence mismatch")
    if max(f.max_shell, g.max_shell, 0) > model.m:
        raise ValueError("model depth insufficient for the supports")
    counts = model.pair_counts()
    m = model.m
    fv = [f.coeff(a) for a in range(m + 1)]
    gv = [g.coeff(b) for b in range(m + 1)]
    out = [None] * (m + 1)
    for x in range(model.order):
        val = Fraction(0)
        cx = counts[x]
        for a in range(m + 1):
            if fv[a] == 0:
                continue
            for b in range(m + 1):
                if gv[b] == 0 or cx[a, b] == 0:
                    continue
                val += fv[a] * gv[b] * int(cx[a, b])
        val /= model.k0_size
        s = int(model.shells[x])
        if out[s] is None:
            out[s] = val
        elif out[s] != val:
            raise AssertionError(
                "oracle convolution is not constant on a shell")
    return ShellFn(f.q, [c if c is not None else Fraction(0) for c in out])


def spherical_solution_space(model: WreathModel):
    """Shell functions whose sum over every K_1-orbit of leaves vanishes.

    The leaves of the wreath model are the truncated horosphere through
    c(0); the K_1-model orbits give one linear condition each.  Returns a
    basis (list of ShellFn) of the solution space over shells 0..m —
    expected to be exactly span{spherical_phi0}.
    """
    m = model.m
    leaves = [v for v in model.vertices if len(v) == m]
    leaf_idx = [model.v_index[v] for v in leaves]
    # shell index of a leaf: m - (number of leading zeros)
    def leaf_shell(v):
        lead = 0
        for a in v:
            if a != 0:
                break
            lead += 1
        return m - lead
    k1 = np.nonzero(model.shells <= 1)[0]
    # orbits of leaves under the K_1 subgroup
    unseen = set(leaf_idx)
    rows = []
    while unseen:
        start = min(unseen)
        orbit = {start}
        frontier = [start]
        while frontier:
            nxt = []
            for i in frontier:
                for e in k1:
                    jdx = int(model.arrs[e, i])
                    if jdx not in orbit:
                        orbit.add(jdx)
                        nxt.append(jdx)
            frontier = nxt
        unseen -= orbit
        row = [Fraction(0)] * (m + 1)
        for i in orbit:
            row[leaf_shell(model.vertices[i])] += 1
        rows.append(row)
    # exact nullspace by Gauss-Jordan elimination
    rows = [r[:] for r in rows]
    ncols = m + 1
    pivots = []
    rix = 0
    for col in range(ncols):
        piv = next((i for i in range(rix, len(rows)) if rows[i][col] != 0),
                   None)
        if piv is None:
            continue
        rows[rix], rows[piv] = rows[piv], rows[rix]
        pv = rows[rix][col]
        rows[rix] = [x / pv for x in rows[rix]]
        for i in range(len(rows)):
            if i != rix and rows[i][col] != 0:
                c = rows[i][col]
                rows[i] = [a - c * b for a, b in zip(rows[i], rows[rix])]
        pivots.append(col)
        rix += 1
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        vec = [Fraction(0)] * ncols
        vec[fc] = Fraction(1)
        for i, pc in enumerate(pivots):
            vec[pc] = -rows[i][fc]
        basis.append(ShellFn(model.q, vec))
    return basis
