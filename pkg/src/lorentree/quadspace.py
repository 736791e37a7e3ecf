"""Quadratic spaces of finite index at finite dimension.

A quadratic space is a real vector space H together with a quadratic form Q;
B denotes the symmetric bilinear form polarizing Q, so Q(x) = B(x, x).  The
index of Q is the maximal dimension of an isotropic subspace; index one is
the setting of hyperbolic geometry, with the model form

    Q(x) = sum_{u != w} x_u^2  -  x_w^2

on finitely supported functions over a vertex set with one distinguished
vertex w ("Minkowski" form).  This module provides

  * a dual scalar backend (float64 with a global comparison tolerance, and
    exact rationals via :class:`fractions.Fraction`),
  * :class:`SparseVec`, finitely supported coefficient vectors in canonical
    form,
  * :class:`QuadForm` (Minkowski-diagonal or dense-symmetric),
  * evaluation ``eval_Q`` / ``eval_B``, Sylvester inertia ``index_of``,
    ``pm_decomposition`` into negative/positive definite blocks,
    ``orth_complement``, and the auxiliary positive definite scalar product
    ``aux_scalar_product`` built from a +/- decomposition.

Everything here is a pure function of immutable values; no synchronization
is ever needed.
"""

from __future__ import annotations

import math
import os
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "EPS_DEFAULT",
    "get_eps",
    "set_eps",
    "as_scalar",
    "sqrt_scalar",
    "scalar_is_zero",
    "SparseVec",
    "QuadForm",
    "eval_Q",
    "eval_B",
    "index_of",
    "pm_decomposition",
    "orth_complement",
    "aux_scalar_product",
]

EPS_DEFAULT = 1e-9

# Global float comparison tolerance; the exact backend ignores it entirely.
_EPS = float(os.environ.get("LORENTREE_EPS", EPS_DEFAULT))


def get_eps() -> float:
    """Current float comparison tolerance (env LORENTREE_EPS, default 1e-9)."""
    return _EPS


def set_eps(value: float) -> None:
    global _EPS
    if value <= 0:
        raise ValueError("tolerance must be positive")
    _EPS = float(value)


# ---------------------------------------------------------------------------
# Scalar backend helpers.  A scalar is an int, float, or Fraction; the
# "exact" backend keeps everything in Fraction, the "float" backend in float.
# ---------------------------------------------------------------------------

def as_scalar(x, exact: bool):
    """Coerce ``x`` into the requested backend.

    Exact mode accepts ints, Fractions and strings like ``"5/4"`` or
    ``"1.25"``; floats are accepted too (converted by their exact binary
    value, which is what you want for inputs like 1.25).
    """
    if exact:
        if isinstance(x, str):
            return Fraction(x)
        return Fraction(x)
    return float(x)


def sqrt_scalar(x):
    """Square root preserving the backend.

    For a Fraction the root must be exactly rational (perfect-square
    numerator and denominator), otherwise a ValueError explains that this
    parameter choice is not exactly representable.
    """
    if isinstance(x, Fraction) or isinstance(x, int):
        f = Fraction(x)
        if f < 0:
            raise ValueError("square root of negative scalar")
        rn = math.isqrt(f.numerator)
        rd = math.isqrt(f.denominator)
        if rn * rn != f.numerator or rd * rd != f.denominator:
            raise ValueError(
                f"{f} has no rational square root; use the float backend"
            )
        return Fraction(rn, rd)
    v = float(x)
    if v < 0:
        if v > -get_eps():
            return 0.0
        raise ValueError("square root of negative scalar")
    return math.sqrt(v)


def scalar_is_zero(x) -> bool:
    if isinstance(x, (Fraction, int)):
        return x == 0
    return abs(x) <= get_eps()


def _is_exact(x) -> bool:
    return isinstance(x, (Fraction, int))


# ---------------------------------------------------------------------------
# Sparse vectors
# ---------------------------------------------------------------------------

class SparseVec:
    """Finitely supported coefficient vector over arbitrary hashable ids.

    Canonical form: no stored coefficient is zero (exact zero for rational
    coefficients, |c| <= eps for floats).  All arithmetic returns new
    canonical vectors; instances are treated as immutable values.
    """

    __slots__ = ("c",)

    def __init__(self, items=(), clean: bool = True):
        if isinstance(items, dict):
            d = dict(items)
        else:
            d = {}
            for k, v in items:
                d[k] = d.get(k, 0) + v
        if clean:
            d = {k: v for k, v in d.items() if not scalar_is_zero(v)}
        self.c = d

    @classmethod
    def basis(cls, key, one=1.0) -> "SparseVec":
        """The delta vector at ``key`` (coefficient ``one``)."""
        return cls({key: one}, clean=False)

    @classmethod
    def zero(cls) -> "SparseVec":
        return cls({}, clean=False)

    def get(self, key):
        return self.c.get(key, 0)

    @property
    def support(self):
        return self.c.keys()

    def items(self):
        return self.c.items()

    def is_zero(self) -> bool:
        return not self.c

    def __add__(self, other: "SparseVec") -> "SparseVec":
        d = dict(self.c)
        for k, v in other.c.items():
            d[k] = d.get(k, 0) + v
        return SparseVec(d)

    def __sub__(self, other: "SparseVec") -> "SparseVec":
        d = dict(self.c)
        for k, v in other.c.items():
            d[k] = d.get(k, 0) - v
        return SparseVec(d)

    def __neg__(self) -> "SparseVec":
        return SparseVec({k: -v for k, v in self.c.items()}, clean=False)

    def scale(self, a) -> "SparseVec":
        if scalar_is_zero(a):
            return SparseVec.zero()
        return SparseVec({k: a * v for k, v in self.c.items()})

    __mul__ = scale
    __rmul__ = scale

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseVec):
            return NotImplemented
        keys = set(self.c) | set(other.c)
        for k in keys:
            a, b = self.c.get(k, 0), other.c.get(k, 0)
            if _is_exact(a) and _is_exact(b):
                if a != b:
                    return False
            elif abs(a - b) > get_eps():
                return False
        return True

    __hash__ = None  # mutable-dict backed; never used as a key

    def __repr__(self) -> str:
        inner = ", ".join(f"{k!r}: {v}" for k, v in sorted(
            self.c.items(), key=lambda kv: repr(kv[0])))
        return f"SparseVec({{{inner}}})"


# ---------------------------------------------------------------------------
# Quadratic forms
# ---------------------------------------------------------------------------

class QuadForm:
    """A quadratic form, either Minkowski-diagonal or dense-symmetric.

    kind "minkowski": diag(+1 everywhere, -1 at the distinguished vertex w);
        support is open-ended (any vertex id), so `basis` may be None.
    kind "dense": an explicit symmetric Gram matrix over an ordered basis of
        keys; `gram` is a list of rows (floats or Fractions) and `basis` the
        key list.
    """

    __slots__ = ("kind", "w", "basis", "gram", "_index")

    def __init__(self, kind, w=None, basis=None, gram=None):
        self.kind = kind
        self.w = w
        self.basis = list(basis) if basis is not None else None
        if gram is not None:
            gram = [list(row) for row in gram]
            n = len(gram)
            for row in gram:
                if len(row) != n:
                    raise ValueError("gram matrix must be square")
            for i in range(n):
                for j in range(i):
                    gi, gj = gram[i][j], gram[j][i]
                    if _is_exact(gi) and _is_exact(gj):
                        if gi != gj:
                            raise ValueError("gram matrix must be symmetric")
                    elif abs(gi - gj) > get_eps():
                        raise ValueError("gram matrix must be symmetric")
        self.gram = gram
        self._index = (
            {k: i for i, k in enumerate(self.basis)} if self.basis else None
        )

    @classmethod
    def minkowski(cls, w, basis=None) -> "QuadForm":
        """diag(+1, ..., +1, -1 at w).  `basis` optional truncation list."""
        return cls("minkowski", w=w, basis=basis)

    @classmethod
    def dense(cls, gram, basis=None) -> "QuadForm":
        if basis is None:
            basis = list(range(len(gram)))
        return cls("dense", basis=basis, gram=gram)

    @property
    def dim(self):
        return None if self.basis is None else len(self.basis)

    def key_index(self, key) -> int:
        if self._index is None:
            raise ValueError("form has no truncated basis")
        try:
            return self._index[key]
        except KeyError:
            raise IndexError(f"vertex id {key!r} outside form basis") from None

    def check_support(self, x: SparseVec) -> None:
        if self._index is not None:
            for k in x.support:
                if k not in self._index:
                    raise IndexError(f"vertex id {k!r} outside form basis")

    def comp_functional(self, x: SparseVec):
        """A linear functional strictly nonzero on all negative vectors.

        Used to pick the positive component of the negative cone (and to
        normalize boundary vectors).  For the Minkowski form this is the
        coefficient at w; for a dense form with a negative diagonal entry,
        the coefficient at the first such coordinate.  Otherwise we assume
        the standard Lorentz basis (lplus, lminus, F) with its zero diagonal
        on the isotropic pair and use x_0 - x_1: there Q = 2 x_0 x_1 + |f|^2,
        so Q <= 0 and x != 0 force x_0 - x_1 != 0.
        """
        if self.kind == "minkowski":
            return x.get(self.w)
        b = self.basis
        for i, k in enumerate(b):
            if self.gram[i][i] < 0:
                return x.get(k)
        return x.get(b[0]) - (x.get(b[1]) if len(b) > 1 else 0)

    def to_dense_array(self, exact: bool = False):
        """Materialize the Gram matrix (requires a basis)."""
        if self.basis is None:
            raise ValueError("form has no truncated basis")
        n = len(self.basis)
        if self.kind == "minkowski":
            one = Fraction(1) if exact else 1.0
            rows = [[one * 0] * n for _ in range(n)]
            for i, k in enumerate(self.basis):
                rows[i][i] = -one if k == self.w else one
            return rows
        return [list(r) for r in self.gram]


def eval_B(form: QuadForm, x: SparseVec, y: SparseVec):
    """B(x, y) for the polarized bilinear form (symmetric, bilinear)."""
    form.check_support(x)
    form.check_support(y)
    if form.kind == "minkowski":
        total = 0
        small, big = (x, y) if len(x.c) <= len(y.c) else (y, x)
        for k, v in small.items():
            u = big.get(k)
            if u == 0:
                continue
            total += -v * u if k == form.w else v * u
        return total
    total = 0
    for k, v in x.items():
        i = form.key_index(k)
        row = form.gram[i]
        for k2, v2 in y.items():
            g = row[form.key_index(k2)]
            if g != 0:
                total += v * g * v2
    return total


def eval_Q(form: QuadForm, x: SparseVec):
    """Q(x) = B(x, x)."""
    return eval_B(form, x, x)


# ---------------------------------------------------------------------------
# Inertia, decompositions, complements
# ---------------------------------------------------------------------------

def _congruence_diagonalize(gram):
    """Symmetric congruence diagonalization over exact rationals.

    Returns (diag, P) with P a list of new-basis row vectors (coordinates in
    the old basis) such that P G P^T = diag(diag).  Handles zero diagonal
    pivots by symmetric swaps or the e_i + e_j trick; works over any field
    of characteristic 0.
    """
    n = len(gram)
    a = [[Fraction(v) for v in row] for row in gram]
    p = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for i in range(n):
        if a[i][i] == 0:
            piv = next((j for j in range(i + 1, n) if a[j][j] != 0), None)
            if piv is not None:
                a[i], a[piv] = a[piv], a[i]
                for row in a:
                    row[i], row[piv] = row[piv], row[i]
                p[i], p[piv] = p[piv], p[i]
            else:
                off = next((j for j in range(i + 1, n) if a[i][j] != 0), None)
                if off is None:
                    continue  # row is identically zero: diagonal entry 0
                for k in range(n):
                    a[i][k] += a[off][k]
                for k in range(n):
                    a[k][i] += a[k][off]
                for k in range(n):
                    p[i][k] += p[off][k]
        d = a[i][i]
        if d == 0:
            continue
        for j in range(i + 1, n):
            if a[j][i] == 0:
                continue
            f = a[j][i] / d
            for k in range(n):
                a[j][k] -= f * a[i][k]
            for k in range(n):
                a[k][j] -= f * a[k][i]
            for k in range(n):
                p[j][k] -= f * p[i][k]
    return [a[i][i] for i in range(n)], p


def index_of(form: QuadForm):
    """Sylvester inertia (i_plus, i_minus); the index of Q is their min.

    Raises on a degenerate form (zero eigenvalue within tolerance for the
    float backend, exact zero pivot for rationals).
    """
    if form.basis is None:
        raise ValueError("index_of needs a truncated basis")
    if form.kind == "minkowski":
        n = len(form.basis)
        has_w = form.w in form.basis
        return (n - 1, 1) if has_w else (n, 0)
    g = form.gram
    exact = all(_is_exact(v) for row in g for v in row)
    if exact:
        diag, _ = _congruence_diagonalize(g)
        if any(d == 0 for d in diag):
            raise ValueError("degenerate form: zero congruence pivot")
        return (sum(1 for d in diag if d > 0), sum(1 for d in diag if d < 0))
    arr = np.array(g, dtype=float)
    vals = np.linalg.eigvalsh(arr)
    scale = max(1.0, float(np.max(np.abs(vals))))
    tol = get_eps() * scale
    if np.any(np.abs(vals) <= tol):
        raise ValueError("degenerate form: eigenvalue below tolerance")
    return (int(np.sum(vals > tol)), int(np.sum(vals < -tol)))


def pm_decomposition(form: QuadForm):
    """Split into (basis_minus, basis_plus): B-orthogonal lists of SparseVec,
    with Q negative definite on the first span and positive definite on the
    second.  Dimensions add up to dim(form)."""
    if form.basis is None:
        raise ValueError("pm_decomposition needs a truncated basis")
    if form.kind == "minkowski":
        minus = [SparseVec.basis(form.w)] if form.w in form.basis else []
        plus = [SparseVec.basis(u) for u in form.basis if u != form.w]
        return minus, plus
    g = form.gram
    exact = all(_is_exact(v) for row in g for v in row)
    minus, plus = [], []
    if exact:
        diag, p = _congruence_diagonalize(g)
        if any(d == 0 for d in diag):
            raise ValueError("degenerate form")
        for d, row in zip(diag, p):
            vec = SparseVec({k: c for k, c in zip(form.basis, row)})
            (minus if d < 0 else plus).append(vec)
        return minus, plus
    arr = np.array(g, dtype=float)
    vals, vecs = np.linalg.eigh(arr)
    scale = max(1.0, float(np.max(np.abs(vals))))
    if np.any(np.abs(vals) <= get_eps() * scale):
        raise ValueError("degenerate form")
    for j in range(len(vals)):
        v = vecs[:, j] / math.sqrt(abs(vals[j]))  # normalize |Q| = 1
        vec = SparseVec({k: float(c) for k, c in zip(form.basis, v)})
        (minus if vals[j] < 0 else plus).append(vec)
    return minus, plus


def _materialize(form: QuadForm, x: SparseVec, exact: bool):
    n = len(form.basis)
    if exact:
        out = [Fraction(0)] * n
    else:
        out = [0.0] * n
    for k, v in x.items():
        out[form.key_index(k)] = Fraction(v) if exact else float(v)
    return out


def orth_complement(form: QuadForm, W: Sequence[SparseVec]):
    """Basis of the orthogonal complement of span(W).

    Requires Q restricted to span(W) to be nondegenerate, so that
    span(W) (+) complement is all of the ambient space; otherwise raises,
    naming a vector of the radical of Q|_W.
    """
    if form.basis is None:
        raise ValueError("orth_complement needs a truncated basis")
    m = len(W)
    gram_w = [[eval_B(form, W[i], W[j]) for j in range(m)] for i in range(m)]
    exact = all(_is_exact(v) for row in gram_w for v in row)
    # Degeneracy of Q|_W: find a null combination of W if one exists.
    null = _kernel_vector(gram_w, exact)
    if null is not None:
        bad = SparseVec.zero()
        for c, w in zip(null, W):
            bad = bad + w.scale(c)
        raise ValueError(
            f"form restricted to span(W) is degenerate; null vector {bad!r}"
        )
    # Solve B(w_a, x) = 0 for x over the form basis.
    n = len(form.basis)
    rows = []
    for w in W:
        coords = _materialize(form, w, exact)
        if form.kind == "minkowski":
            row = list(coords)
            iw = form.key_index(form.w) if form.w in form._index else None
            if iw is not None:
                row[iw] = -row[iw]
        else:
            row = [
                sum(coords[i] * (Fraction(form.gram[i][j]) if exact
                                 else float(form.gram[i][j]))
                    for i in range(n))
                for j in range(n)
            ]
        rows.append(row)
    kernel = _kernel_basis(rows, n, exact)
    return [
        SparseVec({k: c for k, c in zip(form.basis, vec)}) for vec in kernel
    ]


def _kernel_vector(gram, exact: bool):
    """A nonzero kernel vector of the small symmetric matrix, or None."""
    m = len(gram)
    if m == 0:
        return None
    if exact:
        basis = _kernel_basis([list(row) for row in gram], m, True)
        return basis[0] if basis else None
    arr = np.array([[float(v) for v in row] for row in gram])
    u, s, vt = np.linalg.svd(arr)
    scale = max(1.0, float(s[0]) if len(s) else 1.0)
    if s[-1] <= get_eps() * scale:
        return [float(c) for c in vt[-1]]
    return None


def _kernel_basis(rows, n, exact: bool):
    """Kernel basis of the linear map given by `rows` (each length n)."""
    if exact:
        a = [[Fraction(v) for v in row] for row in rows]
        pivots = []
        r = 0
        for c in range(n):
            piv = next((i for i in range(r, len(a)) if a[i][c] != 0), None)
            if piv is None:
                continue
            a[r], a[piv] = a[piv], a[r]
            d = a[r][c]
            a[r] = [v / d for v in a[r]]
            for i in range(len(a)):
                if i != r and a[i][c] != 0:
                    f = a[i][c]
                    a[i] = [vi - f * vr for vi, vr in zip(a[i], a[r])]
            pivots.append(c)
            r += 1
            if r == len(a):
                break
        free = [c for c in range(n) if c not in pivots]
        out = []
        for c in free:
            vec = [Fraction(0)] * n
            vec[c] = Fraction(1)
            for i, pc in enumerate(pivots):
                vec[pc] = -a[i][c]
            out.append(vec)
        return out
    arr = np.array([[float(v) for v in row] for row in rows], dtype=float)
    if arr.size == 0:
        return [list(np.eye(n)[i]) for i in range(n)]
    u, s, vt = np.linalg.svd(arr, full_matrices=True)
    scale = max(1.0, float(s[0]) if len(s) else 1.0)
    rank = int(np.sum(s > get_eps() * scale))
    return [[float(x) for x in vt[i]] for i in range(rank, n)]


def _solve_dense(a, b, exact: bool):
    """Solve the small square system a x = b in the right backend."""
    m = len(a)
    if exact:
        aug = [[Fraction(v) for v in row] + [Fraction(b[i])]
               for i, row in enumerate(a)]
        for c in range(m):
            piv = next((i for i in range(c, m) if aug[i][c] != 0), None)
            if piv is None:
                raise ValueError("singular system")
            aug[c], aug[piv] = aug[piv], aug[c]
            d = aug[c][c]
            aug[c] = [v / d for v in aug[c]]
            for i in range(m):
                if i != c and aug[i][c] != 0:
                    f = aug[i][c]
                    aug[i] = [vi - f * vc for vi, vc in zip(aug[i], aug[c])]
        return [aug[i][m] for i in range(m)]
    return list(np.linalg.solve(
        np.array(a, dtype=float), np.array(b, dtype=float)))


def aux_scalar_product(form: QuadForm, decomp):
    """Positive definite scalar product <x,y> = B(x+,y+) - B(x-,y-).

    `decomp` is a (basis_minus, basis_plus) pair as produced by
    pm_decomposition; x- is the B-orthogonal projection of x onto the span
    of basis_minus, and x+ = x - x-.  Returns an evaluator closure.
    """
    minus, _plus = decomp
    m = len(minus)
    gram_minus = [
        [eval_B(form, minus[i], minus[j]) for j in range(m)] for i in range(m)
    ]
    exact = all(_is_exact(v) for row in gram_minus for v in row)

    def project_minus(x: SparseVec) -> SparseVec:
        if m == 0:
            return SparseVec.zero()
        rhs = [eval_B(form, mi, x) for mi in minus]
        coords = _solve_dense(gram_minus, rhs, exact)
        out = SparseVec.zero()
        for c, mi in zip(coords, minus):
            out = out + mi.scale(c)
        return out

    def aux(x: SparseVec, y: SparseVec):
        xm, ym = project_minus(x), project_minus(y)
        xp, yp = x - xm, y - ym
        return eval_B(form, xp, yp) - eval_B(form, xm, ym)

    return aux
