"""Isometry calculus on a quadratic space of index one, in block form.

Everything here works over the ordered basis (l+, l-, f_1, ..., f_k) where
(l+, l-) spans a hyperbolic plane of isotropic vectors with B(l+, l-) = 1
and F = span(f_i) is positive definite orthonormal; the Gram matrix is

    J = [[0, 1], [1, 0]] (+) Id_k.

The stabilizer of the isotropic line R l+ inside the orthogonal group
consists exactly of the block matrices

    [ lambda   alpha    A2+ ]
    [   0    lambda^-1   0  ]
    [   0      A3-      A4  ]

with A4 orthogonal on F and the derived entries

    alpha  = -(lambda/2) Q(A3-),       A2+(v) = -lambda B(A4 v, A3-).

This module provides membership testing with the four blockwise adjoint
conditions, construction from the free parameters (lambda, A3-, A4), the
closed-form inverse and conjugation entry formulas (each cross-checked
against plain matrix arithmetic), elliptic/parabolic/hyperbolic
classification, translation length, and the normalization of a hyperbolic
block to diag(lambda, lambda^-1, A4).

Matrices are numpy arrays: float64 for the float backend or object arrays
of Fractions for the exact backend (classification, which needs spectra, is
float-only and converts on entry).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .hymodel import dist, hpoint
from .quadspace import QuadForm, SparseVec, get_eps

__all__ = [
    "PARABOLIC_RANK_TOL",
    "LorentzOp",
    "OLPlusBlock",
    "IsomClass",
    "lorentz_form",
    "lorentz_basis_labels",
    "is_orthogonal",
    "gram_residual",
    "make_olplus",
    "extract_olplus",
    "invert_olplus",
    "conjugate",
    "conjugate_formula",
    "classify",
    "translation_length",
    "normalize_hyperbolic",
    "apply_vec",
    "load_matrix_text",
    "dump_matrix_text",
]

# Documented convention: parabolic-vs-elliptic rank decisions threshold
# singular values of (M -+ I) and eigenvalue magnitudes at this tolerance.
PARABOLIC_RANK_TOL = 1e-8


def lorentz_basis_labels(k: int):
    return ["lplus", "lminus"] + [f"f{i}" for i in range(1, k + 1)]


def lorentz_form(k: int, exact: bool = False) -> QuadForm:
    """The standard form [[0,1],[1,0]] (+) Id_k over (l+, l-, f...)."""
    one = Fraction(1) if exact else 1.0
    n = k + 2
    g = [[one * 0 for _ in range(n)] for _ in range(n)]
    g[0][1] = g[1][0] = one
    for i in range(2, n):
        g[i][i] = one
    return QuadForm.dense(g, basis=lorentz_basis_labels(k))


def _j_matrix(n: int, exact: bool):
    if exact:
        j = np.zeros((n, n), dtype=object)
        for i in range(n):
            for m in range(n):
                j[i, m] = Fraction(0)
        j[0, 1] = j[1, 0] = Fraction(1)
        for i in range(2, n):
            j[i, i] = Fraction(1)
        return j
    j = np.zeros((n, n))
    j[0, 1] = j[1, 0] = 1.0
    for i in range(2, n):
        j[i, i] = 1.0
    return j


@dataclass(frozen=True)
class LorentzOp:
    """Dense operator over (l+, l-, f...) together with its form."""
    matrix: np.ndarray
    form: QuadForm

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def exact(self) -> bool:
        return self.matrix.dtype == object

    def __matmul__(self, other: "LorentzOp") -> "LorentzOp":
        return LorentzOp(self.matrix @ other.matrix, self.form)


@dataclass(frozen=True)
class OLPlusBlock:
    """Free parameters (lambda, A3-, A4) of an isotropic-line stabilizer."""
    lam: object
    a3minus: np.ndarray
    a4: np.ndarray


@dataclass(frozen=True)
class IsomClass:
    tag: str  # elliptic | parabolic | hyperbolic
    witness: dict


def _as_op(matrix, exact: bool = False) -> LorentzOp:
    arr = np.array(matrix, dtype=object if exact else float)
    k = arr.shape[0] - 2
    return LorentzOp(arr, lorentz_form(k, exact=exact))


def gram_residual(op: LorentzOp):
    """max |M^T J M - J|; exact zero over Fractions means exact membership."""
    n = op.dim
    j = _j_matrix(n, op.exact)
    d = op.matrix.T @ j @ op.matrix - j
    if op.exact:
        return max((abs(v) for v in d.flat), default=Fraction(0))
    return float(np.max(np.abs(d))) if d.size else 0.0


def is_orthogonal(op: LorentzOp):
    """(ok, residual, blocks): Gram test plus the four adjoint conditions.

    blocks maps condition name -> residual for
        A1* A1 + A3* A3 = Id_L        (L columns pair correctly)
        A2* A2 + A4* A4 = Id_F        (F columns pair correctly)
        A1* A2 + A3* A4 = 0           (cross pairing, F -> L)
        A2* A1 + A4* A3 = 0           (cross pairing, L -> F)
    where the adjoints are taken with respect to B on each factor.
    """
    m = op.matrix
    n = op.dim
    if n < 2 or m.shape[0] != m.shape[1]:
        raise ValueError("operator must be square of dimension >= 2")
    exact = op.exact
    jl = np.array([[Fraction(0), Fraction(1)], [Fraction(1), Fraction(0)]],
                  dtype=object) if exact else np.array([[0.0, 1], [1, 0]])
    a1, a2 = m[:2, :2], m[:2, 2:]
    a3, a4 = m[2:, :2], m[2:, 2:]
    a1s = jl @ a1.T @ jl
    a2s = a2.T @ jl
    a3s = jl @ a3.T
    a4s = a4.T
    k = n - 2
    id_l = np.eye(2) if not exact else _j_matrix(2, True) @ jl  # J_L^2 = Id
    id_f = np.eye(k) if not exact else np.array(
        [[Fraction(int(i == j)) for j in range(k)] for i in range(k)],
        dtype=object).reshape(k, k)

    def resid(x):
        if exact:
            return max((abs(v) for v in np.asarray(x).flat),
                       default=Fraction(0))
        x = np.asarray(x, dtype=float)
        return float(np.max(np.abs(x))) if x.size else 0.0

    blocks = {
        "L_columns": resid(a1s @ a1 + a3s @ a3 - id_l),
        "F_columns": resid(a2s @ a2 + a4s @ a4 - id_f),
        "cross_FL": resid(a1s @ a2 + a3s @ a4),
        "cross_LF": resid(a2s @ a1 + a4s @ a3),
    }
    res = gram_residual(op)
    ok = (res == 0) if exact else (res <= get_eps())
    return ok, res, blocks


def make_olplus(block: OLPlusBlock, exact: bool = False) -> LorentzOp:
    """Build the stabilizer element from (lambda, A3-, A4).

    The dependent entries are forced by orthogonality:
    alpha = -(lambda/2) |A3-|^2 makes the image of l- isotropic, and
    A2+ = -lambda (A4^T A3-)^T makes it orthogonal to the image of F.
    """
    lam = Fraction(block.lam) if exact else float(block.lam)
    if lam == 0:
        raise ValueError("lambda must be nonzero")
    a3 = np.array(block.a3minus, dtype=object if exact else float)
    a4 = np.array(block.a4, dtype=object if exact else float)
    k = a3.shape[0]
    if a4.shape != (k, k):
        raise ValueError("A4 shape does not match A3-")
    ortho_resid = a4.T @ a4 - (np.eye(k) if not exact else np.array(
        [[Fraction(int(i == j)) for j in range(k)] for i in range(k)],
        dtype=object).reshape(k, k))
    if exact:
        if any(v != 0 for v in np.asarray(ortho_resid).flat):
            raise ValueError("A4 is not orthogonal on F")
    elif ortho_resid.size and np.max(np.abs(
            np.asarray(ortho_resid, dtype=float))) > get_eps():
        raise ValueError("A4 is not orthogonal on F")
    n = k + 2
    m = np.zeros((n, n), dtype=object if exact else float)
    if exact:
        for i in range(n):
            for jj in range(n):
                m[i, jj] = Fraction(0)
    q_a3 = sum(v * v for v in a3) if exact else float(a3 @ a3)
    alpha = -(lam * q_a3) / 2
    a2row = -(lam) * (a4.T @ a3)
    m[0, 0] = lam
    m[0, 1] = alpha
    m[1, 1] = 1 / lam if not exact else Fraction(1) / lam
    if k:
        m[0, 2:] = a2row
        m[2:, 1] = a3
        m[2:, 2:] = a4
    return LorentzOp(m, lorentz_form(k, exact=exact))


def extract_olplus(op: LorentzOp) -> OLPlusBlock:
    """Read (lambda, A3-, A4) back; error if op is not in block form."""
    m = op.matrix
    lam = m[0, 0]
    k = op.dim - 2

    def iszero(x):
        return x == 0 if op.exact else abs(float(x)) <= get_eps()

    bad = [m[1, 0]] + list(m[2:, 0]) + list(m[1, 2:])
    if not all(iszero(v) for v in bad) or iszero(lam):
        raise ValueError("operator does not stabilize the line R l+")
    if not iszero(m[1, 1] - 1 / (Fraction(lam) if op.exact else float(lam))):
        raise ValueError("(l-, l-) entry is not 1/lambda")
    a3 = m[2:, 1].copy()
    a4 = m[2:, 2:].copy()
    return OLPlusBlock(lam, a3, a4)


def _inv_matrix(a: np.ndarray, exact: bool) -> np.ndarray:
    if not exact:
        return np.linalg.inv(a) if a.size else a.copy()
    n = a.shape[0]
    aug = [[Fraction(a[i, j]) for j in range(n)]
           + [Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for c in range(n):
        piv = next((r for r in range(c, n) if aug[r][c] != 0), None)
        if piv is None:
            raise ValueError("singular matrix")
        aug[c], aug[piv] = aug[piv], aug[c]
        d = aug[c][c]
        aug[c] = [v / d for v in aug[c]]
        for r in range(n):
            if r != c and aug[r][c] != 0:
                f = aug[r][c]
                aug[r] = [vr - f * vc for vr, vc in zip(aug[r], aug[c])]
    out = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            out[i, j] = aug[i][n + j]
    return out


def invert_olplus(op: LorentzOp) -> LorentzOp:
    """Closed-form inverse of a block (mu, B3-, B4):

        [ mu^-1   beta          -mu^-1 B2+ B4^-1 ]
        [   0     mu                  0          ]
        [   0   -mu B4^-1 B3-       B4^-1        ]

    where beta is the (l+, l-) entry of the original operator.  (The (1,2)
    entry of the inverse coincides with beta because B4 is B-orthogonal.)
    """
    blk = extract_olplus(op)
    m = op.matrix
    exact = op.exact
    mu = Fraction(blk.lam) if exact else float(blk.lam)
    k = op.dim - 2
    b2row = m[0, 2:]
    beta = m[0, 1]
    b4inv = _inv_matrix(np.asarray(blk.a4), exact)
    out = np.zeros_like(m)
    if exact:
        for i in range(op.dim):
            for j in range(op.dim):
                out[i, j] = Fraction(0)
    out[0, 0] = 1 / mu
    out[0, 1] = beta
    out[1, 1] = mu
    if k:
        out[0, 2:] = -(1 / mu) * (b2row @ b4inv)
        out[2:, 1] = -(mu) * (b4inv @ np.asarray(blk.a3minus))
        out[2:, 2:] = b4inv
    return LorentzOp(out, op.form)


def conjugate_formula(s: LorentzOp, t: LorentzOp) -> np.ndarray:
    """S T S^-1 assembled from the closed-form entry formulas.

    With S = (mu, beta, B2+, B3-, B4) and T = (lambda, alpha, A2+, A3-, A4):

      (0,0) = lambda                      (1,1) = lambda^-1
      (0,1) = lambda mu beta + mu^2 alpha - mu^2 A2+ B4^-1 B3-
              + lambda^-1 mu beta + mu B2+ A3- - mu B2+ A4 B4^-1 B3-
      (0,F) = -lambda B2+ B4^-1 + mu A2+ B4^-1 + B2+ A4 B4^-1
      (F,1) = lambda^-1 mu B3- + mu B4 A3- - mu B4 A4 B4^-1 B3-
      (F,F) = B4 A4 B4^-1
    """
    sb, tb = extract_olplus(s), extract_olplus(t)
    exact = s.exact
    mu = Fraction(sb.lam) if exact else float(sb.lam)
    lam = Fraction(tb.lam) if exact else float(tb.lam)
    beta = s.matrix[0, 1]
    alpha = t.matrix[0, 1]
    b2 = s.matrix[0, 2:]
    a2 = t.matrix[0, 2:]
    b3, a3 = np.asarray(sb.a3minus), np.asarray(tb.a3minus)
    b4, a4 = np.asarray(sb.a4), np.asarray(tb.a4)
    b4inv = _inv_matrix(b4, exact)
    n = s.dim
    out = np.zeros_like(s.matrix)
    if exact:
        for i in range(n):
            for j in range(n):
                out[i, j] = Fraction(0)
    out[0, 0] = lam
    out[1, 1] = 1 / lam
    k = n - 2
    if k:
        b4ib3 = b4inv @ b3
        out[0, 1] = (lam * mu * beta + mu * mu * alpha
                     - mu * mu * (a2 @ b4ib3)
                     + (1 / lam) * mu * beta
                     + mu * (b2 @ a3)
                     - mu * (b2 @ (a4 @ b4ib3)))
        out[0, 2:] = -lam * (b2 @ b4inv) + mu * (a2 @ b4inv) \
            + (b2 @ a4) @ b4inv
        out[2:, 1] = (1 / lam) * mu * b3 + mu * (b4 @ a3) \
            - mu * (b4 @ (a4 @ b4ib3))
        out[2:, 2:] = b4 @ a4 @ b4inv
    else:
        out[0, 1] = lam * mu * beta + mu * mu * alpha + (1 / lam) * mu * beta
    return out


def conjugate(s: LorentzOp, t: LorentzOp) -> LorentzOp:
    """S T S^-1, verified: entry formulas vs plain product must agree."""
    if s.dim != t.dim:
        raise ValueError("dimension mismatch")
    prod = s.matrix @ t.matrix @ invert_olplus(s).matrix
    formula = conjugate_formula(s, t)
    d = prod - formula
    if s.exact:
        gap = max((abs(v) for v in d.flat), default=Fraction(0))
        if gap != 0:
            raise AssertionError(f"conjugation formulas disagree: gap {gap}")
    else:
        gap = float(np.max(np.abs(d.astype(float))))
        scale = max(1.0, float(np.max(np.abs(prod.astype(float)))))
        if gap > 1e-9 * scale:
            raise AssertionError(f"conjugation formulas disagree: gap {gap}")
    return LorentzOp(prod, t.form)


def _real_kernel(m: np.ndarray, tol: float):
    """Orthonormal basis of the numerical kernel of m (columns)."""
    u, sv, vt = np.linalg.svd(m)
    scale = max(1.0, float(sv[0]) if len(sv) else 1.0)
    keep = [i for i in range(len(sv)) if sv[i] <= tol * scale]
    # svd lists singular values descending; kernel = trailing rows of vt
    rank = len(sv) - len(keep)
    return vt[rank:].T


def classify(op: LorentzOp) -> IsomClass:
    """Elliptic / parabolic / hyperbolic trichotomy.

    hyperbolic: spectral radius > 1 (then the extremal eigenvalue is real
        and its eigenvector isotropic: an axis endpoint);
    elliptic: a fixed negative vector exists (eigenvalue +-1);
    parabolic: neither, with an isotropic fixed line (eigenvalue +-1).

    Exact-backend matrices are converted to float here; rank decisions use
    PARABOLIC_RANK_TOL (documented convention).
    """
    ok, res, _ = is_orthogonal(op)
    if not ok:
        raise ValueError(f"operator fails the Gram test (residual {res})")
    m = np.asarray(op.matrix, dtype=float)
    n = m.shape[0]
    j = _j_matrix(n, False)
    tol = PARABOLIC_RANK_TOL
    eigvals = np.linalg.eigvals(m)
    radius = float(np.max(np.abs(eigvals)))
    if radius > 1.0 + tol:
        # extremal eigenvalues are real with isotropic eigenvectors
        idx = int(np.argmax(np.abs(eigvals)))
        lam = eigvals[idx]
        lam_real = float(np.real(lam))
        plus = _real_kernel(m - lam_real * np.eye(n), 1e-6)
        minus = _real_kernel(m - (1.0 / lam_real) * np.eye(n), 1e-6)
        wit = {
            "lambda_abs": abs(lam_real),
            "length": float(np.log(abs(lam_real))),
            "attracting": plus[:, 0] if plus.size else None,
            "repelling": minus[:, 0] if minus.size else None,
        }
        return IsomClass("hyperbolic", wit)
    # bounded spectrum: look at fixed spaces of +-1
    for sign in (1.0, -1.0):
        kern = _real_kernel(m - sign * np.eye(n), tol)
        if kern.size == 0:
            continue
        small = kern.T @ j @ kern
        vals, vecs = np.linalg.eigh(small)
        if vals[0] < -tol:
            vec = kern @ vecs[:, 0]
            return IsomClass("elliptic", {
                "eigenvalue": sign,
                "fixed_point": vec / np.sqrt(-float(vec @ j @ vec)),
            })
    for sign in (1.0, -1.0):
        kern = _real_kernel(m - sign * np.eye(n), tol)
        if kern.size == 0:
            continue
        small = kern.T @ j @ kern
        vals, vecs = np.linalg.eigh(small)
        if abs(vals[0]) <= tol:
            vec = kern @ vecs[:, 0]
            return IsomClass("parabolic", {
                "eigenvalue": sign,
                "fixed_boundary": vec / np.linalg.norm(vec),
            })
    raise ValueError("no class certified: spectrum on unit circle but no "
                     "+-1 fixed vector found within tolerance")


def apply_vec(op: LorentzOp, x: SparseVec) -> SparseVec:
    """Apply the matrix to a SparseVec over the form's basis labels."""
    basis = op.form.basis
    exact = op.exact
    col = np.zeros(op.dim, dtype=object if exact else float)
    if exact:
        for i in range(op.dim):
            col[i] = Fraction(0)
    for k, v in x.items():
        col[op.form.key_index(k)] = Fraction(v) if exact else float(v)
    out = op.matrix @ col
    return SparseVec({k: out[i] for i, k in enumerate(basis)})


def translation_length(op: LorentzOp, n_max: int = 8) -> float:
    """ln |lambda| for a hyperbolic op, cross-checked on an orbit.

    The orbit of the base point x0 = (l+ - l-)/sqrt(2) satisfies
    d(x0, op^n x0)/n -> length; we verify agreement within C/n_max with
    C = 2 d(x0, op x0) + 2 (coarse displacement bound).
    """
    cls = classify(op)
    if cls.tag != "hyperbolic":
        raise ValueError(f"translation_length needs a hyperbolic op, "
                         f"got {cls.tag}")
    length = cls.witness["length"]
    form = op.form if not op.exact else lorentz_form(op.dim - 2)
    fop = LorentzOp(np.asarray(op.matrix, dtype=float), form)
    x0 = hpoint(form, SparseVec({"lplus": 1.0, "lminus": -1.0}))
    vec = x0.vec
    c_bound = 2.0 * dist(x0, hpoint(form, apply_vec(fop, vec))) + 2.0
    cur = vec
    for _ in range(n_max):
        cur = apply_vec(fop, cur)
    d_n = dist(x0, hpoint(form, cur))
    if abs(d_n / n_max - length) > c_bound / n_max + get_eps():
        raise AssertionError(
            f"orbit estimate {d_n / n_max} disagrees with spectral length "
            f"{length} beyond {c_bound}/{n_max}"
        )
    return length


def normalize_hyperbolic(op: LorentzOp):
    """Find S with S T S^-1 = diag(lambda, lambda^-1, A4), |lambda| != 1.

    Solves (lambda^-1 Id - A4) B3- = -A3- ; reports failure when that matrix
    is singular (A4 having eigenvalue lambda^-1 is non-generic and the
    normalization genuinely fails there).
    """
    blk = extract_olplus(op)
    exact = op.exact
    lam = Fraction(blk.lam) if exact else float(blk.lam)
    if abs(lam) == 1 if exact else abs(abs(float(lam)) - 1.0) <= get_eps():
        raise ValueError("normalization requires |lambda| != 1")
    k = op.dim - 2
    a4 = np.asarray(blk.a4)
    a3 = np.asarray(blk.a3minus)
    if exact:
        mat = np.empty((k, k), dtype=object)
        for i in range(k):
            for j in range(k):
                mat[i, j] = (1 / lam) * Fraction(int(i == j)) \
                    - Fraction(a4[i, j])
        try:
            b3 = _inv_matrix(mat, True) @ (-a3)
        except ValueError:
            raise ValueError(
                "A4 has eigenvalue 1/lambda: normalization fails")
        ident = np.array(
            [[Fraction(int(i == j)) for j in range(k)] for i in range(k)],
            dtype=object).reshape(k, k)
        s = make_olplus(OLPlusBlock(Fraction(1), b3, ident), exact=True)
    else:
        mat = (1.0 / lam) * np.eye(k) - np.asarray(a4, dtype=float)
        sv = np.linalg.svd(mat, compute_uv=False)
        if sv.size and sv[-1] <= 1e-12 * max(1.0, sv[0]):
            raise ValueError(
                "A4 has eigenvalue 1/lambda: normalization fails")
        b3 = np.linalg.solve(mat, -np.asarray(a3, dtype=float))
        s = make_olplus(OLPlusBlock(1.0, b3, np.eye(k)))
    diag = conjugate(s, op)
    # sanity: off-diagonal lower-left entries vanished
    resid_entries = list(np.asarray(diag.matrix[2:, 1]).flat) \
        + [diag.matrix[0, 1]] + list(np.asarray(diag.matrix[0, 2:]).flat)
    if exact:
        if any(v != 0 for v in resid_entries):
            raise AssertionError("normalization left nonzero entries")
    else:
        scale = max(1.0, float(np.max(np.abs(
            np.asarray(op.matrix, dtype=float)))))
        if max(abs(float(v)) for v in resid_entries) > 1e-7 * scale:
            raise AssertionError("normalization left nonzero entries")
    return s, diag


# ---------------------------------------------------------------------------
# Matrix text format (CLI classify): first line "dim basis=lplus,lminus,f..."
# then dim whitespace-separated rows.
# ---------------------------------------------------------------------------

def load_matrix_text(text: str) -> LorentzOp:
    lines = [ln for ln in text.strip().splitlines()
             if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ValueError("empty matrix file")
    head = lines[0].split()
    try:
        dim = int(head[0])
    except (ValueError, IndexError):
        raise ValueError(f"bad header line: {lines[0]!r}") from None
    labels = None
    for tok in head[1:]:
        if tok.startswith("basis="):
            labels = tok[len("basis="):].split(",")
    expected = lorentz_basis_labels(dim - 2)
    if labels is not None and labels != expected:
        raise ValueError(
            f"basis must be {','.join(expected)}, got {','.join(labels)}")
    if len(lines) != dim + 1:
        raise ValueError(f"expected {dim} rows, found {len(lines) - 1}")
    rows = []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != dim:
            raise ValueError(f"row has {len(parts)} entries, expected {dim}")
        try:
            rows.append([float(Fraction(p)) for p in parts])
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"bad matrix entry in row: {ln!r}") from None
    return _as_op(rows)


def dump_matrix_text(op: LorentzOp) -> str:
    labels = ",".join(lorentz_basis_labels(op.dim - 2))
    lines = [f"{op.dim} basis={labels}"]
    for row in np.asarray(op.matrix):
        lines.append(" ".join(str(v) for v in row))
    return "\n".join(lines) + "\n"
