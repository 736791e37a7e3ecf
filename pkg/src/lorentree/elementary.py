"""Elementary actions fixing an isotropic line, rebuilt from (chi, rho, f).

An isometry group fixing the isotropic line L_+ of a quadratic space
L_+ + L_- + F of index one is determined by three pieces of data: a
character chi (the scaling on L_+), an orthogonal representation rho on the
positive-definite part E = j(F), and a cocycle f for the twisted action
tau = chi (x) rho.  `reconstruct_rep` rebuilds the block operator

        [ chi(g)   a(g)      pi_2+(g) ]        a(g)    = -|f(g)|^2/(2 chi(g))
        [ 0        chi(g)^-1 0        ]        pi_2+(v)= -<rho(g) j v, f(g)>
        [ 0        pi_3-(g)  pi_4(g)  ]        pi_3-   = chi(g)^-1 f(g)
                                               pi_4    = rho(g)

(a is pinned by isotropy of the lminus image: 2 a chi^-1 + |pi_3-|^2 = 0;
the same value is what the general block identity alpha = -(chi/2) Q(A3-)
gives, and it is the only choice compatible with the product rule
pi(gh) = pi(g) pi(h) under the cocycle identity.)

in the (lplus, lminus, F) basis; it is Lorentz-orthogonal and fixes lplus
with eigenvalue chi(g).

Group elements are free words over declared generators — relations are
enforced only through the supplied values and checked by sampling.  Words
are tuples of (generator, +-1); plain strings name single generators.

The cocycle tools implement the standard-representative normalization
(subtract the coboundary of v = (tau(a) - 1)^{-1} f(a); the result vanishes
on a and is idempotent), the geometric-series vector sigma(v) with its
explicit tail bound, standard cocycles k -> tau(k) sigma(v) - sigma(v), and
the span I of the cocycle values with the induced invariant decomposition
of the whole quadratic space.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lorentz import LorentzOp, lorentz_form
from .quadspace import get_eps

__all__ = [
    "normalize_word",
    "inverse_word",
    "Character",
    "OrthRep",
    "Cocycle",
    "ElemRepData",
    "reconstruct_rep",
    "extract_elementary",
    "standardize_cocycle",
    "sigma",
    "standard_cocycle_from_v",
    "ieta_span",
    "invariant_decomposition",
]


def normalize_word(w) -> tuple:
    """Canonical word form: tuple of (generator, +-1), strings allowed."""
    if isinstance(w, str):
        return ((w, 1),)
    out = []
    for item in w:
        if isinstance(item, str):
            out.append((item, 1))
        else:
            g, e = item
            if e not in (1, -1):
                raise ValueError(f"exponent {e} must be +-1")
            out.append((g, e))
    return tuple(out)


def inverse_word(w) -> tuple:
    return tuple((g, -e) for g, e in reversed(normalize_word(w)))


class Character:
    """Multiplicative character: generator values extended over words."""

    def __init__(self, values: dict):
        self.values = {g: float(v) for g, v in values.items()}
        for g, v in self.values.items():
            if v == 0:
                raise ValueError(f"character vanishes on {g}")

    def value(self, word) -> float:
        out = 1.0
        for g, e in normalize_word(word):
            out *= self.values[g] ** e
        return out


class OrthRep:
    """Orthogonal representation on E = R^dim, one matrix per generator."""

    def __init__(self, dim: int, values: dict):
        self.dim = dim
        self.values = {}
        for g, m in values.items():
            m = np.asarray(m, dtype=float)
            if m.shape != (dim, dim):
                raise ValueError(f"operator for {g} has shape {m.shape}")
            if np.max(np.abs(m.T @ m - np.eye(dim))) > get_eps():
                raise ValueError(f"operator for {g} fails the Gram test")
            self.values[g] = m

    def value(self, word) -> np.ndarray:
        out = np.eye(self.dim)
        for g, e in normalize_word(word):
            m = self.values[g]
            out = out @ (m if e == 1 else m.T)
        return out


class Cocycle:
    """Cocycle for tau = chi (x) rho: f(gh) = tau(g) f(h) + f(g).

    values maps words (usually single generators) to vectors; evaluation
    extends by the cocycle rule and f(g^-1) = -tau(g^-1) f(g).  A stored
    multi-letter word whose letters are also stored is checked against the
    rule and a disagreement raises (inconsistent data).
    """

    def __init__(self, chi: Character, rho: OrthRep, values: dict):
        self.chi = chi
        self.rho = rho
        self.values = {normalize_word(w): np.asarray(v, dtype=float)
                       for w, v in values.items()}

    def tau(self, word) -> np.ndarray:
        return self.chi.value(word) * self.rho.value(word)

    def value(self, word) -> np.ndarray:
        word = normalize_word(word)
        if word in self.values:
            v = self.values[word]
            if len(word) > 1:
                try:
                    computed = self._compute(word)
                except KeyError:
                    computed = None
                if computed is not None and \
                        np.max(np.abs(computed - v)) > get_eps():
                    raise ValueError(
                        f"stored value at {word} violates the cocycle rule")
            return v
        return self._compute(word)

    def _compute(self, word) -> np.ndarray:
        if len(word) == 0:
            return np.zeros(self.rho.dim)
        if len(word) == 1:
            g, e = word[0]
            if e == 1:
                raise KeyError(f"no cocycle value for generator {g}")
            pos = self.value(((g, 1),))
            return -self.tau(word) @ pos
        head, tail = word[:1], word[1:]
        return self.tau(head) @ self.value(tail) + self.value(head)


@dataclass
class ElemRepData:
    """(chi, rho, f) plus the identification j: F -> E (default identity)."""
    chi: Character
    rho: OrthRep
    f: Cocycle
    jmap: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.jmap is None:
            self.jmap = np.eye(self.rho.dim)
        self.jmap = np.asarray(self.jmap, dtype=float)
        if self.jmap.shape != (self.rho.dim, self.rho.dim):
            raise ValueError("j must be square of the representation size")
        gram = self.jmap.T @ self.jmap - np.eye(self.rho.dim)
        if np.max(np.abs(gram)) > get_eps():
            raise ValueError("j must identify F with E isometrically")

    @property
    def dim(self) -> int:
        return self.rho.dim


def reconstruct_rep(data: ElemRepData, word) -> LorentzOp:
    """The block operator of the elementary action at the given word."""
    k = data.dim
    chi = data.chi.value(word)
    rho = data.rho.value(word)
    fv = data.f.value(word)
    jinv = np.linalg.inv(data.jmap)
    m = np.zeros((2 + k, 2 + k))
    m[0, 0] = chi
    m[1, 1] = 1.0 / chi
    m[0, 1] = -0.5 * float(fv @ fv) / chi
    m[0, 2:] = -(rho @ data.jmap).T @ fv
    m[2:, 1] = jinv @ fv / chi
    m[2:, 2:] = jinv @ rho @ data.jmap
    return LorentzOp(m, lorentz_form(k))


def extract_elementary(op: LorentzOp):
    """Read (chi, rho-matrix, f-vector) back off a reconstructed block.

    Fixes the representative with j = identity; inverse of reconstruct_rep
    on its image.
    """
    m = op.matrix
    chi = float(m[0, 0])
    rho = np.asarray(m[2:, 2:], dtype=float)
    f = chi * np.asarray(m[2:, 1], dtype=float)
    return chi, rho, f


def standardize_cocycle(f: Cocycle, a) -> Cocycle:
    """The cohomologous cocycle vanishing on a (unique standard form).

    f'(g) = f(g) + v - tau(g) v with v = (tau(a) - 1)^{-1} f(a); requires
    |chi(a)| != 1 so the inverse exists.
    """
    a = normalize_word(a)
    chi_a = abs(f.chi.value(a))
    if abs(chi_a - 1.0) <= get_eps():
        raise ValueError("standardization needs |chi(a)| != 1")
    dim = f.rho.dim
    v = np.linalg.solve(f.tau(a) - np.eye(dim), f.value(a))
    new_values = {w: f.value(w) + v - f.tau(w) @ v for w in f.values}
    new_values[a] = np.zeros(dim)
    return Cocycle(f.chi, f.rho, new_values)


def _abs_chi(tau_a: np.ndarray) -> float:
    """|chi| of a twisted operator chi*rho: its spectral norm."""
    return float(np.linalg.norm(tau_a, 2))


def default_tail(tau_a: np.ndarray, rel: float = 1e-12) -> int:
    """Smallest tail with |chi|^-tail / (1 - |chi|^-1) <= rel."""
    c = _abs_chi(tau_a)
    if c <= 1.0:
        raise ValueError("need |chi(a)| > 1 for the series to converge")
    t = 1
    while c ** (-t) / (1.0 - 1.0 / c) > rel:
        t += 1
    return t


def sigma(v, tau_a, tail: int | None = None):
    """sigma(v) = sum_{k>=0} tau(a)^-k v, truncated, with its tail bound.

    Returns (vector, bound) where bound = |chi|^-tail |v| / (1 - |chi|^-1).
    """
    v = np.asarray(v, dtype=float)
    tau_a = np.asarray(tau_a, dtype=float)
    c = _abs_chi(tau_a)
    if c <= 1.0:
        raise ValueError("need |chi(a)| > 1 for the series to converge")
    if tail is None:
        tail = default_tail(tau_a)
    if tail < 1:
        raise ValueError("tail must be >= 1")
    inv = np.linalg.inv(tau_a)
    out = np.zeros_like(v)
    term = v.copy()
    for _ in range(tail):
        out += term
        term = inv @ term
    bound = c ** (-tail) * float(np.linalg.norm(v)) / (1.0 - 1.0 / c)
    return out, bound


def standard_cocycle_from_v(v, chi: Character, rho: OrthRep, a,
                            k0_elements, tail: int | None = None) -> Cocycle:
    """The standard cocycle with f(k) = tau(k) sigma(v) - sigma(v), f(a)=0.

    k0_elements: words of the compact part on which to materialize values.
    """
    a = normalize_word(a)
    tau_a = chi.value(a) * rho.value(a)
    s, _bound = sigma(v, tau_a, tail)
    values = {}
    for k in k0_elements:
        k = normalize_word(k)
        values[k] = (chi.value(k) * rho.value(k)) @ s - s
    values[a] = np.zeros(rho.dim)
    return Cocycle(chi, rho, values)


def ieta_span(f: Cocycle, samples, tol: float = 1e-10):
    """Orthonormal basis of span{f(g) : g in samples}.

    Modified Gram-Schmidt with column pivoting; directions below tol are
    discarded.  Returns a (dim, rank) array.
    """
    cols = [f.value(w) for w in samples]
    if not cols:
        return np.zeros((f.rho.dim, 0))
    mat = np.array(cols, dtype=float).T.copy()
    basis = []
    for _ in range(min(mat.shape)):
        norms = np.linalg.norm(mat, axis=0)
        p = int(np.argmax(norms))
        if norms[p] <= tol:
            break
        q = mat[:, p] / norms[p]
        basis.append(q)
        mat -= np.outer(q, q @ mat)
    if not basis:
        return np.zeros((f.rho.dim, 0))
    return np.array(basis).T


def invariant_decomposition(data: ElemRepData, samples):
    """Split the quadratic space into (H1, H0) from the cocycle span.

    H1 = L_+ + L_- + j^-1(I), H0 = the orthocomplement of I inside F; both
    are invariant under reconstruct_rep of the sampled words, Q has index
    one on H1 and is positive definite on H0.  Requires |chi(a)| != 1 for
    some sampled a (elementary-type mismatch otherwise).
    """
    if all(abs(abs(data.chi.value(w)) - 1.0) <= get_eps() for w in samples):
        raise ValueError("elementary-type mismatch: |chi| = 1 on all samples")
    k = data.dim
    span = ieta_span(data.f, samples)
    jinv = np.linalg.inv(data.jmap)
    f_part = jinv @ span  # I as a subspace of F-coordinates
    # re-orthonormalize (j need not be an isometry)
    f_part, _ = np.linalg.qr(f_part) if f_part.shape[1] else (f_part, None)
    h1 = np.zeros((2 + k, 2 + f_part.shape[1]))
    h1[0, 0] = 1.0
    h1[1, 1] = 1.0
    h1[2:, 2:] = f_part
    # complement of I inside F
    u, s, _ = np.linalg.svd(f_part) if f_part.shape[1] else (
        np.eye(k), np.zeros(0), None)
    rank = int(np.sum(s > 1e-10))
    comp = u[:, rank:]
    h0 = np.zeros((2 + k, comp.shape[1]))
    h0[2:, :] = comp
    return h1, h0
