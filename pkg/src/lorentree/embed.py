"""The lambda-parametrized embedding of a tree into the hyperboloid model.

For a parameter lambda > 1, every vertex v of a tree with base vertex w is
sent to the vector

    f_v = lambda^d delta_w + sqrt(lambda^2-1) * sum_{k=1..d} lambda^(d-k) delta_{u_k}

where (w = u_0, u_1, ..., u_d = v) is the geodesic from the base and the
delta's are coordinate vectors of the quadratic space whose form is -1 at w
and +1 at every other vertex.  Then Q(f_v) = -1, so [f_v] lies on the
hyperboloid, and

    B(f_x, f_y) = -lambda^{d(x,y)},

i.e. cosh of the hyperbolic distance between images is exactly lambda^(tree
distance).  Ends (infinite rays from the base) land on the isotropic cone:
f_xi = delta_w + sqrt(lambda^2-1) sum_{k>=1} lambda^{-k} delta_{xi(k)} has
the closed-form pairings

    B(f_xi, f_v)   = -lambda^{ b_xi(v, w) }       (tree Busemann cocycle),
    B(f_xi, f_eta) = -lambda^{ -2 (xi|eta)_w },    0 when xi = eta.

Tree automorphisms act by linear isometries: pi(g) is determined by
pi(g) f_v = f_{g v}.  Because the family {f_v} is triangular over the
coordinate basis (ordered by depth), pi(g) has closed-form columns

    pi(g) delta_w = f_{g w},
    pi(g) delta_v = ( f_{g v} - lambda f_{g parent(v)} ) / sqrt(lambda^2-1),

which is the triangular solve of f |-> f_{g .} done symbolically.  At
truncation depth D the operator is exact on every column whose defining
image vertices stay inside the ball; remaining columns are truncated and
flagged.  Two independent cross-checks are provided: a literal numeric
triangular solve, and the product of elementary factors from the splitting
g = (flip along a word through the base) o (stabilizer of the base), the
flip factors being the one-edge generators

    delta_w |-> lambda delta_w + sqrt(lambda^2-1) delta_z,
    delta_z |-> -sqrt(lambda^2-1) delta_w - lambda delta_z,
    delta_u |-> delta_{flip u} otherwise.

On boundary vectors the action is scalar up to relabeling:
pi(g) f_xi = lambda^{-beta} f_{g xi} with the integer
beta = b_{g xi}(g w, w); the standard axis translation acts on its
attracting end's line with eigenvalue lambda.

Also here: Klein-model convex combinations of ends (KleinPoint), the weight
function psi_s(v) = sum_xi s_xi lambda^{b_xi(v,w)} with a greedy minimizer
and the codiameter bound cosh d <= sqrt(1 + lambda); the Busemann
compatibility check (hyperbolic Busemann cocycle of an embedded end equals
ln lambda times the tree one); and an exact symbolic calculus on formal
combinations of vertex/boundary images (SymVec) used to verify the two
relations tying together a geodesic flip s, an end-stabilizing n and an
axis-shifting h:

    chi(g) = mu^{-1} chi(n^{-1} h) alpha(n)   for   g = s n s h n s,
    M_3 = chi(h n) pi_0(s) N_3,

where mu, chi, alpha and the transverse blocks M_3, N_3 are read off the
(l_plus, l_minus, F) decomposition with l_plus = f_{xi_plus},
l_minus = -f_{xi_minus} (so B(l_minus, l_plus) = 1).

Backends: "float" (numpy) or "exact" (Fraction; requires lambda^2 - 1 to be
a rational square so that sqrt(lambda^2-1) is rational).
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels
from .quadspace import QuadForm, SparseVec, get_eps, sqrt_scalar
from .trees import (
    FiniteTree,
    PortraitAut,
    Ray,
    ball,
    ball_count,
    c_vertex,
    check_address,
    compose,
    factor_flips,
    gromov_product,
    identity_aut,
    left_mult_aut,
    neighbors,
    parent,
    translation_aut,
    transposition,
    tree_busemann,
    tree_dist,
    xi_minus,
    xi_plus,
)


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

class EmbedConfig:
    """Tree, truncation depth, lambda and scalar backend for the embedding.

    Regular mode: pass a valence `r` (>= 2); vertices are reduced words over
    the letters 1..r and the base is the empty word.  Finite mode: pass a
    FiniteTree; only vertex-level operations are available (rays and
    automorphisms need the regular machinery).
    """

    def __init__(self, lam, r=None, depth=6, backend="float", tree=None):
        if backend not in ("float", "exact"):
            raise ValueError(f"unknown backend {backend!r}")
        self.backend = backend
        self.exact = backend == "exact"
        lam = Fraction(lam) if self.exact else float(lam)
        if lam <= 1:
            raise ValueError("lambda must exceed 1")
        self.lam = lam
        # sqrt(lambda^2 - 1); raises for the exact backend on non-squares
        self.sq = sqrt_scalar(lam * lam - 1)
        self.depth = int(depth)
        if self.depth < 1:
            raise ValueError("depth must be at least 1")
        if (r is None) == (tree is None):
            raise ValueError("pass exactly one of valence r / FiniteTree")
        self.tree = tree
        if tree is None:
            self.r = int(r)
            if self.r < 2:
                raise ValueError("valence must be at least 2")
            self.base = ()
        else:
            if not isinstance(tree, FiniteTree):
                raise ValueError("tree must be a FiniteTree")
            self.r = None
            self.base = tree.base

    @property
    def is_regular(self):
        return self.tree is None

    def _need_regular(self, what):
        if not self.is_regular:
            raise ValueError(f"{what} requires a regular tree")

    def one(self):
        return Fraction(1) if self.exact else 1.0

    def zero(self):
        return Fraction(0) if self.exact else 0.0

    def lam_pow(self, k):
        """lambda^k for integer k (negative exponents allowed)."""
        return self.lam ** int(k)

    def vertices(self):
        """The depth-D ball, breadth first (parents before children)."""
        if self.is_regular:
            return list(ball(self.r, self.depth))
        return [v for v in self.tree.order if self.tree.depth[v] <= self.depth]

    def depth_of(self, v):
        if self.is_regular:
            return len(check_address(self.r, v))
        return self.tree.depth[v]

    def dist(self, x, y):
        if self.is_regular:
            return tree_dist(x, y)
        return self.tree.dist(x, y)

    def geodesic_from_base(self, v):
        """Vertex list from the base to v, inclusive."""
        if self.is_regular:
            v = check_address(self.r, v)
            return [v[:i] for i in range(len(v) + 1)]
        return self.tree.geodesic(self.base, v)

    def _check_depth(self, v):
        d = self.depth_of(v)
        if d > self.depth:
            raise ValueError(
                f"depth exceeded: vertex at distance {d} > {self.depth}")
        return d


def vertex_form(cfg: EmbedConfig) -> QuadForm:
    """The index-one form of the embedding: -1 at the base, +1 elsewhere."""
    return QuadForm.minkowski(cfg.base)


# ---------------------------------------------------------------------------
# Vertex and boundary images
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VertexImage:
    v: object
    fv: SparseVec


def _fdict(cfg, v):
    """{vertex: coefficient} of f_v; v may lie beyond the truncation depth."""
    path = cfg.geodesic_from_base(v)
    d = len(path) - 1
    out = {path[0]: cfg.lam_pow(d)}
    for k in range(1, d + 1):
        out[path[k]] = cfg.sq * cfg.lam_pow(d - k)
    return out


def embed_vertex(cfg: EmbedConfig, v) -> VertexImage:
    """f_v over the geodesic [w, v]; Q(f_v) = -1."""
    cfg._check_depth(v)
    if cfg.is_regular:
        v = check_address(cfg.r, v)
    return VertexImage(v, SparseVec(_fdict(cfg, v)))


@dataclass(frozen=True)
class BoundaryImage:
    """An end of the regular tree, embedded on the isotropic cone.

    The infinite vector is never materialized; pairings use the closed
    forms.  `truncated(D)` is the finite section
    delta_w + sqrt(lambda^2-1) sum_{k=1..D} lambda^{-k} delta_{xi(k)}
    whose Q is exactly -lambda^{-2D}; `tail_bound(D)` bounds the error of
    any pairing computed against the truncation instead of the end.
    """
    cfg: EmbedConfig
    xi: Ray

    @property
    def lam(self):
        return self.cfg.lam

    def truncated(self, depth=None) -> SparseVec:
        cfg = self.cfg
        depth = cfg.depth if depth is None else int(depth)
        out = {cfg.base: cfg.one()}
        for k in range(1, depth + 1):
            out[self.xi.vertex(k)] = cfg.sq * cfg.lam_pow(-k)
        return SparseVec(out)

    def q_truncated(self, depth=None):
        cfg = self.cfg
        depth = cfg.depth if depth is None else int(depth)
        return -cfg.lam_pow(-2 * depth)

    def tail_bound(self, depth=None) -> float:
        cfg = self.cfg
        depth = cfg.depth if depth is None else int(depth)
        lam = float(cfg.lam)
        return lam ** (-2 * depth) / (1.0 - lam ** -2)


def boundary_image(cfg: EmbedConfig, xi: Ray) -> BoundaryImage:
    cfg._need_regular("boundary embedding")
    if not isinstance(xi, Ray):
        raise ValueError("malformed ray: expected a Ray")
    return BoundaryImage(cfg, xi)


# ---------------------------------------------------------------------------
# Closed-form pairings
# ---------------------------------------------------------------------------

def pair_vertex_vertex(cfg, x, y):
    """B(f_x, f_y) = -lambda^{d(x,y)}."""
    cfg._check_depth(x)
    cfg._check_depth(y)
    return -cfg.lam_pow(cfg.dist(x, y))


def pair_boundary_vertex(cfg, xi, v):
    """B(f_xi, f_v) = -lambda^{b_xi(v,w)}, b_xi(v,w) = |v| - 2 (v|xi)_w."""
    cfg._need_regular("boundary pairing")
    if not isinstance(xi, Ray):
        raise ValueError("malformed ray: expected a Ray")
    d = cfg._check_depth(v)
    return -cfg.lam_pow(d - 2 * gromov_product(tuple(v), xi))


def pair_boundary_boundary(cfg, xi, eta):
    """B(f_xi, f_eta) = -lambda^{-2 (xi|eta)_w}; 0 when the ends coincide."""
    cfg._need_regular("boundary pairing")
    if xi == eta:
        return cfg.zero()
    return -cfg.lam_pow(-2 * gromov_product(xi, eta))


def embedded_distance(cfg, x, y) -> float:
    """Hyperbolic distance between the vertex images, arcosh(lambda^d)."""
    return math.acosh(max(1.0, float(-pair_vertex_vertex(cfg, x, y))))


# ---------------------------------------------------------------------------
# The equivariant representation at truncation depth D
# ---------------------------------------------------------------------------

@dataclass
class EmbedOp:
    """A linear isometry of the truncated embedding space.

    `cols[j]` is the sparse column of basis vertex `basis[j]` (keyed by row
    vertex, support inside the ball).  `valid[j]` says whether the column is
    exact, i.e. both image vertices defining it stayed inside the depth-D
    ball; the other columns are truncations.  For an automorphism moving the
    base by t the whole depth-(D - t) sub-ball is valid, and the basis is
    breadth first, so the valid region always contains that leading block.
    """
    basis: list
    index: dict
    cols: list
    valid: list
    displacement: int
    exact: bool
    base: object

    _matrix_cache: object = field(default=None, repr=False, compare=False)

    @property
    def n(self):
        return len(self.basis)

    def valid_indices(self):
        return [j for j, ok in enumerate(self.valid) if ok]

    @property
    def matrix(self):
        """Dense matrix (float64, or object dtype on the exact backend)."""
        if self._matrix_cache is None:
            if self.exact:
                m = np.full((self.n, self.n), Fraction(0), dtype=object)
            else:
                m = np.zeros((self.n, self.n))
            for j, col in enumerate(self.cols):
                for u, c in col.items():
                    m[self.index[u], j] = c
            self._matrix_cache = m
        return self._matrix_cache

    def apply_vec(self, vec) -> dict:
        """Sparse product; vec is a SparseVec or a {vertex: coeff} dict."""
        acc = {}
        for v, c in vec.items():
            j = self.index.get(v)
            if j is None:
                raise ValueError(f"vector support {v!r} outside the ball")
            for u, a in self.cols[j].items():
                acc[u] = acc.get(u, 0) + c * a
        return acc

    def gram_check(self, eps=None):
        """(ok, residual): B(col_i, col_j) = B(delta_i, delta_j) over valid
        columns; the exact backend demands residual == 0."""
        idx = self.valid_indices()
        res = Fraction(0) if self.exact else 0.0
        for a, i in enumerate(idx):
            ci = self.cols[i]
            for j in idx[a:]:
                cj = self.cols[j]
                small, other = (ci, cj) if len(ci) <= len(cj) else (cj, ci)
                acc = 0
                for u, c in small.items():
                    o = other.get(u)
                    if o is not None:
                        acc += (-c * o) if u == self.base else c * o
                if i == j:
                    acc -= -1 if self.basis[i] == self.base else 1
                r = abs(acc)
                if r > res:
                    res = r
        if self.exact:
            return res == 0, res
        eps = get_eps() if eps is None else eps
        return res <= eps, res


class EquivariantRep:
    """Operator factory and cache for the action on the depth-D ball.

    Operators are keyed by the automorphism's action on the ball, so two
    descriptions of the same map share one entry.  Values are deterministic
    functions of the key, so concurrent duplicate inserts are idempotent.
    """

    def __init__(self, cfg: EmbedConfig):
        cfg._need_regular("the equivariant representation")
        self.cfg = cfg
        self.basis = cfg.vertices()
        self.index = {v: i for i, v in enumerate(self.basis)}
        self._f = {}
        self._ops = {}

    def fdict(self, v) -> dict:
        out = self._f.get(v)
        if out is None:
            out = _fdict(self.cfg, v)
            self._f[v] = out
        return out

    def fmatrix(self) -> np.ndarray:
        """Dense float matrix, column j = f_{basis[j]}; triangular because
        the support of f_v is the geodesic [w, v]."""
        n = len(self.basis)
        m = np.zeros((n, n))
        for j, v in enumerate(self.basis):
            for u, c in self.fdict(v).items():
                m[self.index[u], j] = float(c)
        return m

    def op(self, g) -> EmbedOp:
        images = [g.apply(v) for v in self.basis]
        if len(images[0]) > self.cfg.depth:
            raise ValueError("displacement too large for depth")
        sig = tuple(images)
        cached = self._ops.get(sig)
        if cached is not None:
            return cached
        out = self._build(images)
        self._ops[sig] = out
        return out

    def _build(self, images):
        cfg = self.cfg
        D = cfg.depth
        lam = cfg.lam
        inv_s = 1 / cfg.sq
        cols, valid = [], []
        for j, v in enumerate(self.basis):
            gv = images[j]
            if j == 0:
                full = dict(self.fdict(gv))
                ok = len(gv) <= D
            else:
                gp = images[self.index[parent(v)]]
                ok = len(gv) <= D and len(gp) <= D
                full = dict(self.fdict(gv))
                for u, c in self.fdict(gp).items():
                    full[u] = full.get(u, 0) - lam * c
                for u in list(full):
                    full[u] *= inv_s
            cols.append({u: c for u, c in full.items()
                         if u in self.index and c != 0})
            valid.append(ok)
        return EmbedOp(basis=self.basis, index=self.index, cols=cols,
                       valid=valid, displacement=len(images[0]),
                       exact=cfg.exact, base=cfg.base)


def equivariant_rep(cfg: EmbedConfig) -> EquivariantRep:
    """The per-config operator cache (created once, stored on the config)."""
    rep = getattr(cfg, "_rep", None)
    if rep is None:
        rep = EquivariantRep(cfg)
        cfg._rep = rep
    return rep


def represent(cfg: EmbedConfig, g) -> EmbedOp:
    """The operator with pi(g) f_v = f_{g v}, exact on its valid columns."""
    return equivariant_rep(cfg).op(g)


def equivariance_residual(cfg, g, op=None):
    """max over valid v of the largest coefficient of pi(g) f_v - f_{g v}."""
    rep = equivariant_rep(cfg)
    if op is None:
        op = rep.op(g)
    res = Fraction(0) if cfg.exact else 0.0
    for j, v in enumerate(rep.basis):
        if not op.valid[j]:
            continue
        acc = dict(op.apply_vec(rep.fdict(v)))
        for u, c in rep.fdict(g.apply(v)).items():
            acc[u] = acc.get(u, 0) - c
        for c in acc.values():
            r = abs(c)
            if r > res:
                res = r
    return res


def generator_op(cfg: EmbedConfig, g) -> EmbedOp:
    """The one-edge elementary operator for a flip through the base.

    g is either the edge label z itself or an automorphism equal to the
    flip v |-> z.v (verified on a probe ball); columns per the module
    docstring.
    """
    cfg._need_regular("generator operators")
    if isinstance(g, (int, np.integer)):
        z = int(g)
    else:
        base = g.apply(())
        if len(base) != 1:
            raise ValueError("not an edge flip at the base: the base moves "
                             f"to {base!r}")
        z = base[0]
        flip = left_mult_aut(cfg.r, (z,))
        for v in ball(cfg.r, min(cfg.depth, 4)):
            if g.apply(v) != flip.apply(v):
                raise ValueError(
                    f"not an edge flip at the base: differs at {v!r}")
    if not 1 <= z <= cfg.r:
        raise ValueError(f"edge label {z} out of range")
    rep = equivariant_rep(cfg)
    D = cfg.depth
    zv = (z,)
    cols, valid = [], []
    for v in rep.basis:
        if v == ():
            cols.append({(): cfg.lam, zv: cfg.sq})
            valid.append(True)
        elif v == zv:
            cols.append({(): -cfg.sq, zv: -cfg.lam})
            valid.append(True)
        else:
            gu = (zv + v) if v[0] != z else v[1:]
            ok = len(gu) <= D
            cols.append({gu: cfg.one()} if ok else {})
            valid.append(ok)
    return EmbedOp(basis=rep.basis, index=rep.index, cols=cols, valid=valid,
                   displacement=1, exact=cfg.exact, base=cfg.base)


def flip_product_matrix(cfg, g):
    """(matrix, n_sub): pi(g) as the product of elementary flip factors and
    the permutation operator of the base-stabilizing part, per g = L_b o k.

    Float matrices.  The product agrees with represent(cfg, g) entrywise on
    the first n_sub columns (the depth-(D - |b|) sub-ball), where no factor
    can push support out of the ball.
    """
    rep = equivariant_rep(cfg)
    n = len(rep.basis)
    b, k = factor_flips(g)
    m = np.zeros((n, n))
    for j, v in enumerate(rep.basis):
        m[rep.index[k.apply(v)], j] = 1.0
    for z in reversed(b):
        gm = generator_op(cfg, int(z)).matrix
        if gm.dtype == object:
            gm = gm.astype(float)
        m = gm @ m
    n_sub = ball_count(cfg.r, cfg.depth - len(b))
    return m, n_sub


def triangular_solve_matrix(cfg, g):
    """(matrix, n_sub): the literal numeric solve of pi(g) f_v = f_{g v}.

    Solves X T' = T_g where T' collects f_v over the depth-(D - t) sub-ball
    (their supports stay inside that sub-ball, so T' is square triangular)
    and T_g collects f_{g v} in full-ball coordinates.  Float only; this is
    the numeric twin of the closed-form columns represent() produces.
    """
    rep = equivariant_rep(cfg)
    t = len(g.apply(()))
    if t > cfg.depth:
        raise ValueError("displacement too large for depth")
    n_sub = ball_count(cfg.r, cfg.depth - t)
    n = len(rep.basis)
    tsub = rep.fmatrix()[:n_sub, :n_sub]
    tg = np.zeros((n, n_sub))
    for j in range(n_sub):
        for u, c in rep.fdict(g.apply(rep.basis[j])).items():
            tg[rep.index[u], j] = float(c)
    return np.linalg.solve(tsub.T, tg.T).T, n_sub


# ---------------------------------------------------------------------------
# Boundary action
# ---------------------------------------------------------------------------

def boundary_scale(cfg, g, xi: Ray):
    """(scale, g xi) with pi(g) f_xi = scale * f_{g xi}.

    scale = lambda^{-beta}, beta = b_{g xi}(g w, w) an integer, hence exact
    in both backends.  A step-one translation toward its fixed end xi gets
    scale lambda there.
    """
    cfg._need_regular("boundary action")
    gxi = g.apply_ray(xi)
    beta = tree_busemann(gxi, g.apply(()), ())
    return cfg.lam_pow(-beta), gxi


def boundary_action_gap(cfg, g, xi: Ray) -> float:
    """Coefficient gap between pi(g)(truncated f_xi) and the scaled
    truncated f_{g xi}, measured on the sub-ball no truncation effect can
    reach (depth <= D - displacement - 1)."""
    op = represent(cfg, g)
    scale, gxi = boundary_scale(cfg, g, xi)
    got = op.apply_vec(boundary_image(cfg, xi).truncated())
    want = {u: scale * c
            for u, c in boundary_image(cfg, gxi).truncated().items()}
    cut = cfg.depth - op.displacement - 1
    gap = 0.0
    for u in set(got) | set(want):
        if len(u) <= cut:
            gap = max(gap, abs(float(got.get(u, 0) - want.get(u, 0))))
    return gap


# ---------------------------------------------------------------------------
# Distance identity
# ---------------------------------------------------------------------------

def distance_identity_check(cfg):
    """max over ball pairs of |B(f_x,f_y) + lambda^d| / lambda^d.

    Float regular trees go through the dense coefficient matrix and the
    distance-table kernel; the exact backend (and finite trees) use a
    sparse sweep.  Exact result must be identically zero.
    """
    verts = cfg.vertices()
    if not cfg.exact and cfg.is_regular:
        fm = equivariant_rep(cfg).fmatrix()
        jd = np.ones(len(verts))
        jd[0] = -1.0
        gram = fm.T @ (jd[:, None] * fm)
        addr = np.full((len(verts), max(cfg.depth, 1)), -1, dtype=np.int64)
        lengths = np.zeros(len(verts), dtype=np.int64)
        for i, v in enumerate(verts):
            if v:
                addr[i, :len(v)] = v
            lengths[i] = len(v)
        powers = float(cfg.lam) ** dist_float(cfg, addr, lengths)
        return float(np.max(np.abs(-gram - powers) / powers))
    fds = [_fdict(cfg, v) for v in verts]
    worst = cfg.zero()
    for i, vi in enumerate(verts):
        fi = fds[i]
        for j in range(i, len(verts)):
            fj = fds[j]
            small, other = (fi, fj) if len(fi) <= len(fj) else (fj, fi)
            acc = 0
            for u, c in small.items():
                o = other.get(u)
                if o is not None:
                    acc += (-c * o) if u == cfg.base else c * o
            target = cfg.lam_pow(cfg.dist(vi, verts[j]))
            rel = abs(acc + target) / target
            if rel > worst:
                worst = rel
    return worst


def dist_float(cfg, addr, lengths):
    return kernels.dist_table(addr, lengths).astype(float)


# ---------------------------------------------------------------------------
# Klein-model combinations of ends
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KleinPoint:
    """y = sum s_xi f_xi over finitely many ends, weights positive, sum 1.

    The base coefficient of y is 1, so y is a Klein-model representative;
    Q(y) < 0 whenever at least two distinct ends carry weight.
    """
    rays: tuple
    weights: tuple

    def __post_init__(self):
        if len(self.rays) < 2:
            raise ValueError("need at least two rays")
        if len(set(self.rays)) != len(self.rays):
            raise ValueError("rays must be distinct")
        for xi in self.rays:
            if not isinstance(xi, Ray):
                raise ValueError("malformed ray: expected a Ray")
        if len(self.weights) != len(self.rays):
            raise ValueError("one weight per ray")
        if any(not w > 0 for w in self.weights):
            raise ValueError("weights must be positive")
        total = sum(self.weights)
        ok = total == 1 if isinstance(total, (Fraction, int)) \
            else abs(total - 1) <= 1e-9
        if not ok:
            raise ValueError("weights must sum to 1")


def klein_point(rays, weights) -> KleinPoint:
    """KleinPoint with the weights normalized to unit sum."""
    weights = list(weights)
    total = sum(weights)
    if not total > 0:
        raise ValueError("weights must be positive")
    return KleinPoint(tuple(rays), tuple(w / total for w in weights))


def psi_value(cfg, kp: KleinPoint, v):
    """psi_s(v) = sum s_xi lambda^{b_xi(v, w)} = -B(y, f_v)."""
    d = len(v)
    return sum(w * cfg.lam_pow(d - 2 * gromov_product(v, xi))
               for xi, w in zip(kp.rays, kp.weights))


def klein_q(cfg, kp: KleinPoint):
    """Q(y) = sum_{xi != eta} s_xi s_eta B(f_xi, f_eta), negative for a
    valid KleinPoint."""
    acc = cfg.zero()
    for i, xi in enumerate(kp.rays):
        for j, eta in enumerate(kp.rays):
            if i != j:
                acc += kp.weights[i] * kp.weights[j] \
                    * pair_boundary_boundary(cfg, xi, eta)
    return acc


def psi_min(cfg, kp: KleinPoint):
    """A vertex minimizing psi_s over the ball, by greedy descent from the
    base; among equal values the vertex closest to the base (then smallest
    address) wins.  psi_s decreases along the geodesic toward its minimum
    and strictly grows outside the convex hull of the rays, which keeps the
    greedy walk exact; the exhaustive sweep is available as an oracle."""
    cfg._need_regular("psi minimization")
    cur = cfg.base
    cur_key = (psi_value(cfg, kp, cur), len(cur), cur)
    for _ in range(4 * (cfg.depth + 2) * (cfg.depth + 2)):
        best = cur_key
        for nb in neighbors(cfg.r, cur):
            if len(nb) > cfg.depth:
                continue
            key = (psi_value(cfg, kp, nb), len(nb), nb)
            if key < best:
                best = key
        if best == cur_key:
            return cur
        cur, cur_key = best[2], best
    raise RuntimeError("psi descent failed to settle")


def exhaustive_psi_min(cfg, kp: KleinPoint, depth=None):
    """Oracle: the same (value, depth, address) minimum over the full ball."""
    cfg._need_regular("psi minimization")
    depth = cfg.depth if depth is None else depth
    return min(ball(cfg.r, depth),
               key=lambda v: (psi_value(cfg, kp, v), len(v), v))


def codiameter_bound(cfg) -> float:
    """arcosh sqrt(1 + lambda), the distance bound to the vertex images."""
    return math.acosh(math.sqrt(1.0 + float(cfg.lam)))


def codiameter_check(cfg, kp: KleinPoint) -> float:
    """Hyperbolic distance from [y] to the image of the psi-minimizer.

    cosh d = psi_s(v0) / sqrt(-Q(y)) since B(y, f_v) = -psi_s(v); raises
    when Q(y) fails to be negative (degenerate ray set).
    """
    qy = klein_q(cfg, kp)
    if not qy < 0:
        raise ValueError("ray-set degeneracy: Q(y) >= 0")
    v0 = psi_min(cfg, kp)
    cosh = float(psi_value(cfg, kp, v0)) / math.sqrt(-float(qy))
    return math.acosh(max(1.0, cosh))


# ---------------------------------------------------------------------------
# Busemann compatibility and translation length
# ---------------------------------------------------------------------------

def busemann_compat(cfg, xi: Ray, x, y):
    """(lhs, rhs): the hyperbolic Busemann cocycle of the embedded end
    against ln(lambda) times the tree cocycle.

    lhs = log|B(f_xi, f_x)| - log|B(f_xi, f_y)| (no Q corrections: both
    vertex images have Q = -1), with the pairings in closed form; those
    closed forms are validated against truncated sums elsewhere, which is
    what makes this check non-circular.
    """
    bx = float(pair_boundary_vertex(cfg, xi, x))
    by = float(pair_boundary_vertex(cfg, xi, y))
    lhs = math.log(abs(bx)) - math.log(abs(by))
    rhs = tree_busemann(xi, x, y) * math.log(float(cfg.lam))
    return lhs, rhs


def translation_length_estimate(cfg, a, n: int) -> float:
    """d(Psi w, Psi a^n w) / n = arcosh(lambda^{d(w, a^n w)}) / n.

    For a step-one translation this converges to ln lambda with error at
    most ln(2)/n.
    """
    cfg._need_regular("translation length")
    if n < 1:
        raise ValueError("n must be >= 1")
    v = ()
    for _ in range(n):
        v = a.apply(v)
    d = len(v)
    if d > cfg.depth:
        raise ValueError(f"depth exceeded: a^{n} moves the base by {d}")
    return math.acosh(float(cfg.lam) ** d) / n


# ---------------------------------------------------------------------------
# Symbolic combinations of vertex and boundary images
# ---------------------------------------------------------------------------

class SymVec:
    """Formal linear combination of atoms ('v', address) and ('e', Ray).

    Pairings and the automorphism action are evaluated through the closed
    forms, so on the exact backend every computation downstream is exact
    rational arithmetic even though the boundary vectors are infinite.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {k: c for k, c in dict(terms or {}).items() if c != 0}

    @classmethod
    def vertex(cls, v):
        return cls({("v", tuple(v)): 1})

    @classmethod
    def end(cls, xi: Ray):
        return cls({("e", xi): 1})

    def add(self, other) -> "SymVec":
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0) + c
        return SymVec(out)

    def sub(self, other) -> "SymVec":
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0) - c
        return SymVec(out)

    def scale(self, c) -> "SymVec":
        return SymVec({k: c * v for k, v in self.terms.items()})

    def __len__(self):
        return len(self.terms)

    def __repr__(self):
        return f"SymVec({self.terms!r})"


def _atom_pair(cfg, a, b):
    ka, xa = a
    kb, xb = b
    if ka == "v" and kb == "v":
        return -cfg.lam_pow(tree_dist(xa, xb))
    if ka == "e" and kb == "e":
        if xa == xb:
            return cfg.zero()
        return -cfg.lam_pow(-2 * gromov_product(xa, xb))
    if ka == "e":
        xa, xb = xb, xa
    return -cfg.lam_pow(len(xa) - 2 * gromov_product(xa, xb))


def sym_pair(cfg, x: SymVec, y: SymVec):
    """B(x, y) via the closed-form atom pairings (bilinear extension)."""
    acc = cfg.zero()
    for a, ca in x.terms.items():
        for b, cb in y.terms.items():
            acc += ca * cb * _atom_pair(cfg, a, b)
    return acc


def sym_apply(cfg, g, x: SymVec) -> SymVec:
    """pi(g) x: vertex atoms are relabeled, boundary atoms are relabeled and
    scaled by lambda^{-b_{g xi}(g w, w)}."""
    out = {}
    for (kind, val), c in x.terms.items():
        if kind == "v":
            key = ("v", g.apply(val))
        else:
            scale, gxi = boundary_scale(cfg, g, val)
            key = ("e", gxi)
            c = c * scale
        out[key] = out.get(key, 0) + c
    return SymVec(out)


def sym_project_transverse(cfg, x: SymVec, lp: SymVec, lm: SymVec) -> SymVec:
    """Component of x transverse to the isotropic pair (l+, l-) with
    B(l-, l+) = 1: x - B(x,l-) l+ - B(x,l+) l-."""
    return x.sub(lp.scale(sym_pair(cfg, x, lm))) \
            .sub(lm.scale(sym_pair(cfg, x, lp)))


# ---------------------------------------------------------------------------
# The flip/stabilizer/shift relation checks
# ---------------------------------------------------------------------------

def _aut_pow(g, k: int):
    if k == 0:
        return identity_aut(g.r)
    h = g if k > 0 else g.inverse()
    out = h
    for _ in range(abs(k) - 1):
        out = compose(out, h)
    return out


def axis_ray_map(r, ray1, ray2, window=48, protect=None):
    """A base-fixing automorphism sending ray1 to ray2.

    Local permutations are prescribed along ray1 from the divergence depth
    out to `window` (mapping the ray letters across and keeping the parent
    chain consistent) and completed canonically elsewhere; in particular
    vertices off the prescribed path — the shared initial segment and
    everything outside the two rays' subtrees — are fixed whenever the
    canonical completion is the identity there.  `protect` optionally pins
    extra directions: {depth: {letter: letter}} entries are added to the
    prescription at that depth.

    The construction is verified by applying the result to ray1; if the
    canonical completion fails to continue the pattern past the window the
    error says so (raise the window, or the tails are incompatible).
    """
    if not isinstance(ray1, Ray) or not isinstance(ray2, Ray):
        raise ValueError("malformed ray: expected a Ray")
    if ray1 == ray2:
        return identity_aut(r)
    m = gromov_product(ray1, ray2)
    perms = {}
    for k in range(m, window + 1):
        src = {}
        if k >= 1:
            src[ray1.letter(k - 1)] = ray2.letter(k - 1)
        src[ray1.letter(k)] = ray2.letter(k)
        for a, b in (protect or {}).get(k, {}).items():
            if src.get(a, b) != b:
                raise ValueError(f"protected direction {a}->{b} conflicts "
                                 f"with the ray mapping at depth {k}")
            src[a] = b
        if len(set(src.values())) != len(src):
            raise ValueError(f"inconsistent prescription at depth {k}")
        p = list(range(1, r + 1))
        rest_src = [x for x in range(1, r + 1) if x not in src]
        rest_dst = [x for x in range(1, r + 1) if x not in src.values()]
        for a, b in src.items():
            p[a - 1] = b
        for a, b in zip(rest_src, rest_dst):
            p[a - 1] = b
        perms[ray1.vertex(k)] = tuple(p)
    out = PortraitAut(r, (), perms=perms)
    if out.apply_ray(ray1) != ray2:
        raise ValueError("window too small: the canonical completion does "
                         "not continue the ray mapping past it")
    return out


def standard_relation_setup(cfg, j: int, window=48, n0=None):
    """A triple (s, n, h) for parabolic_relation_check.

    s swaps the letters 1 and 2 (hence the two standard ends, fixing the
    base); n = a^j n0 a^-j where n0 defaults to the permutation of 2 and 3
    below the base (any automorphism fixing the base and the attracting end
    but moving c(-1) may be passed instead), so n fixes the attracting end
    and the axis from c(j) on but moves c(j-1); h = (axis-fixing map sending
    a^{-2j} n xi- to s^{-1} n^{-1} xi-) composed with a^{-2j}, so h fixes
    both ends and shifts the axis by -2j.  Needs valence >= 3.
    """
    cfg._need_regular("relation setup")
    r = cfg.r
    if r < 3:
        raise ValueError("relation setup needs valence >= 3")
    if j < 1:
        raise ValueError("j must be >= 1")
    a = translation_aut(r, xi_minus(), xi_plus())
    s = PortraitAut(r, (), const_perm=transposition(r, 1, 2))
    if n0 is None:
        n0 = PortraitAut(r, (), perms={(): transposition(r, 2, 3)})
    elif n0.apply(()) != () or n0.apply_ray(xi_plus()) != xi_plus() \
            or n0.apply(c_vertex(-1)) == c_vertex(-1):
        raise ValueError("n0 must fix the base and the attracting end "
                         "and move c(-1)")
    n = compose(_aut_pow(a, j), compose(n0, _aut_pow(a, -j)))
    ray1 = _aut_pow(a, -2 * j).apply_ray(n.apply_ray(xi_minus()))
    ray2 = compose(n, s).inverse().apply_ray(xi_minus())
    m = gromov_product(ray1, ray2)
    protect = None
    if m == j:
        protect = {j: {xi_minus().letter(j): xi_minus().letter(j)}}
    r_fix = axis_ray_map(r, ray1, ray2, window=window, protect=protect)
    h = compose(r_fix, _aut_pow(a, -2 * j))
    return s, n, h


def parabolic_relation_check(cfg, s, n_elt, h, j=None, scan=8):
    """Residuals of the two block relations for g = s n s h n s.

    Validates the inputs combinatorially first — s fixes the base and swaps
    the standard ends; n_elt fixes the attracting end and the axis from
    c(j) on but not c(j-1); h fixes both ends and shifts c(q) to c(q-2j); g
    fixes c(-j) but not c(-j-1) — then evaluates, exactly on the exact
    backend,

        res_scalar = | chi(g) - mu^{-1} chi(n^{-1} h) alpha(n) |,
        res_transverse = sqrt Q( M3 - chi(h n) pi0(s) N3 ),

    where chi(x) = B(pi(x) l+, l-), mu = B(pi(s) l-, l-),
    alpha(n) = B(pi(n) l-, l-), and M3 / N3 are the transverse components
    of pi(g) l- / pi(n) l-.  Returns a dict of the residuals and the
    extracted scalars.
    """
    cfg._need_regular("relation check")
    xiP, xiM = xi_plus(), xi_minus()
    if s.apply(()) != ():
        raise ValueError("s must fix the base vertex")
    if s.apply_ray(xiP) != xiM or s.apply_ray(xiM) != xiP:
        raise ValueError("s must swap the two standard ends")
    if n_elt.apply_ray(xiP) != xiP:
        raise ValueError("n must fix the attracting end")
    fixed = [m for m in range(-scan, scan + 1)
             if n_elt.apply(c_vertex(m)) == c_vertex(m)]
    if not fixed:
        raise ValueError("n fixes no axis vertex within the scan window")
    j_inferred = min(fixed)
    if any(m not in fixed for m in range(j_inferred, scan + 1)):
        raise ValueError("n does not stabilize a full subray of the axis")
    if j is None:
        j = j_inferred
        if j < 1:
            raise ValueError(f"n lies in K_{j - 1}: it fixes c({j - 1}); "
                             "need n in K_j minus K_{j-1} with j >= 1")
    else:
        j = int(j)
        if j_inferred < j:
            raise ValueError(f"n lies in K_{j - 1}: it fixes c({j - 1})")
        if j_inferred > j:
            raise ValueError(f"n moves c({j}), so it is not in K_{j}")
    for q in range(-2 * j - 3, 2 * j + 4):
        if h.apply(c_vertex(q)) != c_vertex(q - 2 * j):
            raise ValueError(f"h must shift the axis by -2j: fails at c({q})")
    if h.apply_ray(xiP) != xiP or h.apply_ray(xiM) != xiM:
        raise ValueError("h must fix both standard ends")
    g = compose(s, compose(n_elt, compose(s, compose(h, compose(n_elt, s)))))
    if g.apply_ray(xiP) != xiP:
        raise ValueError("h fails the membership postcondition: "
                         "g moves the attracting end")
    if g.apply(c_vertex(-j)) != c_vertex(-j):
        raise ValueError("h fails the membership postcondition: "
                         f"g moves c({-j})")
    if g.apply(c_vertex(-j - 1)) == c_vertex(-j - 1):
        raise ValueError("h fails the membership postcondition: "
                         f"g fixes c({-j - 1})")

    lp = SymVec.end(xiP)
    lm = SymVec.end(xiM).scale(-1)

    def chi(x):
        return sym_pair(cfg, sym_apply(cfg, x, lp), lm)

    mu = sym_pair(cfg, sym_apply(cfg, s, lm), lm)
    if mu == 0:
        raise ValueError("degenerate mu block for s")
    n_lm = sym_apply(cfg, n_elt, lm)
    alpha_n = sym_pair(cfg, n_lm, lm)
    chi_g = chi(g)
    chi_nh = chi(compose(n_elt.inverse(), h))
    res_s = abs(chi_g - chi_nh * alpha_n / mu)

    n3 = sym_project_transverse(cfg, n_lm, lp, lm)
    m3 = sym_project_transverse(cfg, sym_apply(cfg, g, lm), lp, lm)
    s_n3 = sym_project_transverse(cfg, sym_apply(cfg, s, n3), lp, lm)
    diff = m3.sub(s_n3.scale(chi(compose(h, n_elt))))
    q_t = sym_pair(cfg, diff, diff)
    return {
        "j": j,
        "mu": mu,
        "alpha_n": alpha_n,
        "chi_n": chi(n_elt),
        "chi_h": chi(h),
        "chi_g": chi_g,
        "res_scalar": res_s,
        "q_transverse": q_t,
        "res_transverse": math.sqrt(abs(float(q_t))),
    }
