"""Regular and finite trees, rays, and lazy automorphisms via portraits.

Vertices of the r-regular tree T_r are addresses: reduced words over the
edge labels {1..r} (tuples of ints with no immediate repetition), read from
the base vertex w = ().  Labels are consistent: every vertex sees each label
on exactly one incident edge, and an edge carries the same label from both
sides.  Consequently the neighbors of v are its parent v[:-1] and the
children v + (l,) for labels l other than the last letter of v.

An automorphism g is stored lazily as a portrait: the image of the base
vertex, plus a local label permutation at each vertex.  Consistency forces
the permutation at x to map the label of the parent edge of x to the label
of the parent edge of g(x); at unspecified vertices the portrait is
completed canonically by the transposition (in-label <-> required
out-label), which is the identity whenever the two agree.  (A plain
"identity beyond the stored portrait" is not well defined under consistent
labelling; the transposition completion always is.)

Rays (boundary points) are eventually periodic label sequences, stored as
(prefix, period) in canonical form.  Automorphisms map eventually periodic
rays to eventually periodic rays; `apply_ray` walks until the local
permutations along the ray repeat with the period and reads off the image.

Memoization note: portrait evaluation caches into plain dicts.  All cached
computations are pure and idempotent, and dict get/set are atomic, so
concurrent readers are safe without locks (at worst a value is computed
twice).

The horosphere combinatorics at the end of the module fix the standard
bi-infinite geodesic c with c(0) = w, c(+infinity) = the (1,2)-periodic end
xi, and c(-infinity) = the (2,1)-periodic end; H_j(2l) is the set of
vertices on the horosphere through c(j) centered at xi at tree distance 2l
from c(j).
"""

from __future__ import annotations

import math

__all__ = [
    "check_address",
    "parent",
    "neighbors",
    "ball",
    "reduce_concat",
    "tree_dist",
    "gromov_product",
    "tree_busemann",
    "Ray",
    "xi_plus",
    "xi_minus",
    "c_vertex",
    "TreeAut",
    "PortraitAut",
    "apply_aut",
    "aut_from_portrait",
    "identity_aut",
    "letter_perm_aut",
    "left_mult_aut",
    "edge_flip_aut",
    "translation_aut",
    "compose",
    "aut_equal_on_ball",
    "factor_flips",
    "random_stabilizer",
    "horosphere_points",
    "stabilizer_orbit",
    "FiniteTree",
    "perm_identity",
    "perm_compose",
    "perm_inverse",
    "transposition",
]

INF = math.inf


# ---------------------------------------------------------------------------
# Addresses
# ---------------------------------------------------------------------------

def check_address(r: int, v) -> tuple:
    v = tuple(v)
    for i, a in enumerate(v):
        if not 1 <= a <= r:
            raise ValueError(f"label {a} outside 1..{r}")
        if i and v[i - 1] == a:
            raise ValueError(f"address {v} is not reduced")
    return v

def parent(v: tuple) -> tuple:
    if not v:
        raise ValueError("base vertex has no parent")
    return v[:-1]

def neighbors(r: int, v: tuple):
    """Parent first (if any), then children in label order."""
    out = []
    if v:
        out.append(v[:-1])
    out.extend(v + (a,) for a in range(1, r + 1) if not v or a != v[-1])
    return out

def ball(r: int, depth: int):
    """All addresses of length <= depth, in breadth-first (then label) order."""
    out = [()]
    frontier = [()]
    for _ in range(depth):
        nxt = []
        for v in frontier:
            for a in range(1, r + 1):
                if not v or a != v[-1]:
                    nxt.append(v + (a,))
        out.extend(nxt)
        frontier = nxt
    return out

def ball_count(r: int, depth: int) -> int:
    """|ball(r, depth)|: 1 + r + r(r-1) + ... + r(r-1)^(depth-1)."""
    if depth < 0:
        return 0
    if r == 2:
        return 1 + 2 * depth
    return 1 + r * ((r - 1) ** depth - 1) // (r - 2)

def reduce_concat(a: tuple, b: tuple) -> tuple:
    """Concatenate two reduced words with free cancellation at the seam.

    Labels are involutions (one edge per label per vertex), so aa cancels.
    """
    stack = list(a)
    for x in b:
        if stack and stack[-1] == x:
            stack.pop()
        else:
            stack.append(x)
    return tuple(stack)

def word_inverse(b: tuple) -> tuple:
    return tuple(reversed(b))


def _common_prefix_len(x, y) -> int:
    n = min(len(x), len(y))
    for i in range(n):
        if x[i] != y[i]:
            return i
    return n


# ---------------------------------------------------------------------------
# Rays
# ---------------------------------------------------------------------------

class Ray:
    """Eventually periodic end: the infinite reduced word prefix.period^inf.

    Canonical form: the period is primitive, and no trailing prefix letter
    equals the last period letter (such a letter is absorbed by rotating the
    period).  Two Ray objects are equal iff they are the same end.
    """

    __slots__ = ("prefix", "period")

    def __init__(self, prefix, period):
        prefix = tuple(prefix)
        period = tuple(period)
        if not period:
            raise ValueError("period must be nonempty")
        # primitive period
        n = len(period)
        for d in range(1, n):
            if n % d == 0 and period == period[: d] * (n // d):
                period = period[:d]
                n = d
                break
        # absorb prefix tail into period rotation
        prefix = list(prefix)
        while prefix and prefix[-1] == period[-1]:
            prefix.pop()
            period = period[-1:] + period[:-1]
        self.prefix = tuple(prefix)
        self.period = tuple(period)
        # reducedness of the full infinite word
        w = self.prefix + self.period * 2
        for i in range(1, len(w)):
            if w[i] == w[i - 1]:
                raise ValueError(
                    f"ray {self.prefix}+{self.period} is not reduced")

    def letter(self, i: int) -> int:
        if i < len(self.prefix):
            return self.prefix[i]
        return self.period[(i - len(self.prefix)) % len(self.period)]

    def vertex(self, n: int) -> tuple:
        """The n-th vertex on the ray (first n letters)."""
        return tuple(self.letter(i) for i in range(n))

    def __eq__(self, other):
        if not isinstance(other, Ray):
            return NotImplemented
        return self.prefix == other.prefix and self.period == other.period

    def __hash__(self):
        return hash((self.prefix, self.period))

    def __repr__(self):
        return f"Ray({self.prefix}, {self.period})"


def xi_plus() -> Ray:
    """The standard attracting end c(+infinity): letters 1,2,1,2,..."""
    return Ray((), (1, 2))

def xi_minus() -> Ray:
    """The standard repelling end c(-infinity): letters 2,1,2,1,..."""
    return Ray((), (2, 1))

def c_vertex(j: int) -> tuple:
    """The j-th vertex of the standard bi-infinite geodesic, c(0) = w."""
    if j >= 0:
        return xi_plus().vertex(j)
    return xi_minus().vertex(-j)


def tree_dist(x, y) -> int:
    """d(x, y) = |x| + |y| - 2 (common prefix length)."""
    x, y = tuple(x), tuple(y)
    return len(x) + len(y) - 2 * _common_prefix_len(x, y)


def gromov_product(x, y):
    """(x|y)_w: depth at which the geodesics from w separate.

    Arguments may be vertices (tuples) or Rays; two equal rays give the
    sentinel math.inf.
    """
    if isinstance(x, Ray) and isinstance(y, Ray):
        if x == y:
            return INF
        bound = (len(x.prefix) + len(y.prefix)
                 + 2 * (len(x.period) + len(y.period)) + 4)
        for i in range(bound):
            if x.letter(i) != y.letter(i):
                return i
        raise AssertionError("distinct canonical rays agreed beyond bound")
    if isinstance(x, Ray):
        x, y = y, x
    if isinstance(y, Ray):
        x = tuple(x)
        for i in range(len(x)):
            if x[i] != y.letter(i):
                return i
        return len(x)
    x, y = tuple(x), tuple(y)
    return _common_prefix_len(x, y)


def tree_busemann(xi: Ray, x, y) -> int:
    """b_xi(x, y) = lim_n ( d(x, xi_n) - d(y, xi_n) ), an integer.

    Equals (|x| - 2 (x|xi)_w) - (|y| - 2 (y|xi)_w).
    """
    bx = len(tuple(x)) - 2 * gromov_product(x, xi)
    by = len(tuple(y)) - 2 * gromov_product(y, xi)
    return bx - by


# ---------------------------------------------------------------------------
# Label permutations (tuples p with p[i-1] = image of label i)
# ---------------------------------------------------------------------------

def perm_identity(r: int) -> tuple:
    return tuple(range(1, r + 1))

def perm_compose(p: tuple, q: tuple) -> tuple:
    """(p o q)(i) = p(q(i))."""
    return tuple(p[q[i] - 1] for i in range(len(q)))

def perm_inverse(p: tuple) -> tuple:
    out = [0] * len(p)
    for i, v in enumerate(p):
        out[v - 1] = i + 1
    return tuple(out)

def transposition(r: int, a: int, b: int) -> tuple:
    p = list(range(1, r + 1))
    p[a - 1], p[b - 1] = b, a
    return tuple(p)


# ---------------------------------------------------------------------------
# Automorphisms
# ---------------------------------------------------------------------------

class TreeAut:
    """Automorphism of T_r; see the module docstring for the encoding.

    Subclasses implement `local_perm(x)` (the label permutation at vertex x)
    and may override `apply`.  The induced vertex map preserves adjacency
    and distances by construction; `depth_bound`, when set, is the depth up
    to which evaluation is permitted.
    """

    def __init__(self, r: int, depth_bound=None):
        self.r = r
        self.depth_bound = depth_bound
        self._img_memo = {}

    # -- interface -----------------------------------------------------
    @property
    def base_image(self) -> tuple:
        return self.apply(())

    def local_perm(self, x: tuple) -> tuple:
        raise NotImplementedError

    def _base(self) -> tuple:
        raise NotImplementedError

    def _data_depth(self) -> int:
        """Depth beyond which local_perm is completion-driven (no stored
        data), so its values along any ray settle into a periodic pattern.
        Used to size the verification window of apply_ray."""
        return 0

    def _check_depth(self, v):
        if self.depth_bound is not None and len(v) > self.depth_bound:
            raise ValueError(
                f"vertex depth {len(v)} exceeds depth bound "
                f"{self.depth_bound}")

    def apply(self, v) -> tuple:
        v = tuple(v)
        hit = self._img_memo.get(v)
        if hit is not None:
            return hit
        self._check_depth(v)
        img = list(self._base())
        cur = ()
        for ell in v:
            m = self.local_perm(cur)[ell - 1]
            if img and img[-1] == m:
                img.pop()
            else:
                img.append(m)
            cur = cur + (ell,)
            self._img_memo[cur] = tuple(img)
        return tuple(img)

    def apply_ray(self, ray: Ray, max_steps: int = 8192) -> Ray:
        """Image of an eventually periodic ray.

        Walks the ray until (a) the local permutations repeat with the
        ray's period through the rest of the walked window — they settle
        into an eventually constant (hence periodic) pattern along any ray
        once past the stored portrait data, a property closed under
        composition and inverse, and the walk is sized past that data via
        _data_depth() so a pattern verified to the end cannot change later
        — and (b) the image path has left its cancellation zone (strictly
        descending), then reads off the image prefix and period.
        """
        p_len, per = len(ray.prefix), len(ray.period)
        steps = max(p_len + 6 * per + 16, 64,
                    self._data_depth() + 2 * per + 16)
        base = self._base()
        while True:
            perms = []
            x = ()
            for i in range(steps):
                perms.append(self.local_perm(x))
                x = x + (ray.letter(i),)
            ms = [perms[i][ray.letter(i) - 1] for i in range(steps)]
            stack = list(base)
            depths = []
            for m in ms:
                if stack and stack[-1] == m:
                    stack.pop()
                else:
                    stack.append(m)
                depths.append(len(stack))
            k0 = None
            for k in range(p_len, steps - 2 * per - 1):
                if (k - p_len) % per:
                    continue
                before = depths[k - 1] if k else len(base)
                if depths[k] == before + 1 and \
                   all(perms[t] == perms[t + per]
                       for t in range(k, steps - per)) and \
                   all(depths[t + 1] == depths[t] + 1
                       for t in range(k, k + 2 * per)):
                    k0 = k
                    break
            if k0 is not None:
                st = list(base)
                for m in ms[:k0]:
                    if st and st[-1] == m:
                        st.pop()
                    else:
                        st.append(m)
                return Ray(tuple(st), tuple(ms[k0: k0 + per]))
            if steps >= max_steps:
                raise ValueError("ray image did not stabilize; portrait "
                                 "is not eventually periodic along the ray")
            steps *= 2

    def inverse(self) -> "TreeAut":
        return InverseAut(self)

    def __matmul__(self, other: "TreeAut") -> "TreeAut":
        return ComposedAut(self, other)


class PortraitAut(TreeAut):
    """Automorphism from explicit portrait data.

    perms: dict vertex -> label permutation (consistency with the parent
    chain is validated on first use); const_perm: one permutation used at
    every vertex (overrides perms).  Unspecified vertices get the canonical
    transposition completion.
    """

    def __init__(self, r, base_image=(), perms=None, const_perm=None,
                 depth_bound=None):
        super().__init__(r, depth_bound)
        self._base_image = check_address(r, base_image)
        self.perms = dict(perms or {})
        self.const_perm = tuple(const_perm) if const_perm else None
        self._perm_memo = {}

    def _base(self):
        return self._base_image

    def _data_depth(self) -> int:
        if self.const_perm is not None:
            return 0
        return max((len(v) for v in self.perms), default=0)

    def local_perm(self, x: tuple) -> tuple:
        hit = self._perm_memo.get(x)
        if hit is not None:
            return hit
        # iterative walk down the address, filling the memo
        for d in range(len(x) + 1):
            y = x[:d]
            if y in self._perm_memo:
                continue
            if self.const_perm is not None:
                p = self.const_perm
            else:
                stored = self.perms.get(y)
                if d == 0:
                    p = stored if stored is not None else perm_identity(self.r)
                else:
                    in_l = y[-1]
                    out_l = self._perm_memo[y[:-1]][in_l - 1]
                    if stored is not None:
                        if stored[in_l - 1] != out_l:
                            raise ValueError(
                                f"portrait at {y} maps parent label {in_l} "
                                f"to {stored[in_l - 1]}, consistency "
                                f"requires {out_l}")
                        p = stored
                    else:
                        p = transposition(self.r, in_l, out_l) \
                            if in_l != out_l else perm_identity(self.r)
            self._perm_memo[y] = p
        return self._perm_memo[x]


class ComposedAut(TreeAut):
    def __init__(self, g: TreeAut, h: TreeAut):
        if g.r != h.r:
            raise ValueError("automorphisms of different trees")
        bounds = [b for b in (g.depth_bound, h.depth_bound) if b is not None]
        super().__init__(g.r, min(bounds) if bounds else None)
        self.g, self.h = g, h
        self._perm_memo = {}
        self._base_memo = None

    def _base(self):
        if self._base_memo is None:
            self._base_memo = self.g.apply(self.h._base())
        return self._base_memo

    def _data_depth(self) -> int:
        # g's perms are read at h-images, which sit at most 2|h(w)| away
        # from the probed depth
        return (self.h._data_depth() + self.g._data_depth()
                + 2 * len(self.h._base()) + 2)

    def local_perm(self, x: tuple) -> tuple:
        hit = self._perm_memo.get(x)
        if hit is None:
            hit = perm_compose(self.g.local_perm(self.h.apply(x)),
                               self.h.local_perm(x))
            self._perm_memo[x] = hit
        return hit


class InverseAut(TreeAut):
    def __init__(self, g: TreeAut):
        super().__init__(g.r, g.depth_bound)
        self.g = g
        self._perm_memo = {}
        self._base_memo = None

    def _base(self):
        if self._base_memo is None:
            self._base_memo = self.apply_raw(())
        return self._base_memo

    def _data_depth(self) -> int:
        return self.g._data_depth() + 2 * len(self.g._base()) + 2

    def apply(self, v) -> tuple:
        v = tuple(v)
        hit = self._img_memo.get(v)
        if hit is None:
            self._check_depth(v)
            hit = self.apply_raw(v)
            self._img_memo[v] = hit
        return hit

    def apply_raw(self, u: tuple) -> tuple:
        """Solve g(x) = u by walking the image geodesic from g(w) to u.

        The preimage path starts at w, so it only descends; at each step the
        required image edge label determines the original label through the
        inverse of the local permutation.
        """
        g = self.g
        b = g._base()
        k = _common_prefix_len(b, u)
        x = ()
        img = list(b)
        for _ in range(len(b) - k):  # pops: walk toward u through b's prefix
            m = img[-1]
            p = g.local_perm(x)
            x = x + (perm_inverse(p)[m - 1],)
            img.pop()
        for i in range(k, len(u)):
            m = u[i]
            p = g.local_perm(x)
            x = x + (perm_inverse(p)[m - 1],)
            img.append(m)
        return x

    def local_perm(self, x: tuple) -> tuple:
        hit = self._perm_memo.get(x)
        if hit is None:
            hit = perm_inverse(self.g.local_perm(self.apply(x)))
            self._perm_memo[x] = hit
        return hit


def apply_aut(g: TreeAut, v) -> tuple:
    """Image of the vertex v under g (function form of g.apply)."""
    return g.apply(v)

def aut_from_portrait(r, base_image=(), perms=None, const_perm=None,
                      depth_bound=None) -> TreeAut:
    return PortraitAut(r, base_image, perms, const_perm, depth_bound)

def identity_aut(r: int) -> TreeAut:
    return PortraitAut(r)

def letter_perm_aut(r: int, perm) -> TreeAut:
    """v -> (perm applied letterwise): constant portrait, base fixed."""
    return PortraitAut(r, (), const_perm=tuple(perm))

def left_mult_aut(r: int, word) -> TreeAut:
    """v -> word . v (free reduction at the seam); identity portrait."""
    return PortraitAut(r, check_address(r, word))

def edge_flip_aut(r: int, z_label: int) -> TreeAut:
    """The involution exchanging w with its neighbor along `z_label`.

    This is left multiplication by the one-letter word (z_label); see
    factor_flips for how generic automorphisms decompose through these.
    """
    if not 1 <= z_label <= r:
        raise ValueError(f"no neighbor with label {z_label}")
    return left_mult_aut(r, (z_label,))

def compose(g: TreeAut, h: TreeAut) -> TreeAut:
    return ComposedAut(g, h)


def translation_aut(r: int, ray_minus: Ray, ray_plus: Ray,
                    window: int = 64) -> TreeAut:
    """Step-one translation along the axis (ray_minus, w, ray_plus).

    The two rays must diverge at w.  The returned g maps c(k) to c(k+1) for
    |k| <= window (and for all k when the axis is the alternation of two
    labels, where the portrait is a constant swap).
    """
    if gromov_product(ray_minus, ray_plus) != 0:
        raise ValueError("axis rays must diverge at the base vertex")
    a, b = ray_plus.letter(0), ray_minus.letter(0)
    if ray_plus == Ray((), (a, b)) and ray_minus == Ray((), (b, a)):
        return PortraitAut(r, (a,), const_perm=transposition(r, a, b))

    def e(k: int) -> int:  # label of the edge {c(k), c(k+1)}
        return ray_plus.letter(k) if k >= 0 else ray_minus.letter(-k - 1)

    def axis_vertex(k: int) -> tuple:
        return ray_plus.vertex(k) if k >= 0 else ray_minus.vertex(-k)

    perms = {}
    for k in range(-window, window + 1):
        src = {e(k - 1): e(k), e(k): e(k + 1)}
        rest_src = [x for x in range(1, r + 1) if x not in src]
        rest_dst = [x for x in range(1, r + 1) if x not in src.values()]
        p = list(range(1, r + 1))
        for s, d in src.items():
            p[s - 1] = d
        for s, d in zip(rest_src, rest_dst):
            p[s - 1] = d
        perms[axis_vertex(k)] = tuple(p)
    return PortraitAut(r, (e(0),), perms=perms, depth_bound=window)


def aut_equal_on_ball(g: TreeAut, h: TreeAut, depth: int) -> bool:
    return all(g.apply(v) == h.apply(v) for v in ball(g.r, depth))


def factor_flips(g: TreeAut):
    """Factor g = L_{b_1} o ... o L_{b_t} o k with k fixing w.

    b = g(w) as a word (b_1 the outermost flip); k = L_b^{-1} o g.
    """
    b = g._base()
    k = compose(left_mult_aut(g.r, word_inverse(b)), g)
    return b, k


def random_stabilizer(r: int, depth: int, rng) -> TreeAut:
    """Random automorphism fixing w: consistent random portrait to `depth`.

    Every vertex of the ball gets an independent uniformly random local
    permutation subject to the consistency constraint on its parent label;
    beyond `depth` the canonical completion takes over.
    """
    perms = {}
    for v in ball(r, depth):
        if not v:
            p = list(rng.permutation(r) + 1)
        else:
            in_l = v[-1]
            out_l = perms[v[:-1]][in_l - 1]
            rest_src = [x for x in range(1, r + 1) if x != in_l]
            rest_dst = [x for x in range(1, r + 1) if x != out_l]
            order = rng.permutation(len(rest_src))
            p = [0] * r
            p[in_l - 1] = out_l
            for i, j in enumerate(order):
                p[rest_src[i] - 1] = rest_dst[j]
        perms[v] = tuple(int(x) for x in p)
    return PortraitAut(r, (), perms=perms)


# ---------------------------------------------------------------------------
# Horosphere combinatorics (standard end xi = c(+infinity))
# ---------------------------------------------------------------------------

def horosphere_points(r: int, j: int, ell: int, truncation=None):
    """H_j(2 ell): vertices u with b_xi(u, c(j)) = 0 and d(u, c(j)) = 2 ell.

    Such u hang at depth ell below the axis vertex c(j + ell), leaving the
    axis immediately; the count is (r-2)(r-1)^(ell-1) for ell >= 1.
    """
    if ell < 0:
        raise ValueError("ell must be >= 0")
    need = max(abs(j), abs(j + ell)) + ell
    if truncation is not None and truncation < need:
        raise ValueError(
            f"truncation {truncation} too small; need depth {need}")
    if ell == 0:
        return [c_vertex(j)]
    m = j + ell
    top = c_vertex(m)
    out = []

    def descend(v: tuple, steps: int):
        if steps == 0:
            out.append(v)
            return
        for a in range(1, r + 1):
            if a != v[-1]:
                descend(v + (a,), steps - 1)

    # The two axis neighbors of top are its tree-parent (or c(m+1)/c(m-1)
    # down-branch at m = 0) plus one child; the r-2 remaining neighbors are
    # always tree-children, so the whole H_j(2 ell) sits strictly below top.
    for u in neighbors(r, top):
        if u == c_vertex(m - 1) or u == c_vertex(m + 1):
            continue
        assert len(u) == len(top) + 1
        descend(u, ell - 1)
    return sorted(out)


def _kr_generators(r: int, fix_index: int, depth: int):
    """Portrait generators of the stabilizer of {c(fix_index)} u {xi}.

    Elements fix the ray [c(fix_index), xi) pointwise; generators are single
    stored permutations at a vertex x of the ball, fixing x's parent label,
    and fixing the ray labels when x lies on the fixed ray.
    """
    gens = []
    ray_vertices = {}
    m = fix_index
    while True:
        v = c_vertex(m)
        if len(v) > depth:
            if m > 0:
                break
            m += 1
            continue
        ray_vertices[v] = m
        m += 1
    for x in ball(r, depth):
        fixed = set()
        if x:
            fixed.add(x[-1])
        if x in ray_vertices:
            m = ray_vertices[x]
            # edge toward c(m+1) must be fixed; edge toward c(m-1) too if
            # m > fix_index (both on the pointwise-fixed ray)
            up = xi_plus().letter(m) if m >= 0 else xi_minus().letter(-m - 1)
            fixed.add(up)
            if m > fix_index:
                fixed.add(x[-1] if m > 0 else xi_minus().letter(-m))
        free = [a for a in range(1, r + 1) if a not in fixed]
        for i in range(len(free)):
            for jj in range(i + 1, len(free)):
                p = transposition(r, free[i], free[jj])
                if x and p[x[-1] - 1] != x[-1]:
                    continue
                gens.append(PortraitAut(r, (), perms={x: p}))
    return gens


def stabilizer_orbit(r: int, fix_index: int, point, truncation: int):
    """Orbit of `point` under the stabilizer of c(fix_index) and xi.

    The point must lie on some H_j(2 ell) with j >= fix_index; the orbit is
    computed by closing under portrait generators within the truncation and
    equals the full H_j(2 ell) (transitivity).
    """
    point = check_address(r, point)
    gp = gromov_product(point, xi_plus())
    j = 2 * gp - len(point)
    if j < fix_index:
        raise ValueError(
            f"point lies on H_{j}, not preserved when fixing c({fix_index})")
    if len(point) > truncation or abs(fix_index) > truncation:
        raise ValueError("truncation too small for the point")
    # a stored permutation at x only moves vertices strictly below x, and
    # the orbit stays at the point's depth, so generators deeper than
    # |point| - 1 act trivially on it
    gens = _kr_generators(r, fix_index, max(len(point) - 1, abs(fix_index)))
    seen = {point}
    frontier = [point]
    while frontier:
        nxt = []
        for v in frontier:
            for g in gens:
                u = g.apply(v)
                if u not in seen:
                    seen.add(u)
                    nxt.append(u)
        frontier = nxt
    return sorted(seen)


# ---------------------------------------------------------------------------
# Finite trees from edge lists
# ---------------------------------------------------------------------------

class FiniteTree:
    """A finite simplicial tree over integer vertex ids with a base vertex."""

    def __init__(self, edges, base=None):
        adj = {}
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop at {u}")
            adj.setdefault(u, set()).add(v)
            adj.setdefault(v, set()).add(u)
        if not adj:
            raise ValueError("empty tree")
        ids = sorted(adj)
        if len(edges) != len(ids) - 1:
            raise ValueError("edge count wrong for a tree (cycle or forest)")
        self.base = ids[0] if base is None else int(base)
        if self.base not in adj:
            raise ValueError(f"base {self.base} is not a vertex")
        self.adj = {u: sorted(vs) for u, vs in adj.items()}
        # BFS from base: parents, depths, order
        self.parent_map = {self.base: None}
        self.depth = {self.base: 0}
        self.order = [self.base]
        frontier = [self.base]
        while frontier:
            nxt = []
            for u in frontier:
                for v in self.adj[u]:
                    if v not in self.depth:
                        self.depth[v] = self.depth[u] + 1
                        self.parent_map[v] = u
                        self.order.append(v)
                        nxt.append(v)
            frontier = nxt
        if len(self.order) != len(ids):
            raise ValueError("tree is not connected")

    @classmethod
    def from_text(cls, text: str, base=None) -> "FiniteTree":
        edges = []
        for ln in text.strip().splitlines():
            ln = ln.strip()
            if not ln or ln.startswith("#"):
                continue
            parts = ln.split()
            if len(parts) != 2:
                raise ValueError(f"bad edge line: {ln!r}")
            edges.append((int(parts[0]), int(parts[1])))
        return cls(edges, base=base)

    @property
    def vertices(self):
        return self.order

    def path_to_base(self, v: int):
        out = [v]
        while self.parent_map[out[-1]] is not None:
            out.append(self.parent_map[out[-1]])
        return out

    def dist(self, x: int, y: int) -> int:
        px = {v: i for i, v in enumerate(self.path_to_base(x))}
        py = self.path_to_base(y)
        for i, v in enumerate(py):
            if v in px:
                return px[v] + i
        raise AssertionError("disconnected")

    def geodesic(self, x: int, y: int):
        px = self.path_to_base(x)
        index = {v: i for i, v in enumerate(px)}
        py = self.path_to_base(y)
        for i, v in enumerate(py):
            if v in index:
                return px[: index[v] + 1] + list(reversed(py[:i]))
        raise AssertionError("disconnected")
