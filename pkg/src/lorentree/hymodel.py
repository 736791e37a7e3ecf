"""The hyperboloid model of real hyperbolic space.

Points of hyperbolic space are negative lines of a quadratic space (H, Q) of
index one; we represent a point by the vector on its line with Q = -1 and
positive distinguished coordinate (one component of the negative cone C_-).
Boundary points are isotropic lines, represented by the vector normalized to
value 1 at the distinguished coordinate.

Facts used throughout (all at the level of the defining form):

  * reverse Cauchy-Schwarz: B(x, y)^2 >= Q(x) Q(y) for negative x, y, with
    equality iff the vectors are proportional; hence
    cosh d([x], [y]) = |B(x, y)| / sqrt(Q(x) Q(y)) is well defined and >= 1.
  * exponential chart based at [l_-]:  exp(v) = [ v + sqrt(1 + Q(v)) l_- ]
    for v in the positive-definite complement H_+, with
    cosh d(exp v, [l_-]) = sqrt(1 + Q(v)) and the two-point formula
    cosh d(exp v, exp w) = | -B(v, w) + sqrt(1+Q(v)) sqrt(1+Q(w)) |.
  * Busemann cocycle of an isotropic vector x:
        b_x(y, z) = 1/2 ln( B(x,y)^2 Q(z) / ( B(x,z)^2 Q(y) ) ),
    homogeneous of degree 0 in each argument and telescoping:
    b_x(y2,y3) - b_x(y1,y3) + b_x(y1,y2) = 0.  Level sets in the middle
    argument are horospheres centered at [x].

Distances and Busemann values are returned as floats even over the exact
scalar backend (arcosh/log are transcendental); exact pipelines compare on
the cosh side via :func:`cosh_dist` / :func:`busemann_ratio`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .quadspace import (
    QuadForm,
    SparseVec,
    eval_B,
    eval_Q,
    get_eps,
    scalar_is_zero,
    sqrt_scalar,
)

__all__ = [
    "HPoint",
    "BPoint",
    "Geodesic",
    "hpoint",
    "bpoint",
    "dist",
    "cosh_dist",
    "exp_map",
    "geodesic_point",
    "busemann",
    "busemann_ratio",
    "horosphere_level",
]


@dataclass(frozen=True)
class HPoint:
    """A point of hyperbolic space: Q(vec) = -1, positive component."""
    form: QuadForm
    vec: SparseVec


@dataclass(frozen=True)
class BPoint:
    """A boundary point: Q(vec) = 0, vec != 0, distinguished coordinate 1."""
    form: QuadForm
    vec: SparseVec


@dataclass(frozen=True)
class Geodesic:
    """Unit-speed geodesic t -> cosh(t) base + sinh(t) dir."""
    base: HPoint
    dir: SparseVec


def hpoint(form: QuadForm, vec: SparseVec) -> HPoint:
    """Normalize an arbitrary negative vector to an HPoint on its line."""
    q = eval_Q(form, vec)
    if isinstance(q, (Fraction, int)):
        if q >= 0:
            raise ValueError(f"vector is not negative: Q = {q}")
        scale = 1 / sqrt_scalar(-q)
    else:
        if q >= -get_eps():
            raise ValueError(f"vector is not negative: Q = {q}")
        scale = 1.0 / math.sqrt(-q)
    v = vec.scale(scale)
    s = form.comp_functional(v)
    if scalar_is_zero(s):
        raise ValueError("component functional vanished on a negative vector")
    if s < 0:
        v = -v
    return HPoint(form, v)


def bpoint(form: QuadForm, vec: SparseVec) -> BPoint:
    """Normalize a nonzero isotropic vector to distinguished coordinate 1."""
    if vec.is_zero():
        raise ValueError("zero vector is not a boundary point")
    q = eval_Q(form, vec)
    if not scalar_is_zero(q):
        raise ValueError(f"vector is not isotropic: Q = {q}")
    s = form.comp_functional(vec)
    if scalar_is_zero(s):
        raise ValueError(
            "isotropic vector has zero distinguished coordinate; "
            "cannot normalize"
        )
    one = Fraction(1) if isinstance(s, (Fraction, int)) else 1.0
    return BPoint(form, vec.scale(one / s))


def cosh_dist(p: HPoint, q: HPoint):
    """|B(p, q)| = cosh of the distance; exact over the rational backend."""
    b = eval_B(p.form, p.vec, q.vec)
    return -b if b < 0 else b


def dist(p: HPoint, q: HPoint) -> float:
    """Hyperbolic distance arcosh |B(p, q)| between normalized points.

    |B| below 1 - eps violates reverse Cauchy-Schwarz and means some input
    was not a genuine negative vector for this form; that is an error, not a
    clamp.  Within eps below 1 the argument is clamped to 1 (rounding guard).
    """
    c = float(cosh_dist(p, q))
    if c < 1.0:
        if c < 1.0 - get_eps():
            raise ValueError(
                f"|B(p,q)| = {c} < 1: inputs violate reverse Cauchy-Schwarz"
            )
        c = 1.0
    return math.acosh(c)


def exp_map(form: QuadForm, v: SparseVec) -> HPoint:
    """Exponential chart at the base negative direction of a Minkowski form.

    For the form diag(+1 except -1 at w), the base point is [delta_w] and
    H_+ is everything supported off w; exp(v) = [v + sqrt(1 + Q(v)) delta_w].
    """
    if form.kind != "minkowski":
        raise ValueError("exp_map is defined for Minkowski-diagonal forms")
    if not scalar_is_zero(v.get(form.w)):
        raise ValueError("argument of exp_map must have no component at w")
    t = sqrt_scalar(1 + eval_Q(form, v))
    vec = v + SparseVec.basis(form.w, t)
    return HPoint(form, vec)  # Q = Q(v) - (1+Q(v)) = -1 already


def geodesic(base: HPoint, direction: SparseVec) -> Geodesic:
    """Validate and build a geodesic (unit spacelike dir, orthogonal)."""
    q = eval_Q(base.form, direction)
    b = eval_B(base.form, base.vec, direction)
    if not scalar_is_zero(q - 1):
        raise ValueError(f"direction must satisfy Q = 1, got {q}")
    if not scalar_is_zero(b):
        raise ValueError(f"direction must be orthogonal to base, B = {b}")
    return Geodesic(base, direction)


def geodesic_point(g: Geodesic, t: float) -> HPoint:
    """gamma(t) = cosh(t) base + sinh(t) dir; unit speed."""
    c, s = math.cosh(t), math.sinh(t)
    vec = g.base.vec.scale(c) + g.dir.scale(s)
    return hpoint(g.base.form, vec)


def busemann_ratio(x: BPoint, y: HPoint, z: HPoint):
    """The ratio B(x,y)^2 Q(z) / (B(x,z)^2 Q(y)); exact when inputs are.

    The Busemann cocycle is half its log; exposing the ratio lets exact
    pipelines avoid transcendental functions entirely.
    """
    by = eval_B(x.form, x.vec, y.vec)
    bz = eval_B(x.form, x.vec, z.vec)
    if scalar_is_zero(by) or scalar_is_zero(bz):
        raise ValueError(
            "B(x, point) = 0 for a boundary/negative pair: invalid inputs"
        )
    qy = eval_Q(x.form, y.vec)
    qz = eval_Q(x.form, z.vec)
    return (by * by * qz) / (bz * bz * qy)


def busemann(x: BPoint, y: HPoint, z: HPoint) -> float:
    """Busemann cocycle b_x(y, z), computed in log-space.

    Positive when y is deeper than z in the horoball at [x]... precisely:
    b_x(y, z) = lim_{p -> x} ( d(y, p) - d(z, p) ).
    """
    by = eval_B(x.form, x.vec, y.vec)
    bz = eval_B(x.form, x.vec, z.vec)
    if scalar_is_zero(by) or scalar_is_zero(bz):
        raise ValueError(
            "B(x, point) = 0 for a boundary/negative pair: invalid inputs"
        )
    qy = eval_Q(x.form, y.vec)
    qz = eval_Q(x.form, z.vec)
    return (
        math.log(abs(float(by))) - math.log(abs(float(bz)))
        + 0.5 * (math.log(-float(qz)) - math.log(-float(qy)))
    )


def horosphere_level(x: BPoint, z: HPoint, p: HPoint) -> float:
    """Height of p on the horosphere family centered at [x], zero at z.

    Two points lie on the same horosphere centered at [x] iff their levels
    agree.  Equals busemann(x, p, z).
    """
    return busemann(x, p, z)
