"""Command-line interface for the tree embedding toolkit.

Subcommands
-----------
embed      build the lambda-embedding of a ball (or a finite tree file) and
           write sparse coordinates plus the pairwise cosh-distance table
verify     run a module's invariant suite and print its max residuals
classify   classify an isometry matrix file as elliptic / parabolic /
           hyperbolic (with translation length)
project    2-d projection of an embedded ball (hyperboloid PCA, optionally
           pushed to the Poincare disk), reported as CSV
spherical  convolution table of the radial algebra and the eigenvalue map
           of its normalized spherical function, as exact fractions

Exit codes: 0 success; 1 failed verification; 2 malformed input;
3 parameter constraint violated (embed); 4 non-orthogonal matrix (classify).

The environment variable LORENTREE_EPS overrides the float tolerance.
Stdout stays machine-parseable: one JSON document or CSV rows per run;
diagnostics go to stderr.
"""

import argparse
import json
import math
import os
import sys
from fractions import Fraction

import numpy as np

from .embed import (
    EmbedConfig,
    busemann_compat,
    distance_identity_check,
    embed_vertex,
    equivariance_residual,
    pair_vertex_vertex,
    parabolic_relation_check,
    vertex_form,
    represent,
    standard_relation_setup,
)
from .gelfand import (
    ShellFn,
    WreathModel,
    check_spherical,
    chi,
    commutator_residual,
    convolve,
    positive_definite_witness,
    spherical_phi0,
    unit,
    wreath_oracle_convolve,
)
from .hymodel import (
    bpoint,
    busemann,
    cosh_dist,
    dist,
    exp_map,
    geodesic,
    geodesic_point,
    hpoint,
)
from .lorentz import (
    OLPlusBlock,
    classify,
    conjugate,
    conjugate_formula,
    extract_olplus,
    gram_residual,
    invert_olplus,
    is_orthogonal,
    load_matrix_text,
    make_olplus,
    translation_length,
)
from .quadspace import (
    QuadForm,
    SparseVec,
    aux_scalar_product,
    eval_B,
    eval_Q,
    get_eps,
    index_of,
    pm_decomposition,
    set_eps,
)
from .trees import (
    FiniteTree,
    ball,
    compose,
    edge_flip_aut,
    letter_perm_aut,
    random_stabilizer,
    translation_aut,
    transposition,
    xi_minus,
    xi_plus,
)


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------

def _fail(msg, code):
    print(f"error: {msg}", file=sys.stderr)
    return code


def _parse_lambda(text, exact):
    """Accept '1.25', '5/4', '2'; Fractions keep exact mode exact."""
    lam = Fraction(text)
    return lam if exact else float(lam)


class InputError(ValueError):
    """Malformed input (exit code 2), as opposed to a violated constraint."""


def _parse_tree_arg(spec, base_arg):
    """Return ('regular', r, depth) or ('finite', FiniteTree)."""
    if spec.startswith("regular:"):
        body = spec[len("regular:"):]
        parts = body.split(",")
        if len(parts) != 2:
            raise InputError(f"bad tree spec {spec!r}; want regular:r,depth")
        try:
            r, depth = int(parts[0]), int(parts[1])
        except ValueError:
            raise InputError(f"bad tree spec {spec!r}; want regular:r,depth")
        return ("regular", r, depth)
    with open(spec) as fh:
        text = fh.read()
    base = None
    if base_arg is not None:
        base = int(base_arg)
    return ("finite", FiniteTree.from_text(text, base=base))


def _make_config(args, default_depth=None):
    """Build an EmbedConfig from the common flags.

    Raises ValueError with a message suited to exit code 2 (malformed
    input) via _TreeSpecError, or passes through constraint violations
    (lambda/depth/backend) for exit code 3.
    """
    exact = args.backend == "exact"
    lam = _parse_lambda(getattr(args, "lam"), exact)
    src = _parse_tree_arg(args.tree, getattr(args, "base", None))
    if src[0] == "regular":
        _, r, spec_depth = src
        depth = args.depth if args.depth is not None else spec_depth
        if default_depth is not None and args.depth is None:
            depth = default_depth
        return EmbedConfig(lam, r=r, depth=depth, backend=args.backend)
    tree = src[1]
    depth = args.depth
    if depth is None:
        depth = max(tree.depth.values())
    return EmbedConfig(lam, depth=depth, backend=args.backend, tree=tree)


def _id_str(v):
    """Vertex id as text: dotted address for ball vertices, plain otherwise."""
    if isinstance(v, tuple):
        return ".".join(str(a) for a in v)
    return str(v)


def _scalar_out(x, exact):
    """JSON-ready scalar: exact values become fraction strings."""
    if exact:
        return str(Fraction(x))
    return float(x)


CONSTRAINT_WORDS = ("lambda", "depth", "square root", "valence", "backend")


def _config_exit(exc):
    """Map a config ValueError to exit 3 (constraint) or 2 (malformed)."""
    if isinstance(exc, InputError):
        return 2
    msg = str(exc)
    if any(w in msg for w in CONSTRAINT_WORDS):
        return 3
    return 2


# ---------------------------------------------------------------------------
# embed
# ---------------------------------------------------------------------------

def cmd_embed(args):
    try:
        cfg = _make_config(args)
    except (OSError, ValueError) as exc:
        if isinstance(exc, ValueError):
            return _fail(exc, _config_exit(exc))
        return _fail(exc, 2)
    exact = cfg.exact
    verts = cfg.vertices()
    records = []
    for v in verts:
        fv = embed_vertex(cfg, v).fv
        records.append({
            "id": _id_str(v),
            "support": [_id_str(u) for u, _ in fv.items()],
            "coeffs": [_scalar_out(c, exact) for _, c in fv.items()],
        })
    table = [[_scalar_out(-pair_vertex_vertex(cfg, x, y), exact)
              for y in verts] for x in verts]
    res = distance_identity_check(cfg)
    doc = {
        "lambda": _scalar_out(cfg.lam, exact),
        "backend": cfg.backend,
        "depth": cfg.depth,
        "base": _id_str(verts[0]),
        "vertices": records,
        "cosh_distances": table,
        "checks": {"max_residual": _scalar_out(res, exact)},
    }
    if args.format == "json":
        out = json.dumps(doc, indent=1)
    else:
        lines = ["vertex,support,coeff"]
        for rec in records:
            for u, c in zip(rec["support"], rec["coeffs"]):
                lines.append(f"{rec['id']},{u},{c}")
        out = "\n".join(lines)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(out + "\n")
        print(f"wrote {len(records)} vertex records to {args.out}",
              file=sys.stderr)
    else:
        print(out)
    return 0


# ---------------------------------------------------------------------------
# verify suites
# ---------------------------------------------------------------------------

def _res_text(res, exact):
    if exact:
        return "0 (exact)" if res == 0 else str(Fraction(res))
    return f"{float(res):.3e}"


def _rand_fraction_vec(form, rng, avoid_w=None):
    vec = {}
    for key in form.basis:
        if key == avoid_w:
            continue
        vec[key] = Fraction(int(rng.integers(-4, 5)), int(rng.integers(1, 4)))
    return SparseVec(vec)


def suite_quad(args, rng):
    out = []
    basis = list(ball(3, 2))
    form = QuadForm.minkowski((), basis=basis)
    ip, im = index_of(form)
    ok = (ip, im) == (len(basis) - 1, 1)
    out.append(("index-of-ball-form", "0 (exact)" if ok else f"{(ip, im)}", ok))

    n = 4
    while True:
        a = np.array([[Fraction(int(rng.integers(-3, 4))) for _ in range(n)]
                      for _ in range(n)], dtype=object)
        piv = a.astype(float)
        if abs(np.linalg.det(piv)) > 1e-9:
            break
    d = [Fraction(1)] * (n - 1) + [Fraction(-1)]
    gram = a.T @ (np.diag(d) @ a)
    labels = [f"e{i}" for i in range(n)]
    dense = QuadForm.dense(gram, labels)
    ip, im = index_of(dense)
    ok = (ip, im) == (n - 1, 1)
    out.append(("index-of-dense-form", "0 (exact)" if ok else f"{(ip, im)}", ok))

    minus, plus = pm_decomposition(dense)
    res = Fraction(0)
    for mvec in minus:
        for pvec in plus:
            res = max(res, abs(eval_B(dense, mvec, pvec)))
    ok = len(minus) == 1 and res == 0
    out.append(("pm-split-orthogonality", _res_text(res, True), ok))

    aux = aux_scalar_product(dense, (minus, plus))
    worst = None
    for _ in range(25):
        x = _rand_fraction_vec(dense, rng)
        if x.is_zero():
            continue
        val = aux(x, x)
        worst = val if worst is None else min(worst, val)
    ok = worst is not None and worst > 0
    out.append(("aux-product-positivity",
                f"min {worst}" if not ok else "0 (exact)", ok))
    return out, True


def suite_hymodel(args, rng):
    out = []
    keys = ["w", "x1", "x2", "x3"]
    form = QuadForm.minkowski("w", basis=keys)
    base = hpoint(form, SparseVec({"w": 1.0}))
    direction = SparseVec({"x1": 1.0})
    g = geodesic(base, direction)
    res = 0.0
    for t in np.linspace(-3.0, 3.0, 13):
        p = geodesic_point(g, float(t))
        res = max(res, abs(dist(p, base) - abs(float(t))))
    out.append(("geodesic-unit-speed", _res_text(res, False), res <= get_eps()))

    res = 0.0
    for _ in range(30):
        v = SparseVec({k: float(rng.normal()) for k in keys[1:]})
        u = SparseVec({k: float(rng.normal()) for k in keys[1:]})
        lhs = cosh_dist(exp_map(form, v), exp_map(form, u))
        qv, qu = eval_Q(form, v), eval_Q(form, u)
        rhs = abs(-eval_B(form, v, u)
                  + math.sqrt(1 + qv) * math.sqrt(1 + qu))
        res = max(res, abs(lhs - rhs))
    out.append(("exp-two-point-distance", _res_text(res, False),
                res <= get_eps()))

    xi = bpoint(form, SparseVec({"w": 1.0, "x1": 1.0}))
    res = 0.0
    for _ in range(30):
        pts = []
        for _ in range(3):
            v = SparseVec({k: float(rng.normal()) for k in keys[1:]})
            pts.append(exp_map(form, v))
        y1, y2, y3 = pts
        r = busemann(xi, y1, y2) + busemann(xi, y2, y3) - busemann(xi, y1, y3)
        res = max(res, abs(r))
    out.append(("busemann-telescoping", _res_text(res, False),
                res <= get_eps()))
    return out, False


def _householder(rng, k):
    u = rng.normal(size=k)
    u /= np.linalg.norm(u)
    return np.eye(k) - 2.0 * np.outer(u, u)


def suite_lorentz(args, rng):
    out = []
    blk = OLPlusBlock(Fraction(2), np.array(
        [Fraction(1), Fraction(0), Fraction(1, 2)], dtype=object),
        np.array([[Fraction(int(i == j)) for j in range(3)]
                  for i in range(3)], dtype=object))
    op = make_olplus(blk, exact=True)
    res = gram_residual(op)
    out.append(("stabilizer-gram-exact", _res_text(res, True), res == 0))

    blk_f = OLPlusBlock(1.75, rng.normal(size=3), _householder(rng, 3))
    op_f = make_olplus(blk_f)
    res = gram_residual(op_f)
    ok = res <= get_eps()
    out.append(("stabilizer-gram-float", _res_text(res, False), ok))

    back = extract_olplus(op_f)
    res = max(abs(float(back.lam) - blk_f.lam),
              float(np.max(np.abs(np.asarray(back.a3minus, dtype=float)
                                  - blk_f.a3minus))),
              float(np.max(np.abs(np.asarray(back.a4, dtype=float)
                                  - blk_f.a4))))
    out.append(("block-roundtrip", _res_text(res, False), res <= get_eps()))

    inv_op = invert_olplus(op_f)
    prod = np.asarray((op_f @ inv_op).matrix, dtype=float)
    res = float(np.max(np.abs(prod - np.eye(prod.shape[0]))))
    out.append(("block-inverse", _res_text(res, False), res <= get_eps()))

    s = make_olplus(OLPlusBlock(1.5, rng.normal(size=3),
                                _householder(rng, 3)))
    t = make_olplus(OLPlusBlock(0.8, rng.normal(size=3),
                                _householder(rng, 3)))
    pred = conjugate_formula(s, t)
    got = np.asarray(conjugate(s, t).matrix, dtype=float)
    res = float(np.max(np.abs(np.asarray(pred, dtype=float) - got)))
    out.append(("conjugation-formula", _res_text(res, False),
                res <= get_eps()))

    ident = make_olplus(OLPlusBlock(1.0, np.zeros(3), np.eye(3)))
    tag_ok = classify(ident).tag == "elliptic"
    hyp = make_olplus(OLPlusBlock(2.0, np.zeros(3), np.eye(3)))
    cls = classify(hyp)
    len_res = abs(cls.witness["length"] - math.log(2.0))
    tag_ok = tag_ok and cls.tag == "hyperbolic" and len_res <= get_eps()
    par = make_olplus(OLPlusBlock(1.0, np.array([1.0, 0.0, 0.0]), np.eye(3)))
    tag_ok = tag_ok and classify(par).tag == "parabolic"
    out.append(("classification-frozen", _res_text(len_res, False), tag_ok))

    est = translation_length(hyp, n_max=8)
    res = abs(est - math.log(2.0))
    out.append(("translation-length", _res_text(res, False),
                res <= math.log(2.0) / 8 + get_eps()))
    return out, False


def suite_embed(args, rng):
    out = []
    try:
        cfg = _make_config(args)
    except (OSError, ValueError) as exc:
        raise SystemExit(_fail(exc, 2))
    exact = cfg.exact

    res = distance_identity_check(cfg)
    ok = (res == 0) if exact else res <= get_eps()
    out.append(("distance-identity", _res_text(res, exact), ok))

    form = vertex_form(cfg)
    res = Fraction(0) if exact else 0.0
    for v in cfg.vertices():
        r = abs(eval_Q(form, embed_vertex(cfg, v).fv) + 1)
        res = max(res, r)
    ok = (res == 0) if exact else res <= get_eps()
    out.append(("unit-normalization", _res_text(res, exact), ok))

    r = cfg.r
    gens = [
        random_stabilizer(r, cfg.depth, rng),
        edge_flip_aut(r, 1),
        compose(translation_aut(r, xi_minus(), xi_plus()),
                letter_perm_aut(r, transposition(r, 1, 2))),
    ]
    eres = Fraction(0) if exact else 0.0
    gres = Fraction(0) if exact else 0.0
    for g in gens:
        op = represent(cfg, g)
        eres = max(eres, equivariance_residual(cfg, g, op=op))
        _, gr = op.gram_check()
        gres = max(gres, gr)
    ok = (eres == 0) if exact else eres <= get_eps()
    out.append(("equivariance", _res_text(eres, exact), ok))
    ok = (gres == 0) if exact else gres <= get_eps()
    out.append(("isometry-gram", _res_text(gres, exact), ok))

    def rand_addr():
        word = []
        for _ in range(2):
            c = int(rng.integers(1, r + 1))
            while word and c == word[-1]:
                c = int(rng.integers(1, r + 1))
            word.append(c)
        return tuple(word)

    bres = 0.0
    xi = xi_plus()
    for _ in range(20):
        lhs, rhs = busemann_compat(cfg, xi, rand_addr(), rand_addr())
        bres = max(bres, abs(lhs - rhs))
    out.append(("busemann-compatibility", _res_text(bres, False),
                bres <= get_eps()))

    if exact and r == 3 and cfg.depth >= 3:
        s, n_elt, h = standard_relation_setup(cfg, 1)
        rep = parabolic_relation_check(cfg, s, n_elt, h, j=1)
        res = max(abs(rep["res_scalar"]), abs(rep["res_transverse"]))
        out.append(("parabolic-relation", _res_text(res, True), res == 0))
    return out, exact


def suite_gelfand(args, rng):
    out = []
    q = args.valence if args.valence is not None else 3
    phi = spherical_phi0(q)
    try:
        check_spherical(phi, max_shell=5)
        ok = True
    except ValueError:
        ok = False
    out.append(("spherical-eigenvalues", "0 (exact)" if ok else "broken", ok))

    ok = True
    for _ in range(15):
        f = ShellFn(q, tuple(Fraction(int(rng.integers(-3, 4)))
                             for _ in range(4)))
        g = ShellFn(q, tuple(Fraction(int(rng.integers(-3, 4)))
                             for _ in range(4)))
        if not commutator_residual(f, g).is_zero():
            ok = False
    out.append(("convolution-commutes", "0 (exact)" if ok else "nonzero", ok))

    model = WreathModel(q, 2)
    ok = True
    for m in range(3):
        for n in range(3):
            f = unit(q) if m == 0 else chi(q, m)
            g = unit(q) if n == 0 else chi(q, n)
            if wreath_oracle_convolve(f, g, model) != convolve(f, g):
                ok = False
    out.append(("wreath-oracle-agreement", "0 (exact)" if ok else "mismatch",
                ok))

    try:
        c, _ = positive_definite_witness(phi)
        ok = c > 0
    except ValueError:
        ok = False
    out.append(("positive-definiteness", "0 (exact)" if ok else "broken", ok))
    return out, True


SUITES = {
    "quad": suite_quad,
    "hymodel": suite_hymodel,
    "lorentz": suite_lorentz,
    "embed": suite_embed,
    "gelfand": suite_gelfand,
}


def cmd_verify(args):
    names = list(SUITES) if args.suite == "all" else [args.suite]
    rng = np.random.default_rng(args.seed)
    failed = None
    for name in names:
        rows, _ = SUITES[name](args, rng)
        for prop, text, ok in rows:
            mark = "ok" if ok else "FAIL"
            print(f"{name}/{prop}: {text} [{mark}]")
            if not ok and failed is None:
                failed = f"{name}/{prop}"
    if failed is not None:
        print(f"failed invariant: {failed}", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# classify
# ---------------------------------------------------------------------------

def cmd_classify(args):
    try:
        with open(args.matrix) as fh:
            text = fh.read()
    except OSError as exc:
        return _fail(exc, 2)
    try:
        op = load_matrix_text(text)
    except ValueError as exc:
        return _fail(exc, 2)
    ok, res, _ = is_orthogonal(op)
    if not ok:
        print(f"not an isometry: gram residual {float(res):.3e}",
              file=sys.stderr)
        return 4
    cls = classify(op)
    if cls.tag == "hyperbolic":
        print(f"hyperbolic, translation length {cls.witness['length']:.12f}")
    else:
        print(cls.tag)
    return 0


# ---------------------------------------------------------------------------
# project
# ---------------------------------------------------------------------------

def cmd_project(args):
    try:
        cfg = _make_config(args)
    except (OSError, ValueError) as exc:
        return _fail(exc, 2)
    verts = cfg.vertices()
    base = verts[0]
    index = {v: i for i, v in enumerate(verts)}
    n = len(verts)
    mat = np.zeros((n, n))
    for j, v in enumerate(verts):
        for u, c in embed_vertex(cfg, v).fv.items():
            mat[index[u], j] = float(c)
    # Restrict to the positive part (everything but the base coordinate),
    # take the two leading principal directions of the coefficient cloud,
    # and keep the base coordinate as the timelike one.
    b = index[base]
    pos_rows = [i for i in range(n) if i != b]
    plus = mat[pos_rows, :]
    cov = plus @ plus.T
    w, vecs = np.linalg.eigh(cov)
    order = np.argsort(w)[::-1]
    k = min(2, plus.shape[0])
    proj = vecs[:, order[:k]].T @ plus          # (k, n)
    if k < 2:
        proj = np.vstack([proj, np.zeros((2 - k, n))])
    t = mat[b, :]
    # Renormalize back to the hyperboloid: dropping positive directions can
    # only make Q more negative, so t stays >= the renormalized time coord.
    q = proj[0] ** 2 + proj[1] ** 2 - t ** 2
    scale = np.sqrt(np.where(q < 0, -1.0 / q, 1.0))
    x1, x2, x0 = proj[0] * scale, proj[1] * scale, t * scale
    if args.poincare:
        px, py = x1 / (1.0 + x0), x2 / (1.0 + x0)
    else:
        px, py = x1, x2
    lines = ["vertex,px,py"]
    for j, v in enumerate(verts):
        lines.append(f"{_id_str(v)},{px[j]:.12f},{py[j]:.12f}")
    out = "\n".join(lines)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(out + "\n")
    else:
        print(out)
    worst = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            true = float(np.arccosh(max(1.0, float(
                -pair_vertex_vertex(cfg, verts[i], verts[j])))))
            ch = x0[i] * x0[j] - x1[i] * x1[j] - x2[i] * x2[j]
            got = float(np.arccosh(max(1.0, ch)))
            if true > 0:
                worst = max(worst, abs(got - true) / true)
    print(f"max relative distance distortion: {worst:.6f}", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# spherical
# ---------------------------------------------------------------------------

def cmd_spherical(args):
    q = args.valence
    if q is None:
        return _fail("--valence is required", 2)
    if q < 3:
        return _fail("valence must be at least 3", 2)
    top = args.max_shell
    basis = [unit(q)] + [chi(q, n) for n in range(1, top + 1)]
    lines = ["kind,m,n,shell,value"]
    for m in range(top + 1):
        for n in range(m, top + 1):
            conv = convolve(basis[m], basis[n])
            for s in range(conv.max_shell + 1):
                c = conv.coeff(s)
                if c != 0:
                    lines.append(f"conv,{m},{n},{s},{Fraction(c)}")
    phi = spherical_phi0(q)
    for s in range(phi.max_shell + 1):
        lines.append(f"phi0,,,{s},{Fraction(phi.coeff(s))}")
    for n, c in sorted(check_spherical(phi, max_shell=top).items()):
        lines.append(f"eigenvalue,,{n},,{Fraction(c)}")
    print("\n".join(lines))
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _add_embed_flags(sub):
    sub.add_argument("--tree", default="regular:3,4",
                     help="regular:r,depth or a path to an edge-list file")
    sub.add_argument("--lambda", dest="lam", default="5/4",
                     help="scaling parameter (decimal or fraction)")
    sub.add_argument("--depth", type=int, default=None)
    sub.add_argument("--backend", choices=("float", "exact"), default="float")
    sub.add_argument("--base", default=None,
                     help="base vertex for edge-list trees")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="lorentree",
        description="Tree embeddings into the hyperboloid and their algebra.")
    sp = ap.add_subparsers(dest="cmd", required=True)

    p = sp.add_parser("embed", help="write embedding coordinates")
    _add_embed_flags(p)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_embed)

    p = sp.add_parser("verify", help="run an invariant suite")
    p.add_argument("--suite", default="all",
                   choices=tuple(SUITES) + ("all",))
    _add_embed_flags(p)
    p.add_argument("--valence", type=int, default=None)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=cmd_verify)

    p = sp.add_parser("classify", help="classify an isometry matrix file")
    p.add_argument("--matrix", required=True)
    p.set_defaults(func=cmd_classify)

    p = sp.add_parser("project", help="project an embedded ball to 2-d")
    _add_embed_flags(p)
    p.add_argument("--poincare", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_project)

    p = sp.add_parser("spherical", help="radial convolution tables")
    p.add_argument("--valence", type=int, default=None)
    p.add_argument("--max-shell", type=int, default=5)
    p.set_defaults(func=cmd_spherical)
    return ap


def main(argv=None):
    eps_env = os.environ.get("LORENTREE_EPS")
    if eps_env:
        try:
            set_eps(float(eps_env))
        except ValueError:
            print(f"error: bad LORENTREE_EPS {eps_env!r}", file=sys.stderr)
            return 2
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
