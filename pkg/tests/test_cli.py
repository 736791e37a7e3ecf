"""End-to-end checks of the command-line interface.

Every test drives the installed entry point through a subprocess, so these
cover argument parsing, exit codes, and output formats — not the library
internals (the other test modules own those).
"""

import json
import math
import re
import subprocess
import sys
from fractions import Fraction


def run_cli(*args, env=None):
    cmd = [sys.executable, "-m", "lorentree.cli"] + list(args)
    return subprocess.run(cmd, capture_output=True, text=True, env=env)


def addr_of(text):
    return tuple(int(p) for p in text.split(".")) if text else ()


def tree_dist(x, y):
    k = 0
    while k < len(x) and k < len(y) and x[k] == y[k]:
        k += 1
    return len(x) + len(y) - 2 * k


# ---------------------------------------------------------------------------
# embed
# ---------------------------------------------------------------------------

def test_embed_depth4_ball_record_count(tmp_path):
    out = tmp_path / "c.json"
    r = run_cli("embed", "--tree", "regular:3,4", "--lambda", "1.25",
                "--out", str(out))
    assert r.returncode == 0, r.stderr
    doc = json.loads(out.read_text())
    assert len(doc["vertices"]) == 46
    assert doc["lambda"] == 1.25
    assert doc["checks"]["max_residual"] <= 1e-9
    assert len(doc["cosh_distances"]) == 46


def test_embed_lambda_one_rejected():
    r = run_cli("embed", "--tree", "regular:3,4", "--lambda", "1.0")
    assert r.returncode == 3
    assert "lambda must exceed 1" in r.stderr


def test_embed_malformed_inputs():
    r = run_cli("embed", "--tree", "regular:3", "--lambda", "1.25")
    assert r.returncode == 2
    r = run_cli("embed", "--tree", "no_such_file.txt", "--lambda", "1.25")
    assert r.returncode == 2


def test_embed_exact_mode_emits_fraction_strings():
    r = run_cli("embed", "--tree", "regular:3,2", "--lambda", "5/4",
                "--backend", "exact")
    assert r.returncode == 0, r.stderr
    doc = json.loads(r.stdout)
    pat = re.compile(r"^-?\d+(/\d+)?$")
    for rec in doc["vertices"]:
        for c in rec["coeffs"]:
            assert isinstance(c, str) and pat.match(c)
    rec1 = next(rec for rec in doc["vertices"] if rec["id"] == "1")
    assert rec1["coeffs"] == ["5/4", "3/4"]
    assert doc["checks"]["max_residual"] == "0"


def test_embed_exact_round_trip_is_bit_stable():
    args = ("embed", "--tree", "regular:3,3", "--lambda", "5/4",
            "--backend", "exact")
    first = run_cli(*args)
    second = run_cli(*args)
    assert first.returncode == second.returncode == 0
    assert first.stdout == second.stdout
    doc = json.loads(first.stdout)
    ids = [addr_of(rec["id"]) for rec in doc["vertices"]]
    lam = Fraction(doc["lambda"])
    table = doc["cosh_distances"]
    for i in range(0, len(ids), 5):
        for j in range(0, len(ids), 7):
            assert Fraction(table[i][j]) == lam ** tree_dist(ids[i], ids[j])


def test_embed_csv_format():
    r = run_cli("embed", "--tree", "regular:3,2", "--lambda", "5/4",
                "--backend", "exact", "--format", "csv")
    assert r.returncode == 0
    lines = r.stdout.strip().splitlines()
    assert lines[0] == "vertex,support,coeff"
    assert ",,1" in lines  # the base vertex is its own unit coordinate
    # one row per support entry: 1 + 3*2 + 6*3 over the depth-2 ball
    assert len(lines) == 1 + 25


def test_embed_finite_tree_file(tmp_path):
    path = tmp_path / "tree.txt"
    path.write_text("1 2\n2 3\n2 4\n")
    r = run_cli("embed", "--tree", str(path), "--lambda", "1.25",
                "--base", "1")
    assert r.returncode == 0, r.stderr
    doc = json.loads(r.stdout)
    assert doc["base"] == "1"
    assert len(doc["vertices"]) == 4
    assert doc["checks"]["max_residual"] <= 1e-9


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def test_verify_all_suites_green():
    r = run_cli("verify", "--suite", "all", "--lambda", "1.25")
    assert r.returncode == 0, r.stdout + r.stderr
    lines = r.stdout.strip().splitlines()
    assert all("[ok]" in ln for ln in lines)
    seen = {ln.split("/")[0] for ln in lines}
    assert seen == {"quad", "hymodel", "lorentz", "embed", "gelfand"}


def test_verify_embed_depth6_residual():
    r = run_cli("verify", "--suite", "embed", "--lambda", "1.25",
                "--depth", "6")
    assert r.returncode == 0, r.stdout + r.stderr
    line = next(ln for ln in r.stdout.splitlines()
                if ln.startswith("embed/distance-identity:"))
    value = float(line.split(":")[1].split("[")[0].strip())
    assert value <= 1e-9


def test_verify_gelfand_reports_exact_zero():
    r = run_cli("verify", "--suite", "gelfand")
    assert r.returncode == 0
    assert "0 (exact)" in r.stdout


def test_verify_eps_env_hook():
    import os
    env = dict(os.environ, LORENTREE_EPS="1e-30")
    r = run_cli("verify", "--suite", "hymodel", env=env)
    assert r.returncode == 1
    assert "failed invariant: hymodel/" in r.stderr


# ---------------------------------------------------------------------------
# classify
# ---------------------------------------------------------------------------

def write_matrix(path, rows):
    lines = [f"{len(rows)} basis=lplus,lminus," + ",".join(
        f"f{i}" for i in range(1, len(rows) - 1))]
    lines += [" ".join(str(x) for x in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def test_classify_identity_is_elliptic(tmp_path):
    path = tmp_path / "m.txt"
    write_matrix(path, [[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    r = run_cli("classify", "--matrix", str(path))
    assert r.returncode == 0
    assert r.stdout.strip() == "elliptic"


def test_classify_hyperbolic_reports_ln2(tmp_path):
    path = tmp_path / "m.txt"
    write_matrix(path, [[2, 0, 0], [0, "1/2", 0], [0, 0, 1]])
    r = run_cli("classify", "--matrix", str(path))
    assert r.returncode == 0
    assert r.stdout.startswith("hyperbolic, translation length 0.693147")
    value = float(r.stdout.rsplit(" ", 1)[1])
    assert abs(value - math.log(2.0)) <= 1e-12


def test_classify_non_orthogonal_exit_code(tmp_path):
    path = tmp_path / "m.txt"
    write_matrix(path, [[2, 0, "1/100"], [0, "1/2", 0], [0, 0, 1]])
    r = run_cli("classify", "--matrix", str(path))
    assert r.returncode == 4
    assert "residual" in r.stderr


def test_classify_parse_errors(tmp_path):
    r = run_cli("classify", "--matrix", str(tmp_path / "missing.txt"))
    assert r.returncode == 2
    path = tmp_path / "bad.txt"
    path.write_text("not a header\n1 0\n0 1\n")
    r = run_cli("classify", "--matrix", str(path))
    assert r.returncode == 2


# ---------------------------------------------------------------------------
# project
# ---------------------------------------------------------------------------

def parse_csv_points(text):
    rows = text.strip().splitlines()
    assert rows[0] == "vertex,px,py"
    out = {}
    for row in rows[1:]:
        name, px, py = row.split(",")
        out[name] = (float(px), float(py))
    return out


def test_project_base_maps_to_origin():
    r = run_cli("project", "--tree", "regular:3,1", "--lambda", "1.25",
                "--poincare")
    assert r.returncode == 0, r.stderr
    pts = parse_csv_points(r.stdout)
    assert pts[""] == (0.0, 0.0)
    assert len(pts) == 4


def test_project_two_neighbors_poincare_distance(tmp_path):
    path = tmp_path / "edge.txt"
    path.write_text("1 2\n")
    r = run_cli("project", "--tree", str(path), "--lambda", "1.25",
                "--poincare")
    assert r.returncode == 0, r.stderr
    pts = parse_csv_points(r.stdout)
    (ax, ay), (bx, by) = pts["1"], pts["2"]
    d2 = (ax - bx) ** 2 + (ay - by) ** 2
    den = (1 - ax * ax - ay * ay) * (1 - bx * bx - by * by)
    disk = math.acosh(1 + 2 * d2 / den)
    assert abs(disk - math.log(2.0)) <= 1e-9


def test_project_depth3_ball_stays_in_disk():
    r = run_cli("project", "--tree", "regular:3,3", "--lambda", "1.25",
                "--poincare")
    assert r.returncode == 0, r.stderr
    pts = parse_csv_points(r.stdout)
    assert len(pts) == 22  # 1 + 3 + 6 + 12 vertices in the depth-3 ball
    for px, py in pts.values():
        assert px * px + py * py < 1.0
    assert "distance distortion" in r.stderr


def test_project_malformed_tree():
    r = run_cli("project", "--tree", "regular:oops", "--lambda", "1.25")
    assert r.returncode == 2


# ---------------------------------------------------------------------------
# spherical
# ---------------------------------------------------------------------------

def test_spherical_tables_are_exact():
    r = run_cli("spherical", "--valence", "3", "--max-shell", "2")
    assert r.returncode == 0
    lines = r.stdout.strip().splitlines()
    assert lines[0] == "kind,m,n,shell,value"
    assert "conv,1,1,0,1" in lines
    assert "phi0,,,1,-1" in lines
    assert any(ln.startswith("eigenvalue,,1,,") for ln in lines)


def test_spherical_valence_four_fractions():
    r = run_cli("spherical", "--valence", "4", "--max-shell", "2")
    assert r.returncode == 0
    assert "phi0,,,1,-1/2" in r.stdout.splitlines()


def test_spherical_requires_valence():
    r = run_cli("spherical")
    assert r.returncode == 2
    r = run_cli("spherical", "--valence", "2")
    assert r.returncode == 2
