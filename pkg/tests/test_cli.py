import json
import subprocess
import sys

import numpy as np
import pytest

from qfrucht.cli import run_command
from qfrucht.fingroup import dumps_group, group_from_json
from qfrucht.qgroup import central_projection
from qfrucht.qspace import operator_from_json

from conftest import dual, group, irreps


@pytest.fixture
def files(tmp_path):
    def write(name, doc):
        path = tmp_path / name
        path.write_text(doc if isinstance(doc, str) else json.dumps(doc))
        return str(path)

    write.dir = tmp_path
    for g in ("Z3", "S3", "Q8", "Z4", "A5"):
        write(f"{g}.json", dumps_group(group(g)))
    return write


def run(argv):
    code, report = run_command(argv)
    assert report["exit_code"] == code
    return code, report


def std_lambda(name="S3"):
    reps = irreps(name)
    std = next(i for i, r in enumerate(reps) if r.dim == 2)
    return central_projection(reps, [std])


def lam_doc(coeffs):
    coeffs = np.asarray(coeffs, dtype=complex)
    return {"basis": "lambda", "re": coeffs.real.tolist(), "im": coeffs.imag.tolist()}


# -- group parsing -----------------------------------------------------------
def test_group_file(files):
    code, rep = run(["group", files("Z3.json", dumps_group(group("Z3")))])
    assert code == 0 and rep["result"]["order"] == 3
    assert list(rep["inputs"].values())[0]


def test_group_builtin():
    code, rep = run(["group", "--builtin", "A5"])
    assert code == 0 and rep["result"]["structure"]["is_perfect"]


def test_group_round_trip(files, tmp_path):
    out = tmp_path / "rep.json"
    run(["group", "--builtin", "Q8", "-o", str(out)])
    doc = json.loads(out.read_text())
    assert group_from_json(doc["result"]["group"]) == group("Q8")


def test_group_report_accepted_as_group_file(tmp_path):
    out = tmp_path / "s3.json"
    run(["group", "--builtin", "S3", "-o", str(out)])
    code, rep = run(["irreps", str(out)])
    assert code == 0 and sorted(rep["result"]["dims"]) == [1, 1, 2]


def test_malformed_json_reports_position(files):
    code, rep = run(["group", files("bad.json", '{"mul": [[0, 1],\n [1 0]]}')])
    assert code == 2 and "line 2" in rep["error"]


def test_latin_square_error(files):
    code, rep = run(["group", files("latin.json", {"order": 2, "mul": [[0, 1], [1, 1]]})])
    assert code == 2 and "Latin" in rep["error"]


def test_associativity_error_names_triple(files):
    table = [[0, 1, 2, 3, 4], [1, 0, 3, 4, 2], [2, 4, 0, 1, 3], [3, 2, 4, 0, 1], [4, 3, 1, 2, 0]]
    code, rep = run(["group", files("magma.json", {"order": 5, "mul": table})])
    assert code == 2 and "associativity fails at triple" in rep["error"]


def test_missing_file():
    code, rep = run(["group", "/nonexistent/g.json"])
    assert code == 2 and "error" in rep


def test_unknown_subcommand():
    code, rep = run(["frobnicate"])
    assert code == 2 and rep["error"] == "usage"


# -- irreps, cayley, verify --------------------------------------------------
def test_irreps_command(files):
    code, rep = run(["irreps", files("S3.json", dumps_group(group("S3")))])
    assert code == 0 and sorted(rep["result"]["dims"]) == [1, 1, 2]


def test_cayley_then_verify(files, tmp_path):
    proj = files("p.json", lam_doc(std_lambda()))
    out = tmp_path / "graph.json"
    code, rep = run(["cayley", "--dual", str(files.dir / "S3.json"), "--projection", proj, "-o", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    op = operator_from_json(doc["result"]["graph"])
    assert op.space.block_sizes == dual("S3").space.block_sizes
    code, rep = run(["verify", str(out)])
    assert code == 0
    assert set(rep["result"]["flags"]["residuals"]) == {"schur_idempotent", "real", "undirected", "loopless"}


def test_verify_failure_exit_one(files):
    rng = np.random.default_rng(0)
    m = rng.normal(size=(3, 3))
    doc = {"space": {"blocks": [1, 1, 1]}, "re": m.tolist(), "im": np.zeros((3, 3)).tolist()}
    code, rep = run(["verify", files("rand.json", doc)])
    assert code == 1 and rep["result"]["is_quantum_graph"] is False


def test_cayley_rejects_non_projection(files):
    proj = files("half.json", lam_doc([0.5, 0, 0, 0, 0, 0]))
    code, rep = run(["cayley", "--dual", str(files.dir / "S3.json"), "--projection", proj])
    assert code == 2 and "not a projection" in rep["error"]


def test_projection_size_checked(files):
    proj = files("short.json", lam_doc([1, 0]))
    code, rep = run(["cayley", "--dual", str(files.dir / "S3.json"), "--projection", proj])
    assert code == 2


# -- rigidity commands -------------------------------------------------------
def test_rigidity_central_character_inconclusive(files):
    proj = files("std.json", lam_doc(std_lambda()))
    code, rep = run(["rigidity", "--dual", str(files.dir / "S3.json"), "--projection", proj])
    assert code == 1 and rep["result"]["verdict"] == "INCONCLUSIVE"
    assert all(isinstance(b, list) for b in rep["result"]["partition"])


def test_rigid_search_q8(files):
    code, rep = run(["rigid-search", "--dual", str(files.dir / "Q8.json"), "--seed", "42"])
    assert code == 0 and rep["result"]["verdict"].startswith("RIGID")
    assert rep["result"]["projection"]["basis"] == "lambda"


def test_rigid_search_abelian_refused(files):
    code, rep = run(["rigid-search", "--dual", str(files.dir / "Z4.json")])
    assert code == 2 and "abelian" in rep["error"]


def test_rigid_search_output_feeds_rigidity(files, tmp_path):
    out = tmp_path / "search.json"
    run(["rigid-search", "--dual", str(files.dir / "S3.json"), "--seed", "42", "-o", str(out)])
    proj = files("found.json", json.loads(out.read_text())["result"]["projection"])
    code, rep = run(["rigidity", "--dual", str(files.dir / "S3.json"), "--projection", proj])
    assert code == 0
    # the search report itself is accepted too
    code, again = run(["rigidity", "--dual", str(files.dir / "S3.json"), "--projection", str(out)])
    assert code == 0 and again["result"]["partition"] == rep["result"]["partition"]


def test_reports_deterministic_and_jobs_invariant(files):
    base = ["rigid-search", "--dual", str(files.dir / "S3.json"), "--seed", "7"]
    _, a = run(base)
    _, b = run(base)
    _, c = run(base + ["--jobs", "3"])
    assert a == b
    a.pop("command"), c.pop("command")
    assert a == c


def test_closure_commands(files):
    s3 = str(files.dir / "S3.json")
    code, rep = run(["closure-check", s3, "--trials", "3"])
    assert code == 0 and rep["result"]["dimensions"] == [6, 6, 6]
    code, rep = run(["closure-check", s3, "--trials", "2", "--trivial-only"])
    assert code == 0 and rep["result"]["dimensions"] == [1, 1]


def test_gap_cert_refused_for_s3(files):
    code, rep = run(["gap-cert", str(files.dir / "S3.json")])
    assert code == 1 and rep["result"]["abelianization_order"] == 2


# -- Frucht commands ---------------------------------------------------------
def test_classical_frucht_command(files, tmp_path):
    dot = tmp_path / "g.dot"
    code, rep = run(["classical-frucht", str(files.dir / "Z3.json"), "--mode", "undirected", "--verify-aut",
                     "--dot", str(dot)])
    assert code == 0 and rep["result"]["aut_order"] == 3 and rep["result"]["vertices"] == 15
    assert dot.read_text().startswith("graph G {")


def test_combine_classical_inputs(files):
    cyc = {"n": 3, "directed": True, "adj": [[0, 0, 1], [1, 0, 0], [0, 1, 0]]}
    code, rep = run(["combine", "--mode", "undirected", files("c3.json", cyc)])
    assert code == 0 and rep["result"]["dimension"] == 9


def test_frucht_command_z3(files):
    code, rep = run(["frucht", "--dual", str(files.dir / "Z3.json")])
    assert code == 0
    assert rep["result"]["hopf"]["passed"]
    assert rep["result"]["dimension"] == 3 * 5


def test_corresp_command(files):
    code, rep = run(["corresp-check", "--dual", str(files.dir / "S3.json"), "--irreps", "0,2", "--samples", "5"])
    assert code == 0 and rep["result"]["identity_verified"]
    code, rep = run(["corresp-check", "--dual", str(files.dir / "S3.json"), "--irreps", "9"])
    assert code == 2


# -- environment and entry point --------------------------------------------
def test_env_tolerance(files, monkeypatch):
    monkeypatch.setenv("QFRUCHT_TOL", "1e-6")
    _, rep = run(["group", "--builtin", "Z3"])
    assert rep["tol"] == 1e-6
    monkeypatch.setenv("QFRUCHT_TOL", "tiny")
    code, rep = run(["group", "--builtin", "Z3"])
    assert code == 2


def test_timing_is_opt_in():
    _, rep = run(["group", "--builtin", "Z3"])
    assert "timing_s" not in rep
    _, rep = run(["group", "--builtin", "Z3", "--timing"])
    assert rep["timing_s"] >= 0


def test_console_script_module():
    proc = subprocess.run([sys.executable, "-m", "qfrucht.cli", "group", "--builtin", "S3"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["result"]["order"] == 6
    proc = subprocess.run([sys.executable, "-m", "qfrucht.cli", "group", "--builtin", "X9"],
                          capture_output=True, text=True)
    assert proc.returncode == 2 and "error" in json.loads(proc.stdout)
