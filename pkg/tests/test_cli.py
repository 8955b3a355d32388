import json
import subprocess
import sys

import pytest

from martcurtain.cli import main
from martcurtain.coupling import Coupling
from martcurtain.measures import DiscreteMeasure


@pytest.fixture
def files(tmp_path):
    docs = {
        "mu": {"atoms": [[-1, 0.5], [1, 0.5]]},
        "nu": {"atoms": [[-2, 0.25], [0, 0.5], [2, 0.25]]},
        "d0": {"atoms": [[0, 1]]},
        "d1": {"atoms": [[1, 1]]},
        "probe": {"type": "cst", "s": 0, "t": 0},
        "power": {"type": "power", "p": 1},
        "crossing": {"support": [[0, -1], [0, 1], [1, 0]]},
    }
    out = {}
    for name, doc in docs.items():
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps(doc))
        out[name] = str(p)
    return out


def run(capsys, *argv):
    code = main(list(argv))
    return code, json.loads(capsys.readouterr().out)


def test_left_curtain_spread(capsys, files):
    code, rep = run(capsys, "left-curtain", "--mu", files["mu"], "--nu", files["nu"])
    assert code == 0
    assert rep["result"]["coupling"]["entries"] == [[0, 0, 0.25], [0, 1, 0.25], [1, 1, 0.25], [1, 2, 0.25]]
    assert rep["tolerances"]["tol"] == 1e-9
    assert set(rep) >= {"command", "inputs", "result", "timing", "tolerances"}


def test_round_trip(capsys, files, tmp_path):
    _, rep = run(capsys, "left-curtain", "--mu", files["mu"], "--nu", files["nu"])
    doc = rep["result"]["coupling"]
    pi = Coupling.from_json(doc)
    assert pi.to_json() == doc
    path = tmp_path / "pi.json"
    path.write_text(json.dumps(doc))
    code, rep = run(capsys, "verify-martingale", "--coupling", str(path))
    assert code == 0
    _, rep = run(capsys, "shadow", "measure", "--nu", files["nu"], "--mu", files["mu"])
    assert DiscreteMeasure.from_json(rep["result"]["shadow"]).to_json() == rep["result"]["shadow"]


def test_means_differ(capsys, files):
    code, rep = run(capsys, "check-order", "cx", "--mu", files["d0"], "--nu", files["d1"])
    assert code == 1
    assert rep["witnesses"][0]["reason"] == "means differ"


def test_not_convex_order(capsys, files):
    code, rep = run(capsys, "solve", "--mu", files["d1"], "--nu", files["mu"], "--cost", files["power"])
    assert code == 2
    assert rep["error"]["name"] == "NotConvexOrder"


def test_malformed_json(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    code, rep = run(capsys, "potential", "--measure", str(bad))
    assert code == 2
    assert rep["error"]["name"] == "JSONDecodeError"


def test_schema_violation(capsys, tmp_path):
    bad = tmp_path / "m.json"
    bad.write_text(json.dumps({"atoms": [[1, 0.5], [0, 0.5]]}))
    code, rep = run(capsys, "potential", "--measure", str(bad))
    assert code == 2
    assert rep["error"]["name"] == "MeasureError"


def test_potential(capsys, files):
    code, rep = run(capsys, "potential", "--measure", files["nu"], "--at", "0.5")
    assert code == 0
    assert rep["result"]["evaluations"] == [[0.5, 1.25]]


def test_monotone_witness(capsys, files):
    code, rep = run(capsys, "verify-monotone", "--support", files["crossing"])
    assert code == 1
    assert rep["witnesses"][0] == {"x": 0.0, "y_minus": -1.0, "y_plus": 1.0, "x_prime": 1.0, "y_prime": 0.0}


def test_solve_and_dual(capsys, files):
    code, primal = run(capsys, "solve", "--mu", files["mu"], "--nu", files["nu"], "--cost", files["probe"])
    assert code == 0
    code, dual = run(capsys, "solve-dual", "--mu", files["mu"], "--nu", files["nu"], "--cost", files["probe"])
    assert code == 0
    assert dual["result"]["value"] == pytest.approx(primal["result"]["value"], abs=1e-8)
    assert dual["result"]["splitting"]["passed"]


def test_finite_optimality_and_uniqueness(capsys, files):
    code, rep = run(capsys, "verify-finite-optimality", "--support", files["crossing"], "--cost", files["power"],
                    "--k", "1")
    assert code == 0
    code, rep = run(capsys, "verify-uniqueness", "--mu", files["mu"], "--nu", files["nu"], "--grid", "midpoints")
    assert code == 0 and rep["result"]["passed"]


def test_decompose_and_shadow_atom(capsys, files):
    code, rep = run(capsys, "decompose", "--mu", files["mu"], "--nu", files["nu"])
    assert code == 0 and len(rep["result"]["components"]) == 2
    code, rep = run(capsys, "shadow", "atom", "--nu", files["nu"], "--x", "-1", "--m", "0.5")
    assert rep["result"]["shadow"] == {"atoms": [[-2.0, 0.25], [0.0, 0.25]]}
    code, rep = run(capsys, "shadow", "atom", "--nu", files["nu"], "--x", "5", "--m", "0.5")
    assert code == 2 and rep["error"]["name"] == "ExtendedOrderViolated"


def test_tolerance_flags_and_env(capsys, files, monkeypatch):
    from martcurtain import config
    monkeypatch.setattr(config, "TOLERANCES", config.Tolerances())
    _, rep = run(capsys, "--tol", "1e-7", "--feas-tol", "1e-6", "potential", "--measure", files["mu"])
    assert rep["tolerances"]["tol"] == 1e-7 and rep["tolerances"]["feas_tol"] == 1e-6
    monkeypatch.setenv("MARTCURTAIN_TOL", "1e-6")
    out = subprocess.run([sys.executable, "-m", "martcurtain", "potential", "--measure", files["mu"]],
                         capture_output=True, text=True, check=True)
    assert json.loads(out.stdout)["tolerances"]["tol"] == 1e-6


def test_verify_suite_subset(capsys):
    code, rep = run(capsys, "verify-suite", "--only", "10")
    assert code == 0
    assert [c["number"] for c in rep["result"]["criteria"]] == [10]
