import csv
import json

import numpy as np
import pytest

from helpers import random_dc, random_shallow
from narrownet.cli import main
from narrownet.dc import dump_dc
from narrownet.deepen import dump_shallow
from narrownet.interp import SimplicialInterpolant, dump_vertex_values
from narrownet.net import deserialize, eval_batch


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_compile_convex_fit_and_eval(tmp_path, capsys):
    net_path = tmp_path / "net.json"
    code, out, _ = _run(capsys, "compile", "--target", "parabola", "--mode", "convex", "--k", 10,
                        "--out", net_path)
    assert code == 0
    report = json.loads(out)
    assert report["pass"] and report["metrics"]["hidden_width"] == 2
    assert report["sup_error"] <= 0.0025 + 1e-9

    pts = tmp_path / "pts.csv"
    pts.write_text("x\n0.0\n0.5\n1.0\n")
    code, out, _ = _run(capsys, "eval", net_path, "--points", pts)
    assert code == 0
    rows = list(csv.reader(out.splitlines()))
    assert rows[0] == ["y0"] and len(rows) == 4
    # the fit is the max of tangents at cell centers; at 0.5 the centers 0.45, 0.55 give 0.2475
    assert float(rows[2][0]) == pytest.approx(0.2475, abs=1e-12)


def test_compile_dc_file(tmp_path, capsys):
    f = random_dc(np.random.default_rng(0), 2, 3, 2)
    path = tmp_path / "f.json"
    path.write_text(dump_dc(f))
    code, out, _ = _run(capsys, "compile", "--target", f"dc-file:{path}", "--mode", "dc",
                        "--output-mode", "linear", "--scan", "random:2000")
    assert code == 0
    report = json.loads(out)
    assert report["metrics"]["hidden_width"] == 5 and report["metrics"]["hidden_blocks"] == 10
    assert report["sup_error"] <= 1e-9


def test_compile_continuous_and_verify(tmp_path, capsys):
    net_path = tmp_path / "hat.json"
    code, out, _ = _run(capsys, "compile", "--target", "hat", "--dim", 2, "--mode", "continuous",
                        "--eps", 0.2, "--out", net_path)
    assert code == 0
    assert json.loads(out)["metrics"]["hidden_width"] == 5
    code, out, _ = _run(capsys, "verify", net_path, "--target", "hat", "--dim", 2, "--tol", 0.2,
                        "--width", 5)
    assert code == 0 and json.loads(out)["pass"]
    # a net and target of different dimensions is a usage error
    code, out, _ = _run(capsys, "verify", net_path, "--target", "parabola", "--dim", 1, "--tol", 1e-6)
    assert code == 2


def test_verify_failure_exit_code(tmp_path, capsys):
    net_path = tmp_path / "net.json"
    _run(capsys, "compile", "--target", "parabola", "--mode", "convex", "--k", 2, "--out", net_path)
    code, out, _ = _run(capsys, "verify", net_path, "--target", "parabola", "--tol", 1e-6)
    assert code == 1 and not json.loads(out)["pass"]


def test_compile_vertex_file(tmp_path, capsys):
    p = SimplicialInterpolant(1, 2, [0.0, 0.5, 0.0])
    path = tmp_path / "v.txt"
    path.write_text(dump_vertex_values(p))
    code, out, _ = _run(capsys, "compile", "--target", f"vertex-file:{path}", "--lipschitz", 1,
                        "--mode", "continuous", "--eps", 0.5)
    assert code == 0, out


def test_compile_deepen(tmp_path, capsys):
    s = random_shallow(np.random.default_rng(1), 2, 4)
    path = tmp_path / "s.json"
    path.write_text(dump_shallow(s))
    net_path = tmp_path / "deep.json"
    code, out, _ = _run(capsys, "compile", "--target", f"shallow-file:{path}", "--mode", "deepen",
                        "--out", net_path)
    assert code == 0
    net = deserialize(net_path.read_text())
    xs = np.random.default_rng(2).random((500, 2))
    np.testing.assert_allclose(eval_batch(net, xs)[:, 0], s.evaluate(xs), rtol=0, atol=1e-9)


def test_rate_k_list(tmp_path, capsys):
    code, out, _ = _run(capsys, "rate", "--target", "norm2-sq", "--dim", 2, "--k-list", "4,16,64")
    assert code == 0
    rows = list(csv.DictReader(out.splitlines()))
    assert [r["k"] for r in rows] == ["4", "16", "64"]
    errs = [float(r["sup_error"]) for r in rows]
    assert errs[0] > errs[1] > errs[2]
    assert all(float(r["sup_error"]) <= float(r["paper_bound"]) for r in rows)


def test_rate_eps_list(capsys):
    code, out, _ = _run(capsys, "rate", "--target", "hat", "--eps-list", "0.5,0.25")
    assert code == 0
    rows = list(csv.DictReader(out.splitlines()))
    assert all(float(r["sup_error"]) <= float(r["eps"]) for r in rows)
    assert all(r["width"] == "4" for r in rows)


def test_outputs_byte_identical(tmp_path, capsys):
    outs = []
    for i in range(2):
        path = tmp_path / f"n{i}.json"
        _, report, _ = _run(capsys, "compile", "--target", "sin2d-positive", "--mode", "continuous",
                            "--eps", 0.5, "--scan", "random:500,seed=3", "--out", path)
        outs.append((path.read_bytes(), report))
    assert outs[0] == outs[1]


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["compile", "--target", "nope", "--mode", "convex", "--k", "2"],
        ["compile", "--target", "hat", "--mode", "convex", "--k", "2"],  # not convex
        ["compile", "--target", "parabola", "--mode", "convex"],  # missing --k
        ["compile", "--target", "hat", "--mode", "continuous"],  # missing --eps
        ["compile", "--target", "parabola", "--dim", "3", "--mode", "convex", "--k", "2"],
        ["compile", "--target", "parabola", "--mode", "convex", "--k", "2", "--scan", "mesh:3"],
        ["eval", "/nonexistent/net.json", "--points", "-"],
        ["rate", "--target", "parabola"],
    ],
)
def test_usage_errors_exit_2(argv, capsys):
    assert main(argv) == 2


def test_bad_points_csv(tmp_path, capsys):
    net_path = tmp_path / "net.json"
    _run(capsys, "compile", "--target", "parabola", "--mode", "convex", "--k", 2, "--out", net_path)
    pts = tmp_path / "pts.csv"
    pts.write_text("x\n0.1,0.2\n")
    code, _, err = _run(capsys, "eval", net_path, "--points", pts)
    assert code == 2 and "row 2" in err


def test_budget_exit_code(monkeypatch, capsys):
    code, _, err = _run(capsys, "compile", "--target", "hat", "--dim", 3, "--mode", "continuous",
                        "--eps", 0.01, "--budget-vertices", 1000)
    assert code == 3 and "budget" in err
    monkeypatch.setenv("NARROWNET_BUDGET", "100")
    code, _, _ = _run(capsys, "compile", "--target", "hat", "--mode", "continuous", "--eps", 0.01)
    assert code == 3
