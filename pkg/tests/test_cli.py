import csv
import json

import numpy as np
import pytest
from scipy import special

from mlcontour.cli import SCHEMA_VERSION, run
from mlcontour.models import ModelSpec, build_generator


def read_csv(path):
    meta, rows = [], []
    with open(path) as fh:
        for line in fh:
            if line.startswith("# "):
                meta.append(line[2:])
            else:
                rows.append(line)
    table = list(csv.reader(rows))
    return json.loads("".join(meta)), table[0], table[1:]


def err_json(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def test_model_json_is_mono5(tmp_path):
    out = tmp_path / "m.json"
    assert run(["model", "--model", "mono", "--m", "5", "--format", "json", "-o", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["schema"] == SCHEMA_VERSION
    assert doc["meta"]["tool"] == "mlcontour" and doc["meta"]["command"] == "model"
    A = build_generator(ModelSpec("mono", m=5))
    assert doc["matrix"]["diag"] == A.diag.tolist()
    assert doc["matrix"]["sub"] == A.sub.tolist()
    assert doc["matrix"]["sup"] == A.sup.tolist()


def test_bound_example(tmp_path):
    out = tmp_path / "b.json"
    argv = ["bound", "--model", "mono", "--m", "100", "--c1", "1", "--c2", "1",
            "--bc", "zero-flux", "--convention", "matrix", "-o", str(out)]
    assert run(argv) == 0
    doc = json.loads(out.read_text())
    assert (doc["K"], doc["beta0"], doc["beta1"]) == pytest.approx((100.0, 1.0, 1.0), rel=1e-12)
    assert doc["convention"] == "matrix" and doc["bc"] == "zero-flux"


def test_solve_csv_full_precision(tmp_path):
    out = tmp_path / "p.csv"
    argv = ["solve", "--model", "mono", "--m", "30", "--alpha", "1", "--t", "0.7", "-o", str(out)]
    assert run(argv) == 0
    meta, header, rows = read_csv(out)
    assert header == ["state", "probability"]
    assert meta["config"]["alpha"] == 1.0 and meta["argv"] == argv
    assert "version" in meta and "seed" in meta
    p = np.array([float(r[1]) for r in rows])
    q = 0.5 * (1 - np.exp(-1.4))
    k = np.arange(31)
    ref = special.comb(30, k) * q**k * (1 - q) ** (30 - k)
    assert np.max(np.abs(p - ref)) < 1e-9
    # 17 significant digits round-trip the doubles exactly
    assert all(float(r[1]) == float(format(float(r[1]), ".17g")) for r in rows)
    assert max(len(r[1].replace("-", "").replace(".", "").split("e")[0].lstrip("0")) for r in rows) == 17


def test_matrix_file_round_trip(tmp_path):
    m = tmp_path / "m.json"
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(["model", "--model", "bi", "--m", "12", "--format", "json", "-o", str(m)]) == 0
    assert run(["solve", "--model", "bi", "--m", "12", "--alpha", "0.8", "-o", str(a)]) == 0
    assert run(["solve", "--matrix-file", str(m), "--alpha", "0.8", "-o", str(b)]) == 0
    assert read_csv(a)[2] == read_csv(b)[2]


def test_solve_json_and_diagnostics(tmp_path):
    out, diag = tmp_path / "p.json", tmp_path / "d.json"
    assert run(["solve", "--model", "walk", "--m", "10", "--alpha", "0.7", "--x0", "5",
                "--resolvent", "--format", "json", "-o", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert len(doc["p"]) == 11 and doc["diagnostics"]["mass_defect"] < 1e-10
    assert len(doc["diagnostics"]["resolvent"]) == 17
    assert run(["solve", "--model", "walk", "--m", "10", "-o", str(tmp_path / "p.csv"),
                "--diagnostics", str(diag)]) == 0
    assert "diagnostics" in json.loads(diag.read_text())


def test_contour_output(tmp_path):
    out = tmp_path / "c.csv"
    assert run(["contour", "--t", "1", "--M", "16", "-o", str(out)]) == 0
    meta, header, rows = read_csv(out)
    assert header == ["k", "re_z", "im_z", "re_c", "im_c"]
    assert len(rows) == 33 and [int(r[0]) for r in rows] == list(range(-16, 17))
    assert meta["contour"]["mu"] == pytest.approx(71.87320448)


def test_simulate(tmp_path):
    h, p = tmp_path / "h.csv", tmp_path / "p.csv"
    assert run(["simulate", "--model", "mono", "--m", "10", "--alpha", "0.9", "--t-final", "1",
                "--samples", "20", "--seed", "5", "-o", str(h)]) == 0
    meta, header, rows = read_csv(h)
    assert meta["seed"] == 5 and sum(int(r[1]) for r in rows) == 20
    assert run(["simulate", "--model", "mono", "--m", "10", "--alpha", "0.9", "--t-final", "100",
                "--record", "path", "-o", str(p)]) == 0
    _, header, rows = read_csv(p)
    assert header == ["t", "x0", "x1"] and float(rows[-1][0]) == 100.0


def test_fov_and_psgrid(tmp_path):
    f, g = tmp_path / "f.csv", tmp_path / "g.csv"
    assert run(["fov", "--model", "mono", "--m", "10", "--angles", "16", "-o", str(f)]) == 0
    assert len(read_csv(f)[2]) == 16
    assert run(["psgrid", "--model", "mono", "--m", "10", "--re-min", "-25", "--re-max", "2",
                "--im-min", "-5", "--im-max", "5", "--nx", "4", "--ny", "5", "-o", str(g)]) == 0
    meta, header, rows = read_csv(g)
    assert header == ["re", "im", "log10_norm"] and len(rows) == 20
    assert meta["unconverged"] == 0


def test_check_contour_fails_numerically(tmp_path, capsys):
    out = tmp_path / "cc.csv"
    code = run(["check-contour", "--model", "mono", "--m", "100", "-o", str(out)])
    assert code == 3
    assert err_json(capsys)["type"] == "NoWideningSuffices"
    _, header, rows = read_csv(out)
    assert header[:3] == ["k", "re_z", "im_z"] and len(rows) == 33


def test_check_contour_passes(tmp_path, capsys):
    out, summary = tmp_path / "cc.csv", tmp_path / "s.json"
    code = run(["check-contour", "--model", "walk", "--m", "10", "--region", "fov", "--resolvent",
                "-o", str(out), "--summary", str(summary)])
    assert code == 0
    s = json.loads(summary.read_text())["summary"]
    assert s["suggested_widen"] is not None and "resolvent" in s


def test_validation_exit_code(capsys):
    assert run(["solve", "--model", "mono", "--m", "10", "--alpha", "1.5"]) == 2
    assert err_json(capsys)["exit_code"] == 2
    assert run(["solve", "--bogus-flag"]) == 2
    assert err_json(capsys)["type"] == "ValidationError"
    assert run(["model", "--model", "nope", "--m", "3"]) == 2
    assert run(["solve"]) == 2


def test_assumption_violated_exit_code(capsys):
    assert run(["bound", "--model", "schlogl"]) == 3
    e = err_json(capsys)
    assert e["type"] == "AssumptionViolated" and e["which"] == "beta0>0"


def test_threads_env(monkeypatch, tmp_path):
    monkeypatch.setenv("MLCONTOUR_THREADS", "x")
    assert run(["contour"]) == 2
    monkeypatch.setenv("MLCONTOUR_THREADS", "1")
    assert run(["contour", "-o", str(tmp_path / "c.csv")]) == 0
