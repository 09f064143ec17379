import csv
import io
import json
import math

import pytest

from lsdeficit import __version__
from lsdeficit.cli import dumps, main


def _spec(tmp_path, name, components, dim=1):
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps({"dim": dim, "family": "mixture", "components": components}))
    return str(path)


def _gauss(tmp_path, name, mean, var):
    return _spec(tmp_path, name, [{"weight": 1.0, "mean": [mean], "cov": [[var]]}])


def _run(capsys, argv):
    code = main(argv)
    return code, capsys.readouterr()


def test_dumps_format():
    text = dumps({"a": 0.1, "b": [float("nan"), 1], "c": True, "d": None})
    data = json.loads(text)
    assert data == {"a": 0.1, "b": [None, 1], "c": True, "d": None}
    assert "0.10000000000000001" in text


def test_analyze_normal_var4(tmp_path, capsys):
    code, out = _run(capsys, ["analyze", _gauss(tmp_path, "n4", 0.0, 4.0)])
    assert code == 0
    rep = json.loads(out.out)
    f = rep["functionals"]
    assert f["H"] == pytest.approx(0.806853, abs=1e-6)
    assert f["I"] == pytest.approx(2.25, abs=1e-6)
    assert f["deficit"] == pytest.approx(0.318147, abs=1e-6)
    assert f["deficit_via_mmse"] == pytest.approx(0.318147, abs=1e-6)
    assert rep["stein_discrepancy"]["value"] == pytest.approx(3.0, abs=1e-9)
    assert rep["w2"]["value"] == pytest.approx(1.0, abs=1e-9)
    assert rep["tool"] == "lsdeficit" and rep["version"] == __version__
    assert set(rep["config"]) >= {"tol", "gh_order", "seed", "time_split", "time_max"}


def test_analyze_gamma_all_zero(tmp_path, capsys):
    code, out = _run(capsys, ["analyze", _gauss(tmp_path, "g", 0.0, 1.0)])
    rep = json.loads(out.out)
    assert code == 0
    for key in ("H", "I", "deficit"):
        assert rep["functionals"][key] == pytest.approx(0.0, abs=1e-12)
    assert rep["d_est"]["value"] <= 1e-8
    assert rep["dtilde_est"]["value"] <= 1e-8


def test_analyze_extremal(tmp_path, capsys):
    code, out = _run(capsys, ["analyze", _gauss(tmp_path, "e1", 1.0, 1.0)])
    rep = json.loads(out.out)
    assert rep["functionals"]["deficit"] == pytest.approx(0.0, abs=1e-8)
    assert rep["functionals"]["H"] == pytest.approx(0.5, abs=1e-10)
    assert rep["functionals"]["I"] == pytest.approx(1.0, abs=1e-10)
    assert rep["stein_discrepancy"] is None
    assert "stein_discrepancy" in rep["notes"]


def test_analyze_writes_file(tmp_path, capsys):
    out = tmp_path / "r.json"
    code, streams = _run(capsys, ["analyze", _gauss(tmp_path, "n", 0.0, 0.5), "--out", str(out)])
    assert code == 0 and streams.out == ""
    assert json.loads(out.read_text())["w2"]["value"] == pytest.approx(1 - math.sqrt(0.5), abs=1e-9)


def test_bad_weights_exit_2(tmp_path, capsys):
    path = _spec(tmp_path, "bad", [{"weight": 0.9, "mean": [0.0], "cov": [[1.0]]}])
    code, out = _run(capsys, ["verify", path])
    assert code == 2
    assert "error" in out.err


@pytest.mark.parametrize("text", ["{not json", json.dumps({"family": "spline"}), json.dumps([1])])
def test_malformed_specs_exit_2(tmp_path, capsys, text):
    path = tmp_path / "m.json"
    path.write_text(text)
    assert _run(capsys, ["analyze", str(path)])[0] == 2


def test_missing_file_exit_2(tmp_path, capsys):
    assert _run(capsys, ["analyze", str(tmp_path / "none.json")])[0] == 2


def test_verify_gamma(tmp_path, capsys):
    code, out = _run(capsys, ["verify", _gauss(tmp_path, "g", 0.0, 1.0)])
    rep = json.loads(out.out)
    assert code == 0 and rep["failed"] is False
    assert {r["verdict"] for r in rep["reports"]} <= {"pass", "precondition-not-met"}


def test_verify_directory(tmp_path, capsys):
    specs = tmp_path / "specs"
    assert _run(capsys, ["corpus", str(specs)])[0] == 0
    assert len(list(specs.glob("*.json"))) == 12
    reports = tmp_path / "reports"
    code, _ = _run(capsys, ["verify", str(specs), "--out", str(reports), "--threads", "4"])
    assert code == 0
    files = sorted(reports.glob("*.report.json"))
    assert len(files) == 12
    assert all(not json.loads(f.read_text())["failed"] for f in files)


def test_verify_directory_needs_out(tmp_path, capsys):
    assert _run(capsys, ["verify", str(tmp_path)])[0] == 2


def test_verify_deterministic(tmp_path, capsys):
    path = _spec(tmp_path, "pair", [{"weight": 0.5, "mean": [-1.0], "cov": [[1.0]]},
                                    {"weight": 0.5, "mean": [1.0], "cov": [[1.0]]}])
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["verify", path, "--out", str(a)])
    main(["verify", path, "--out", str(b), "--threads", "3"])
    main(["analyze", path, "--out", str(tmp_path / "c.json")])
    main(["analyze", path, "--out", str(tmp_path / "d.json")])
    assert a.read_bytes() != b"" and a.read_bytes().replace(b'"threads": 3', b'"threads": 1') == b.read_bytes().replace(b'"threads": 3', b'"threads": 1')
    assert (tmp_path / "c.json").read_bytes() == (tmp_path / "d.json").read_bytes()


def _flow(capsys, argv):
    code, out = _run(capsys, argv)
    assert code == 0
    rows = list(csv.reader(io.StringIO(out.out)))
    return rows[0], rows[1:]


def test_flow_normal_var4(tmp_path, capsys):
    t = 0.5 * math.log(3.0)
    header, rows = _flow(capsys, ["flow", _gauss(tmp_path, "n4", 0.0, 4.0), "--times", f"0,{t!r}"])
    assert header == ["t", "fisher", "scaled_fisher", "rho", "w", "deficit_integrand"]
    vals = [float(v) for v in rows[1]]
    assert vals[1:] == pytest.approx([0.5, 1.5, 8 / 3, 2 - math.sqrt(2), 0.25], abs=1e-9)
    assert float(rows[0][3]) == pytest.approx(4.0)


def test_flow_gamma_zero(tmp_path, capsys):
    _, rows = _flow(capsys, ["flow", _gauss(tmp_path, "g", 0.0, 1.0)])
    assert len(rows) == 11
    for row in rows:
        t = float(row[0])
        assert [abs(float(row[i])) for i in (1, 2, 4, 5)] == pytest.approx([0, 0, 0, 0], abs=1e-12)
        # E(X | X_t) = e^{-t} X_t under gamma
        assert float(row[3]) == pytest.approx(math.exp(-2 * t), rel=1e-10)


def test_flow_extremal_blank_columns(tmp_path, capsys):
    _, rows = _flow(capsys, ["flow", _gauss(tmp_path, "e1", 1.0, 1.0), "--times", "0.5,1"])
    for row in rows:
        assert row[2] == "" and row[3] == ""
        assert row[4] != ""


def test_flow_2d_has_no_w(tmp_path, capsys):
    path = _spec(tmp_path, "n2", [{"weight": 1.0, "mean": [0.0, 0.0], "cov": [[0.6, 0], [0, 0.6]]}], dim=2)
    _, rows = _flow(capsys, ["flow", path, "--times", "1"])
    assert rows[0][4] == "" and rows[0][3] != ""


def test_flow_rejects_negative_time(tmp_path, capsys):
    assert _run(capsys, ["flow", _gauss(tmp_path, "g", 0.0, 1.0), "--times", "-1"])[0] == 2


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_numeric_failure_exit_3(tmp_path, capsys, monkeypatch):
    import lsdeficit.cli as cli
    from lsdeficit.errors import ToleranceExceededError

    def boom(d, cfg):
        raise ToleranceExceededError("no convergence", 0.0, 1.0)

    monkeypatch.setattr(cli, "deficit", boom)
    assert _run(capsys, ["analyze", _gauss(tmp_path, "g", 0.0, 1.0)])[0] == 3
