import json
import math
from pathlib import Path

import numpy as np
import pytest

from scgldpc import cli_io
from scgldpc.cli_io import SpecError, emit_csv, parse_spec, read_csv, run, serialize_spec
from scgldpc.protograph import BUILTINS, block_hamming7, builtin, design_rate


@pytest.mark.parametrize("name", BUILTINS)
def test_spec_round_trip(name):
    spec = builtin(name)
    doc = serialize_spec(spec)
    again = parse_spec(json.dumps(doc, indent=2))
    assert serialize_spec(again) == doc
    assert design_rate(again.terminate(5)) == design_rate(spec.terminate(5))
    assert np.array_equal(again.terminate(3).base, spec.terminate(3).base)


def test_plain_protograph_round_trip():
    p = block_hamming7()
    again = parse_spec(json.dumps(serialize_spec(p)))
    assert np.array_equal(again.base, p.base) and again.codes == p.codes


BAD_ROW = """{
  "codes": {
    "h": ["1001110",
          "01x1101"]
  },
  "row_codes": ["h"],
  "base": [[1, 1, 1, 1, 1, 1, 1]],
  "column_maps": [[0, 1, 2, 3, 4, 5, 6]]
}
"""


def test_malformed_row_is_line_anchored(tmp_path, capsys):
    with pytest.raises(SpecError) as err:
        parse_spec(BAD_ROW, "s.json")
    assert err.value.line == 4
    assert str(err.value).startswith("s.json:4:")
    f = tmp_path / "bad.json"
    f.write_text(BAD_ROW)
    assert run(["construct", "--spec", str(f), "--out", str(tmp_path / "o")]) != 0
    assert f"{f}:4:" in capsys.readouterr().err


def test_json_syntax_error_line():
    with pytest.raises(SpecError) as err:
        parse_spec('{\n "codes": {\n "h": ["11"],\n }\n}')
    assert err.value.line == 4


def test_components_mismatch():
    doc = serialize_spec(builtin("A7"))
    doc["coupling"]["components"][0][0][0] = 1
    with pytest.raises(SpecError, match="sum"):
        parse_spec(json.dumps(doc, indent=1))
    doc = serialize_spec(builtin("A7"))
    doc["coupling"]["w"] = 2
    with pytest.raises(SpecError):
        parse_spec(json.dumps(doc))


def test_emit_csv_format(tmp_path):
    rows = [(0.1, 1 / 3, 2, True, float("nan")), (1e-20, math.pi * 1e6, -1, False, "x")]
    a = emit_csv(["epsilon", "h_bp", "k", "flag", "s"], rows, tmp_path / "a.csv")
    b = emit_csv(["epsilon", "h_bp", "k", "flag", "s"], rows, tmp_path / "b.csv")
    data = a.read_bytes()
    assert data == b.read_bytes()
    assert b"\r" not in data
    lines = data.decode().splitlines()
    assert lines[0] == "epsilon,h_bp,k,flag,s"
    assert lines[1] == "0.1,0.333333333333,2,1,nan"
    assert lines[2] == "1e-20,3141592.65359,-1,0,x"


def test_construct_a7(tmp_path, capsys):
    assert run(["construct", "--builtin", "A7", "--L", "50", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "delta=2" in out and "rate=23/175" in out
    d = read_csv(tmp_path / "construct.csv")
    assert d["delta"][0] == 2 and d["rate"][0] == pytest.approx(1 - (6 * 51 - 2) / 350)
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["command"] == "construct" and man["arguments"]["seed"] == 0
    assert "numpy" in man["versions"] and man["spec"]["name"] == "A7"


def test_invalid_ranges_rejected_before_compute(tmp_path, capsys):
    assert run(["simulate", "--builtin", "A7", "--eps", "1.5", "--M", "10",
                "--out", str(tmp_path / "x")]) == 2
    assert "outside" in capsys.readouterr().err
    assert not (tmp_path / "x").exists()
    assert run(["threshold", "--builtin", "A7", "--tol", "-1", "--out", str(tmp_path)]) == 2
    assert run(["construct", "--builtin", "NOPE", "--out", str(tmp_path)]) == 2


def test_exit_and_threshold(tmp_path):
    assert run(["exit", "--builtin", "A7", "--eps-grid", "0:1:101", "--out", str(tmp_path)]) == 0
    d = read_csv(tmp_path / "exit.csv")
    assert list(d) == ["epsilon", "h_bp"] and len(d["epsilon"]) == 101
    m = read_csv(tmp_path / "map_bound.csv")
    assert m["eps_map_bound"][0] == pytest.approx(0.856, abs=5e-3)
    assert run(["threshold", "--builtin", "A7", "--L", "2,3", "--tol", "1e-3",
                "--out", str(tmp_path)]) == 0
    t = read_csv(tmp_path / "threshold.csv")
    assert t["L"].tolist() == [2, 3]
    assert t["eps_bp"][0] > t["eps_bp"][1]


def test_simulate_deterministic_and_trajectories(tmp_path):
    args = ["simulate", "--builtin", "A7", "--L", "3", "--M", "50", "--eps", "0.8",
            "--trials", "6", "--seed", "4", "--trajectories"]
    assert run(args + ["--out", str(tmp_path / "a")]) == 0
    assert run(args + ["--out", str(tmp_path / "b")]) == 0
    files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*.csv"))
    assert len(files) == 2 + 6
    for f in files:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    traj = read_csv(next((tmp_path / "a").rglob("trial00000.csv")))
    assert list(traj) == ["tau", "a", "v"]
    n = 50 * 21
    stride = math.ceil(n / 2000)
    steps = int(round(traj["tau"][-1] * n))
    assert len(traj["tau"]) == steps // stride + 1 + (steps % stride != 0)


def test_evolve_fit_predict_pipeline(tmp_path):
    out = tmp_path / "sim"
    assert run(["simulate", "--builtin", "A7", "--M", "300", "--eps", "0.66", "--trials", "30",
                "--seed", "1", "--trajectories", "--lam", "1", "--out", str(out)]) == 0
    traj_dir = next(out.glob("traj_*"))
    assert run(["evolve", "--builtin", "A7", "--lam", "1", "--eps", "0.66,0.69",
                "--out", str(tmp_path / "ev")]) == 0
    crit = read_csv(tmp_path / "ev" / "critical.csv")
    assert crit["v_star"][1] == pytest.approx(0.43, abs=0.02)
    assert run(["fit", "--builtin", "A7", "--lam", "1", "--eps", "0.66", "--eps-star", "0.7033",
                "--M", "300", "--traj-dir", str(traj_dir), "--out", str(tmp_path / "fit")]) == 0
    fit = read_csv(tmp_path / "fit" / "fit.csv")
    alpha = float(fit["value"][list(fit["parameter"]).index("alpha")])
    assert 0.5 < alpha < 5
    assert run(["predict", "--builtin", "A7", "--lam", "1", "--alpha", str(alpha),
                "--eps-star", "0.7033", "--M", "300", "--eps", "0.66",
                "--sim", str(out / "bler.csv"), "--out", str(tmp_path / "pr")]) == 0
    pr = read_csv(tmp_path / "pr" / "predict.csv")
    assert 0 <= pr["predicted"][0] <= 1 and not math.isnan(pr["simulated"][0])
    assert run(["predict", "--alpha", "5.66", "--theta", "0.87", "--eps-star", "0.8",
                "--M", "500", "--L", "50", "--eps-grid", "0.76:0.78:3",
                "--out", str(tmp_path / "sc")]) == 0
    sc = read_csv(tmp_path / "sc" / "predict.csv")
    assert np.all(np.diff(sc["predicted"]) > 0)


def test_shape_size_warning(tmp_path, capsys, monkeypatch):
    class B:
        lower = upper = 0.8

    monkeypatch.setattr(cli_io.ss, "free_distance_bounds", lambda *a, **k: B())
    assert run(["shape", "--builtin", "A7", "--T", "14", "--out", str(tmp_path)]) == 0
    assert "desk-scale" in capsys.readouterr().err
    assert read_csv(tmp_path / "free_distance.csv")["T"].tolist() == [14]


def test_console_entry_point():
    import importlib.metadata as md
    eps = [e for e in md.entry_points(group="console_scripts") if e.name == "scgldpc"]
    assert eps and eps[0].value == "scgldpc.cli_io:main"


def test_evolve_extrapolated_threshold(tmp_path, capsys):
    args = ["evolve", "--builtin", "A7", "--eps", "0.69", "--threshold"]
    assert run(args + ["--extrapolate", "0.67,0.68,0.69,0.70", "--out", str(tmp_path)]) == 0
    th = read_csv(tmp_path / "gpd_threshold.csv")["eps_star"][0]
    assert th == pytest.approx(0.7033, abs=5e-4)
    assert run(args + ["--extrapolate", "0.70,0.71,0.72", "--out", str(tmp_path / "x")]) == 2
    assert "below threshold" in capsys.readouterr().err
