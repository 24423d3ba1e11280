import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aclab.ac_solver import ramp_1d
from aclab.cli import main
from aclab.errors import DegenerateFit, GridTooCoarse, NeverGenerated
from aclab.grid import Field, Grid
from aclab.harness import (SweepConfig, SweepRecord, Trajectory, default_config, export, fit_power, kbar,
                           kbar_erf, kbar_residual, measure_generation_time, read_csv, run_scenario,
                           run_sweep, volterra_iterate, write_csv)


def small_cfg(**kw):
    d = dict(scenario="1d-generation", eps_list=[0.08, 0.04, 0.1], domain=[4.0], T=0.01)
    d.update(kw)
    return SweepConfig.from_dict(d)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def test_config_sorting_and_guard():
    cfg = small_cfg()
    assert cfg.eps_list == [0.1, 0.08, 0.04]
    with pytest.raises(GridTooCoarse):
        small_cfg(h_ratio=3.0)
    with pytest.raises(ValueError):
        SweepConfig.from_dict({"scenario": "1d-generation", "eps_list": [0.1], "bogus": 1})
    with pytest.raises(ValueError):
        default_config("nope")


def test_config_json_roundtrip(tmp_path):
    cfg = default_config("radial2d-curvature")
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg.to_dict()))
    assert json.dumps(SweepConfig.from_json(p).to_dict()) == json.dumps(cfg.to_dict())


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------

def test_fit_power_examples():
    x = np.array([0.01, 0.02, 0.04, 0.08])
    s, c, r2 = fit_power(zip(x, 2 * x))
    assert s == pytest.approx(1.0, abs=1e-12) and c == pytest.approx(math.log(2), abs=1e-12)
    assert r2 == pytest.approx(1.0)
    assert fit_power(zip(x, 3 * x ** 2))[0] == pytest.approx(2.0, abs=1e-12)


@pytest.mark.parametrize("pts", [[(1, 1), (2, 2)], [(1, 1), (2, -1), (3, 3)], [(1, 1), (1, 2), (1, 3)]])
def test_fit_power_degenerate(pts):
    with pytest.raises(DegenerateFit):
        fit_power(pts)


@settings(max_examples=30)
@given(st.floats(-3, 3), st.floats(0.1, 10))
def test_fit_power_recovers_exponent(p, c):
    x = np.geomspace(0.01, 0.1, 5)
    assert fit_power(zip(x, c * x ** p))[0] == pytest.approx(p, abs=1e-9)


# ---------------------------------------------------------------------------
# Volterra function
# ---------------------------------------------------------------------------

def test_kbar_examples():
    assert kbar(0.0, 3.0) == 1.0
    for C in (0.5, 1.0, 2.0):
        for t in (0.01, 0.1, 0.5, 1.0, 2.0):
            assert kbar(t, C) == pytest.approx(kbar_erf(t, C), rel=1e-8)
    ts = np.linspace(0, 2, 50)
    vals = [kbar(t, 1.0) for t in ts]
    assert np.all(np.diff(vals) > 0)


def test_kbar_residual():
    assert kbar_residual(1.0, 1.0) <= 1e-6
    assert kbar_residual(0.7, 0.0) == 0.0
    with pytest.raises(ValueError):
        kbar_residual(0.0, 1.0)


def test_volterra_iterate_below_kbar():
    t, k = volterra_iterate(1.0, 1.0, n=400)
    kb = np.array([kbar(s, 1.0) for s in t])
    assert k[0] == 1.0
    assert np.all(k <= (1 + 1e-3) * kb)
    assert np.max(np.abs(k / kb - 1)) <= 1e-2


# ---------------------------------------------------------------------------
# generation time
# ---------------------------------------------------------------------------

def _traj(snaps, eps, cubic, x0=2.0):
    d = snaps[0].grid.x - x0
    return Trajectory(snaps, d, cubic, eps)


def test_generation_time_already_layered(cubic):
    eps = 0.04
    g = Grid.line(4.0, 401)
    te = eps ** 2 * abs(math.log(eps))
    u = np.tanh((g.x - 2.0) / (math.sqrt(2) * eps))
    snaps = [Field(g, u, te / 25 * k) for k in range(1, 5)]
    assert measure_generation_time(_traj(snaps, eps, cubic), 0.1, 4.16) == pytest.approx(te / 25)


def test_generation_time_errors(cubic):
    eps = 0.04
    g = Grid.line(4.0, 401)
    te = eps ** 2 * abs(math.log(eps))
    ramp = ramp_1d(g, 2.0, slope=0.3)
    with pytest.raises(NeverGenerated):
        measure_generation_time(_traj([ramp.with_values(ramp.values, te / 25)], eps, cubic), 0.1, 4.16)
    with pytest.raises(ValueError):
        measure_generation_time(_traj([ramp.with_values(ramp.values, te)], eps, cubic), 0.1, 4.16)


def test_run_scenario_1d_records_generation():
    cfg = default_config("1d-generation", [0.04])
    art = run_scenario(cfg, 0.04)
    r = art.record
    assert 0.5 * r.t_gen_theory <= r.t_gen <= 1.5 * r.t_gen_theory
    assert 2.0 <= r.thickness / r.eps <= 8.0
    assert np.isfinite(r.hausdorff_max)


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------

def test_export_header_only(tmp_path):
    csv_path, man = export([], tmp_path / "e.csv")
    assert open(csv_path).read() == ",".join(SweepRecord.columns()) + "\n"
    assert json.load(open(man))["tool"] == "aclab"


def test_export_one_record_roundtrip(tmp_path):
    r = SweepRecord("1d-generation", 0.1 / 3, math.pi / 1e3, 1 / 7, 0.02, thickness=2 / 3, t_gen=1e-300,
                    v_err=float("nan"))
    csv_path, _ = export([r], tmp_path / "o.csv", small_cfg())
    assert len(open(csv_path).read().splitlines()) == 2
    (back,) = read_csv(csv_path)
    for c in SweepRecord.columns():
        a, b = getattr(r, c), getattr(back, c)
        assert a == b or (isinstance(a, float) and math.isnan(a) and math.isnan(b))


@settings(max_examples=50)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=5, max_size=5))
def test_csv_roundtrip_bit_exact(tmp_path_factory, vals):
    path = tmp_path_factory.mktemp("rt") / "r.csv"
    r = SweepRecord("pp-radial", *vals)
    write_csv([r], path)
    (back,) = read_csv(path)
    assert [back.eps, back.h, back.dt, back.T, back.thickness] == vals


def test_sweep_deterministic(tmp_path):
    cfg = small_cfg(eps_list=[0.1, 0.08])
    paths = []
    for k in range(2):
        recs, _ = run_sweep(cfg)
        p = tmp_path / f"s{k}.csv"
        write_csv(recs, p)
        paths.append(p)
    assert paths[0].read_bytes() == paths[1].read_bytes()


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

def test_cli_profile_and_kbar(tmp_path, capsys):
    assert main(["profile", "--out", str(tmp_path / "p.csv")]) == 0
    out = capsys.readouterr().out
    assert "c0 = 1.06066017" in out
    assert open(tmp_path / "p.csv").readline().strip() == "z,U0,dU0,d2U0"
    assert main(["kbar", "--c", "1", "--t", "1"]) == 0
    out = capsys.readouterr().out
    vals = {l.split("=")[0].strip(): float(l.split("=")[1]) for l in out.splitlines()}
    assert vals["kbar"] == pytest.approx(vals["erf form"], rel=1e-12)


def test_cli_corrector(capsys):
    assert main(["corrector", "--g0", "1"]) == 0
    out = capsys.readouterr().out
    assert "U1(-inf) = -0.4999" in out


def test_cli_simulate_and_sweep(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"T": 0.01, "domain": [4.0]}))
    assert main(["simulate", "--scenario", "1d-generation", "--eps", "0.08", "--config", str(cfg),
                 "--out", str(tmp_path)]) == 0
    names = sorted(p.name for p in tmp_path.iterdir())
    assert "1d-generation_eps0.08.csv" in names and "1d-generation_eps0.08_final.csv" in names
    man = json.load(open(tmp_path / "1d-generation_eps0.08.json"))
    assert man["config"]["T"] == 0.01
    assert main(["sweep", "--scenario", "1d-generation", "--eps-list", "0.1", "0.08", "--config", str(cfg),
                 "--out", str(tmp_path)]) == 0
    assert len(read_csv(tmp_path / "1d-generation_sweep.csv")) == 2


def test_cli_rejects_unknown_scenario():
    with pytest.raises(SystemExit):
        main(["simulate", "--scenario", "nope", "--eps", "0.1"])


def test_manifest_is_strict_json(tmp_path):
    cfg = default_config("radial2d-forced")
    _, man = export([], tmp_path / "m.csv", cfg, {"fits": {"x": float("inf")}})
    text = open(man).read()
    assert "NaN" not in text and "Infinity" not in text
    back = SweepConfig.from_dict(json.loads(text)["config"])
    assert math.isnan(back.g0) and math.isnan(back.C0)
