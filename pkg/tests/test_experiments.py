import csv
import json
import math

import numpy as np
import pytest

from amtransport import cli, lindblad
from amtransport import experiments as ex
from amtransport.errors import ConfigError, SteadyStateError

TWO_SITE = {"version": 1, "lattice": {"n_sites": 2, "delta": [0.1]}, "occupancy": 2,
            "modulation": {"kind": "monochromatic", "alpha": "resonant"}}


def write(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


def read_csv(path):
    raw = path.read_bytes()
    assert b"\r" not in raw
    return list(csv.reader(raw.decode("utf-8").splitlines()))


def test_defaults_match_reference_lattice():
    cfg = ex.RunConfig()
    assert cfg.lattice.delta == (-0.1, 0.3, -0.4, 0.2)
    assert cfg.j_over_kappa == 15
    assert cfg.lattice.v_min == 15 and cfg.lattice.v_max == 50
    assert cfg.occupancy == 1


@pytest.mark.parametrize("raw", [
    {"lattice": {"n_sites": 5}},
    {"version": 2, "lattice": {"n_sites": 5}},
    {"version": 1, "lattice": {"n_sites": 5, "bogus": 1}},
    {"version": 1, "lattice": {"n_sites": 1}},
    {"version": 1, "lattice": {"n_sites": 5}, "reservoirs": {"j_over_kappa": -1}},
    {"version": 1, "lattice": {"n_sites": 5}, "modulation": {"kind": "sawtooth"}},
    {"version": 1, "lattice": {"n_sites": 3, "delta": [0.1, 0.2], "v_ext_site": [0, 0, 0]}},
    {"version": 1, "lattice": {"n_sites": 3, "v_min": 60}},
    {"version": 1, "lattice": {"n_sites": 3, "delta": [0.1]}},
])
def test_schema_errors(raw):
    with pytest.raises(ConfigError):
        ex.RunConfig.from_dict(raw)


def test_round_trip(tmp_path):
    cfg = ex.RunConfig.from_dict(TWO_SITE)
    again = ex.RunConfig.from_dict(json.loads(cfg.dumps()))
    assert again.data == cfg.data
    path = write(tmp_path, cfg.to_dict())
    assert ex.RunConfig.load(path).data == cfg.data


def test_v_ext_site_config():
    cfg = ex.RunConfig.from_dict({"version": 1, "lattice": {"n_sites": 3,
                                                            "v_ext_site": [0.0, 0.1, 0.0]}})
    np.testing.assert_allclose(cfg.lattice.link_offsets, [0.1, -0.1])


def test_invalid_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        ex.RunConfig.load(path)


def test_worker_count(monkeypatch):
    monkeypatch.setenv("AMTRANSPORT_WORKERS", "3")
    assert ex.worker_count() == 3
    monkeypatch.setenv("AMTRANSPORT_WORKERS", "zero")
    assert ex.worker_count() == 1
    monkeypatch.delenv("AMTRANSPORT_WORKERS")
    assert ex.worker_count() == 1


def test_write_csv_format(tmp_path):
    path = tmp_path / "x.csv"
    ex.write_csv(path, ["a", "b"], [[1.0 / 3, "tag"], [math.nan, None]])
    rows = read_csv(path)
    assert rows == [["a", "b"], ["0.333333333333", "tag"], ["nan", ""]]


def test_gain_report_guards():
    r = ex.GainReport((0.0,), 0.0, 1.0, 2.0)
    assert math.isnan(r.gain)
    assert r.percent_recovered == 0.5
    assert math.isnan(r.heff_percent_error)
    undriven = ex.GainReport((0.0,), 1.0, 1.0, 1.0, driven=False)
    assert math.isnan(undriven.gain) and undriven.percent_recovered == 1.0


def test_undriven_flat_row():
    cfg = ex.RunConfig().updated(modulation={"kind": "none"})
    (report,) = ex.table1(cfg, [[0.0, 0.0, 0.0, 0.0]])
    assert report.error is None
    assert math.isnan(report.gain)
    assert report.percent_recovered == pytest.approx(1.0, abs=1e-12)


def test_table_row_failure_is_isolated():
    cfg = ex.RunConfig().updated(lattice={"n_sites": 3, "delta": [0.1, 0.2]})
    good, bad = ex.table1(cfg, [[0.1, 0.2], [0.1, 0.2, 0.3]])
    assert good.error is None and good.gain > 1
    assert bad.error and "ConfigError" in bad.error


def test_params_single_row(tmp_path):
    cfg = {"version": 1, "lattice": {"n_sites": 2}, "grids": {"depth": [15.0]}}
    assert cli.main(["params", "--config", str(write(tmp_path, cfg)),
                     "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "params.csv")
    assert rows[0] == ["V", "omega", "U", "J"]
    assert len(rows) == 2
    assert float(rows[1][2]) == pytest.approx(0.567, abs=1e-3)


def test_cli_schema_error_exit(tmp_path):
    path = write(tmp_path, {"version": 1, "lattice": {"n_sites": 3, "v_min": 60}})
    assert cli.main(["params", "--config", str(path), "--out", str(tmp_path)]) == 2


def test_cli_physics_error_exit(tmp_path):
    path = write(tmp_path, {"version": 1, "lattice": {"n_sites": 3, "delta": [0.1, 0.2]}})
    assert cli.main(["sweep-alpha", "--config", str(path), "--out", str(tmp_path)]) == 4


def test_cli_solver_error_exit(tmp_path, monkeypatch):
    def fail(self):
        raise SteadyStateError("no convergence")
    monkeypatch.setattr(ex.Experiment, "gain_report", fail)
    path = write(tmp_path, {"version": 1, "lattice": {"n_sites": 3, "delta": [0.1, 0.2]}})
    assert cli.main(["steady", "--config", str(path), "--out", str(tmp_path)]) == 3


def test_cli_evolve_undriven_flat(tmp_path):
    cfg = {"version": 1, "lattice": {"n_sites": 3, "delta": [0.0, 0.0]},
           "modulation": {"kind": "none"}, "solver": {"samples": 21}}
    assert cli.main(["evolve", "--config", str(write(tmp_path, cfg)),
                     "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "evolve.csv")
    assert rows[0] == ["t", "current", "current_normalized"]
    assert len(rows) == 22
    assert float(rows[-1][2]) == pytest.approx(1.0, abs=1e-6)
    assert not (tmp_path / "evolve_effective.csv").exists()


def test_cli_evolve_driven_with_effective(tmp_path):
    cfg = {"version": 1, "lattice": {"n_sites": 3, "delta": [0.1, 0.0]},
           "solver": {"samples": 11, "t_max_in_kappa_units": 5}}
    assert cli.main(["evolve", "--config", str(write(tmp_path, cfg)),
                     "--out", str(tmp_path)]) == 0
    full = read_csv(tmp_path / "evolve.csv")
    eff = read_csv(tmp_path / "evolve_effective.csv")
    assert len(full) == len(eff) == 12
    assert [r[0] for r in full] == [r[0] for r in eff]


def test_cli_steady_and_sweep_vmax(tmp_path):
    cfg = {"version": 1, "lattice": {"n_sites": 3, "delta": [0.1, -0.1]},
           "grids": {"vmax": [17.0, 50.0]}}
    path = write(tmp_path, cfg)
    assert cli.main(["steady", "--config", str(path), "--out", str(tmp_path)]) == 0
    header, row = read_csv(tmp_path / "steady.csv")
    values = dict(zip(header, map(float, row)))
    assert values["gain"] > 1
    assert 0 < values["percent_recovered"] <= 1.05
    assert cli.main(["sweep-vmax", "--config", str(path), "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "sweep_vmax.csv")
    assert rows[0] == ["vmax", "current_normalized"]
    assert float(rows[-1][1]) == pytest.approx(1.0, rel=1e-12)
    assert 0 < float(rows[1][1]) < 1


def test_cli_sweep_alpha(tmp_path):
    cfg = dict(TWO_SITE, grids={"alpha_points": 4})
    assert cli.main(["sweep-alpha", "--config", str(write(tmp_path, cfg)),
                     "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "sweep_alpha.csv")
    assert rows[0] == ["alpha", "steady_current", "marker"]
    marks = {r[2]: float(r[0]) for r in rows[1:] if r[2]}
    assert marks["delta2"] == pytest.approx(0.1)
    assert marks["delta2-meanU"] > 0.4
    alphas = [float(r[0]) for r in rows[1:]]
    assert alphas == sorted(alphas)


def test_off_resonant_edges_stay_near_baseline():
    cfg = ex.RunConfig.from_dict(dict(TWO_SITE, grids={"alpha_points": 2}))
    res = ex.sweep_alpha(cfg)
    gains = res["current"] / res["i_stationary"]
    for a, g, m in zip(res["alpha"], gains, res["marker"]):
        if not m:
            assert 0.1 < g < 10
    assert gains[list(res["marker"]).index("delta2-meanU")] > 100


def test_sweeps_are_deterministic_and_ordered(monkeypatch):
    cfg = ex.RunConfig().updated(lattice={"n_sites": 3, "delta": [0.1, -0.1]})
    serial = ex.sweep_vmax(cfg, [20.0, 17.0])
    monkeypatch.setenv("AMTRANSPORT_WORKERS", "2")
    parallel = ex.sweep_vmax(cfg, [20.0, 17.0])
    assert serial == parallel
    assert [v for v, *_ in serial] == [20.0, 17.0]


def test_kappa_anchor():
    exp = ex.Experiment(ex.RunConfig())
    assert exp.kappa == pytest.approx(exp.fit.j_max / 15)
    assert isinstance(exp.res, lindblad.ReservoirSpec)
