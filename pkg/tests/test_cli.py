import csv
import json
import math
import subprocess
import sys

import pytest

from scalewave import _kernels
from scalewave.cli import EXIT_CONFIG, EXIT_INCONCLUSIVE, EXIT_OK, EXIT_VERIFY, fmt, main, read_timeseries
from scalewave.config import ConfigError, RunConfig, dump_config, load_config
from scalewave.energy import CSV_COLUMNS


def _cfg(tmp_path, name="cfg.json", **kw):
    path = tmp_path / name
    path.write_text(json.dumps(kw))
    return str(path)


def _run(tmp_path, sub="run", out="out", extra=(), **kw):
    return main([sub, "--config", _cfg(tmp_path, **kw), "--out-dir", str(tmp_path / out), *extra])


def test_run_writes_artifacts(tmp_path):
    assert _run(tmp_path, t_max=5.0) == EXIT_OK
    with (tmp_path / "out" / "timeseries.csv").open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == list(CSV_COLUMNS)
    assert rows[0][:5] == ["t", "l2_u", "l2_v", "l2_grad_u", "linf_v"]
    assert len(rows) > 2
    # mu = 1 has no E3..E6: written as empty fields
    i3 = rows[0].index("E3")
    assert all(r[i3:i3 + 4] == [""] * 4 for r in rows[1:])
    outcome = json.loads((tmp_path / "out" / "outcome.json").read_text())
    assert outcome["classification"] == "global_to_horizon"
    assert outcome["config"]["t_max"] == 5.0


def test_run_is_byte_deterministic(tmp_path):
    kw = dict(t_max=5.0, nonlinearity="signed_power", p=3.0, amplitude=0.1, seed=7)
    assert _run(tmp_path, out="a", **kw) == EXIT_OK
    assert _run(tmp_path, out="b", **kw) == EXIT_OK
    for name in ("timeseries.csv", "outcome.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_csv_floats_round_trip(tmp_path):
    assert _run(tmp_path, t_max=3.0) == EXIT_OK
    rows = read_timeseries(tmp_path / "out" / "timeseries.csv")
    for r in rows:
        for k, v in r.items():
            if v is not None:
                assert float(fmt(v)) == v
    assert fmt(None) == "" and fmt(0.1) == "0.10000000000000001"


@pytest.mark.parametrize("kw,field", [
    (dict(cfl=0.9), "cfl"),
    (dict(mu=-1.0), "mu"),
    (dict(bogus=1), "bogus"),
    (dict(nonlinearity="unsigned_power"), "p"),
    (dict(n_points=8, spacing=None), "n_points"),
    (dict(family="cubic"), "family"),
    (dict(p_values=[2.0, 1.5]), "p_values"),
])
def test_config_errors_name_the_field(tmp_path, capsys, kw, field):
    assert _run(tmp_path, **kw) == EXIT_CONFIG
    assert f"{field}:" in capsys.readouterr().err


def test_missing_and_malformed_config(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "none.json")]) == EXIT_CONFIG
    bad = tmp_path / "bad.json"
    bad.write_text("{mu: 1")
    assert main(["run", "--config", str(bad)]) == EXIT_CONFIG
    assert main(["--threads", "0", "sweep"]) == EXIT_CONFIG
    assert "--threads" in capsys.readouterr().err


def test_inconclusive_exit(tmp_path):
    # blowup inside the first step: t* is quantised to dt and the dt/2 rerun disagrees
    kw = dict(nonlinearity="unsigned_power", p=3.0, amplitude=100.0, t_max=2.0)
    assert _run(tmp_path, **kw) == EXIT_INCONCLUSIVE
    outcome = json.loads((tmp_path / "out" / "outcome.json").read_text())
    assert outcome["classification"] == "inconclusive"
    assert outcome["t_star_refined"] == pytest.approx(0.5 * outcome["t_star"])


def test_blowup_exit_zero(tmp_path):
    kw = dict(nonlinearity="unsigned_power", p=2.0, amplitude=0.5, t_max=20.0)
    assert _run(tmp_path, **kw) == EXIT_OK
    outcome = json.loads((tmp_path / "out" / "outcome.json").read_text())
    assert outcome["classification"] == "blowup" and outcome["fit"] is None


def test_config_round_trip(tmp_path):
    cfg = RunConfig(mu=2.0, eta=0.3, nonlinearity="signed_power", p=2.5, p_values=[2.0, 3.0], seed=3)
    assert RunConfig.from_dict(json.loads(dump_config(cfg))) == cfg
    path = tmp_path / "c.json"
    path.write_text(dump_config(cfg))
    assert load_config(path) == cfg
    assert load_config(None) == RunConfig()
    with pytest.raises(ConfigError):
        RunConfig.from_dict([1, 2])


@pytest.mark.parametrize("kw", [dict(mu=1.0), dict(mu=2.0, eta=0.5)])
def test_verify_passes(tmp_path, kw):
    assert _run(tmp_path, "verify", **kw) == EXIT_OK
    rep = json.loads((tmp_path / "out" / "verify.json").read_text())
    assert rep["passed"] and all(c["passed"] for c in rep["checks"].values())


def test_verify_coarse_grid_fails(tmp_path, capsys):
    assert _run(tmp_path, "verify", n_points=32, spacing=None) == EXIT_VERIFY
    err = capsys.readouterr().err
    rep = json.loads((tmp_path / "out" / "verify.json").read_text())
    failing = [k for k, c in rep["checks"].items() if not c["passed"]]
    assert failing and all(name in err for name in failing)


def _sweep_rows(tmp_path, out="out"):
    with (tmp_path / out / "sweep.csv").open() as fh:
        return list(csv.DictReader(fh))


def test_sweep_3x3(tmp_path):
    kw = dict(mu_values=[1.0, 2.0, 3.0], p_values=[2.0, 3.0, 4.0], amplitude=1e-3, t_max=20.0)
    assert _run(tmp_path, "sweep", extra=("--threads", "2"), **kw) == EXIT_OK
    rows = _sweep_rows(tmp_path)
    assert list(rows[0]) == ["mu", "p", "eps", "class", "t_star", "fit_exponent"]
    assert [(float(r["mu"]), float(r["p"])) for r in rows] == [(m, p) for m in (1., 2., 3.) for p in (2., 3., 4.)]
    boundary = json.loads((tmp_path / "out" / "boundary.json").read_text())
    assert all(r["class"] == "global_to_horizon" for r in rows)
    assert all(b["open"] and b["note"] == "all global" for b in boundary["brackets"].values())
    assert set(boundary["brackets"]) == {"1.0", "2.0", "3.0"}


def test_one_cell_sweep_matches_run(tmp_path):
    kw = dict(mu=1.0, nonlinearity="unsigned_power", p=2.0, amplitude=0.5, t_max=20.0)
    assert _run(tmp_path, "run", out="r", **kw) == EXIT_OK
    assert _run(tmp_path, "sweep", out="s", **kw) == EXIT_OK
    outcome = json.loads((tmp_path / "r" / "outcome.json").read_text())
    (row,) = _sweep_rows(tmp_path, "s")
    assert row["class"] == outcome["classification"]
    assert float(row["t_star"]) == outcome["t_star"]


def _write_series(path, ts, vals, column="l2_v"):
    with path.open("w") as fh:
        fh.write(f"t,{column}\n")
        for t, v in zip(ts, vals):
            fh.write(f"{fmt(t)},{fmt(v)}\n")


def test_fit_synthetic(tmp_path):
    ts = [0.5 * k for k in range(401)]
    _write_series(tmp_path / "s.csv", ts, [(1 + t) ** -0.75 for t in ts])
    assert main(["fit", str(tmp_path / "s.csv"), "--column", "l2_v", "--window", "10", "200"]) == EXIT_OK
    fit = json.loads((tmp_path / "fit.json").read_text())
    assert fit["exponent"] == pytest.approx(-0.75, abs=1e-9)
    assert fit["window"] == [10.0, 200.0]


def test_fit_errors(tmp_path):
    ts = [0.5 * k for k in range(401)]
    _write_series(tmp_path / "s.csv", ts, [(1 + t) ** -0.75 for t in ts])
    assert main(["fit", str(tmp_path / "s.csv"), "--column", "E9"]) == EXIT_CONFIG
    _write_series(tmp_path / "z.csv", ts, [0.0 for _ in ts])
    assert main(["fit", str(tmp_path / "z.csv"), "--column", "l2_v"]) == EXIT_CONFIG
    assert main(["fit", str(tmp_path / "absent.csv")]) == EXIT_CONFIG


def test_fit_real_run(tmp_path):
    assert _run(tmp_path, t_max=200.0) == EXIT_OK
    series = tmp_path / "out" / "timeseries.csv"
    assert main(["fit", str(series), "--out-dir", str(tmp_path / "f")]) == EXIT_OK
    fit = json.loads((tmp_path / "f" / "fit.json").read_text())
    assert fit["column"] == "energy_norm"
    assert fit["exponent"] == pytest.approx(-0.5, abs=0.1)


def test_backend_flag(tmp_path):
    before = _kernels.BACKEND
    try:
        assert main(["--backend", "numpy", "run", "--config", _cfg(tmp_path, t_max=2.0),
                     "--out-dir", str(tmp_path / "o")]) == EXIT_OK
        assert _kernels.BACKEND == "numpy"
    finally:
        _kernels.use_backend(before)


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "scalewave", "run", "--config", _cfg(tmp_path, t_max=2.0),
                          "--out-dir", str(tmp_path / "o")], capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert out.stdout.strip() == "global_to_horizon"
    assert math.isfinite(json.loads((tmp_path / "o" / "outcome.json").read_text())["dt"])
