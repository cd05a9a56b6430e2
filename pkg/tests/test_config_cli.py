"""Config validation, deterministic generation, CLI artifacts."""

import json
from pathlib import Path

import numpy as np
import pytest

from nsv.cli import main
from nsv.config import (
    RunConfig,
    apply_overrides,
    generate_forcing,
    generate_initial,
    load_config,
    serialize_config,
    validate_config,
)
from nsv.errors import ConfigError
from nsv.spectral import DomainSpec, norm

MINIMAL = """
seed = 42

[domain]
modes_per_axis = 8

[params]
nu = 1.0
alpha = 0.5

[trajectory]
dt = 0.01
t_end = 0.1
record_stride = 2
"""


def write_config(tmp_path, text=MINIMAL, name="run.toml") -> Path:
    path = tmp_path / name
    path.write_text(text)
    return path


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------

def test_config_defaults_fill_in(tmp_path):
    cfg = load_config(write_config(tmp_path))
    assert cfg.seed == 42
    assert cfg.domain().modes_per_axis == 8
    assert cfg.trajectory().dt == 0.01
    assert cfg.raw["forcing"]["kind"] == "zero"


def test_config_rejects_unknown_keys(tmp_path):
    bad = MINIMAL + "\n[domain]\n"  # duplicate table is a TOML error
    with pytest.raises(ConfigError):
        load_config(write_config(tmp_path, bad, "dup.toml"))
    with pytest.raises(ConfigError, match="unknown key"):
        validate_config({"domain": {"modez": 8}})
    with pytest.raises(ConfigError, match="unknown top-level"):
        validate_config({"mystery": 1})


def test_config_rejects_bad_values():
    with pytest.raises(ConfigError):
        validate_config({"params": {"nu": -1.0}})
    with pytest.raises(ConfigError):
        validate_config({"params": {"alpha": 2.0}})
    with pytest.raises(ConfigError):
        validate_config({"trajectory": {"dt": -0.1}})
    with pytest.raises(ConfigError):
        validate_config({"initial": {"kind": "vortex-soup"}})


def test_config_roundtrip_identity(tmp_path):
    cfg = load_config(write_config(tmp_path))
    text = serialize_config(cfg)
    cfg2 = validate_config(__import__("tomli").loads(text))
    assert cfg2.raw == cfg.raw
    assert serialize_config(cfg2) == text


def test_overrides():
    data = apply_overrides({}, ["params.alpha=0.25", "seed=7",
                                "trajectory.dt=0.005"])
    cfg = validate_config(data)
    assert cfg.raw["params"]["alpha"] == 0.25
    assert cfg.seed == 7
    assert cfg.trajectory().dt == 0.005
    with pytest.raises(ConfigError):
        apply_overrides({}, ["no_equals_sign"])


# ---------------------------------------------------------------------------
# deterministic generation
# ---------------------------------------------------------------------------

def test_taylor_green_initial(spec16):
    u = generate_initial({"kind": "taylor-green", "amplitude": 1.0}, spec16, seed=0)
    k = spec16.k_lattice
    assert np.abs((k * u.coeffs).sum(axis=0)).max() < 1e-15


def test_random_initial_deterministic(spec8):
    init = {"kind": "random-lowmode", "k_max": 2, "spectrum_slope": 1.0,
            "amplitude": 1.0}
    a = generate_initial(init, spec8, seed=99)
    b = generate_initial(init, spec8, seed=99)
    assert np.array_equal(a.coeffs, b.coeffs)
    c = generate_initial(init, spec8, seed=100)
    assert not np.array_equal(a.coeffs, c.coeffs)


def test_random_initial_kmax_support(spec8):
    init = {"kind": "random-lowmode", "k_max": 2, "spectrum_slope": 0.0,
            "amplitude": 1.0}
    u = generate_initial(init, spec8, seed=5)
    outside = ~(np.abs(spec8.k_lattice) <= 2).all(axis=0)
    assert np.abs(u.coeffs[:, outside]).max() == 0.0


def test_forcing_amplitude_is_l2_norm(spec8):
    g = generate_forcing({"kind": "lowmode-random", "k_max": 2,
                          "amplitude": 2.5, "seed": 3}, spec8)
    assert norm(g, "L2") == pytest.approx(2.5, rel=1e-12)


def test_missing_file_initial(spec8):
    with pytest.raises(ConfigError, match="not found"):
        generate_initial({"kind": "file", "path": "/nonexistent.nsvf"}, spec8, 0)


# ---------------------------------------------------------------------------
# CLI end to end
# ---------------------------------------------------------------------------

def run_cli(*argv) -> int:
    return main(list(argv))


def test_cli_bounds_anchor_row(tmp_path):
    out = tmp_path / "bounds_out"
    code = run_cli("bounds", "--alpha", "1.0", "--nu", "1.0", "--gnorm", "1.0",
                   "--out-dir", str(out))
    assert code == 0
    rows = (out / "bounds.csv").read_text().splitlines()
    header = rows[0].split(",")
    values = dict(zip(header, rows[1].split(",")))
    assert float(values["kappa_nu"]) == 0.5
    assert float(values["r_alpha"]) == pytest.approx(436.0, rel=1e-12)
    gr = float(values["grashof"])
    a = float(values["alpha"])
    want_dim = 1.0 / a**3 * (1.0 + (1.0 + a**2) * gr**4) ** 1.5
    assert float(values["dim_bound"]) == pytest.approx(want_dim, rel=1e-12)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["outputs"]["bounds.csv"]


def test_cli_simulate_dissipates(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "sim_out"
    code = run_cli("simulate", "--config", str(cfg),
                   "--override", "initial.kind='random-lowmode'",
                   "--out-dir", str(out))
    assert code == 0
    lines = (out / "trajectory.csv").read_text().splitlines()
    first = float(lines[1].split(",")[1])
    last = float(lines[-1].split(",")[1])
    assert last < first
    assert (out / "final_field.nsvf").exists()


def test_cli_manifest_bit_identical(tmp_path):
    cfg = write_config(tmp_path)
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    for out in (out1, out2):
        assert run_cli("simulate", "--config", str(cfg),
                       "--out-dir", str(out)) == 0
    assert (out1 / "manifest.json").read_bytes() == (out2 / "manifest.json").read_bytes()
    assert (out1 / "trajectory.csv").read_bytes() == (out2 / "trajectory.csv").read_bytes()


def test_cli_decay_test_verdict(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "decay_out"
    assert run_cli("decay-test", "--config", str(cfg), "--out-dir", str(out)) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["envelope"]["envelope_ok"] is True
    assert manifest["envelope"]["kappa_nu"] > 0


def test_cli_config_error_exit_code(tmp_path, capsys):
    bad = write_config(tmp_path, MINIMAL + "\n[params2]\nx = 1\n", "bad.toml")
    code = run_cli("simulate", "--config", str(bad), "--out-dir", str(tmp_path / "x"))
    assert code == 1
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "config"


def test_cli_divergence_exit_code(tmp_path, capsys):
    text = MINIMAL.replace("dt = 0.01", "dt = 2.0").replace(
        "t_end = 0.1", "t_end = 40.0")
    cfg = write_config(tmp_path, text + "\n[initial]\nkind = 'random-lowmode'\namplitude = 500.0\n",
                       "explode.toml")
    out = tmp_path / "boom"
    code = run_cli("simulate", "--config", str(cfg), "--out-dir", str(out))
    assert code == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "numerical-divergence"


def test_cli_missing_config_io_error(tmp_path, capsys):
    code = run_cli("simulate", "--config", str(tmp_path / "nope.toml"),
                   "--out-dir", str(tmp_path / "x"))
    assert code == 3
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "io"


def test_cli_dimension_smoke(tmp_path):
    text = MINIMAL + """
[forcing]
kind = "lowmode-random"
amplitude = 2.0
seed = 11

[dimension]
n_tangents = 4
window = 0.5
reorth_stride = 5
transient = 0.5
"""
    cfg = write_config(tmp_path, text, "dim.toml")
    out = tmp_path / "dim_out"
    assert run_cli("dimension", "--config", str(cfg), "--out-dir", str(out)) == 0
    lines = (out / "trace.csv").read_text().splitlines()
    assert lines[0] == "n,avg_trace,window"
    assert len(lines) == 5
    manifest = json.loads((out / "manifest.json").read_text())
    assert "n_numerical" in manifest["trace"]


def test_cli_limit_study_smoke(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "limit_out"
    assert run_cli("limit-study", "--config", str(cfg),
                   "--alphas", "0.5,0.25", "--t-end", "0.2",
                   "--override", "initial.kind='random-lowmode'",
                   "--out-dir", str(out)) == 0
    lines = (out / "family.csv").read_text().splitlines()
    assert lines[0] == "alpha,t,dist_vstar"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["limit"]["nesting_ok"] is True


def test_cli_sweep_alpha(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "sweep_out"
    assert run_cli("sweep-alpha", "--config", str(cfg),
                   "--alphas", "1.0,0.5,0.25",
                   "--override", "forcing.kind='lowmode-random'",
                   "--out-dir", str(out)) == 0
    lines = (out / "bounds.csv").read_text().splitlines()
    assert len(lines) == 4
    dims = [float(line.split(",")[9]) for line in lines[1:]]
    assert dims[0] < dims[1] < dims[2]
