import subprocess
import sys

import pytest


@pytest.fixture(scope="session")
def suite_artifacts(tmp_path_factory):
    """Real CSV artifacts produced through the simulator CLI (the only
    interface this package consumes)."""
    root = tmp_path_factory.mktemp("suite")
    cfg = root / "run.toml"
    cfg.write_text(
        """
seed = 7

[domain]
modes_per_axis = 8

[params]
nu = 1.0
alpha = 0.5

[initial]
kind = "random-lowmode"
k_max = 2

[forcing]
kind = "lowmode-random"
amplitude = 2.0
seed = 11

[trajectory]
dt = 0.005
t_end = 1.0
record_stride = 5

[dimension]
n_tangents = 4
window = 0.5
reorth_stride = 5
transient = 0.5
"""
    )

    def nsv(*argv):
        proc = subprocess.run(
            [sys.executable, "-m", "nsv.cli", *argv],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        return proc

    decay_dir = root / "decay"
    nsv("decay-test", "--config", str(cfg),
        "--override", "forcing.kind='zero'", "--out-dir", str(decay_dir))
    bounds_dir = root / "bounds"
    nsv("bounds", "--config", str(cfg), "--nu", "1.0", "--gnorm", "0.3",
        "--alphas", "1.0,0.5,0.25,0.125", "--out-dir", str(bounds_dir))
    trace_dir = root / "trace"
    nsv("dimension", "--config", str(cfg), "--out-dir", str(trace_dir))
    family_dir = root / "family"
    nsv("limit-study", "--config", str(cfg), "--alphas", "0.5,0.25",
        "--t-end", "0.3", "--out-dir", str(family_dir))
    return {
        "decay_csv": decay_dir / "trajectory.csv",
        "decay_manifest": decay_dir / "manifest.json",
        "bounds_csv": bounds_dir / "bounds.csv",
        "trace_csv": trace_dir / "trace.csv",
        "family_csv": family_dir / "family.csv",
    }
