import numpy as np
import pytest

from nsv.spectral import DomainSpec, random_field


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion, always visible."""
    rows = []
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            if "test_acceptance" in getattr(rep, "nodeid", ""):
                name = rep.nodeid.split("::")[-1]
                rows.append((name, status.upper(), getattr(rep, "duration", 0.0)))
    if rows:
        terminalreporter.write_sep("=", "acceptance criteria")
        for name, status, duration in rows:
            terminalreporter.write_line(f"{status:>6}  {name}  ({duration:.1f}s)")


@pytest.fixture
def spec4():
    return DomainSpec(modes_per_axis=4)


@pytest.fixture
def spec8():
    return DomainSpec(modes_per_axis=8)


@pytest.fixture
def spec16():
    return DomainSpec(modes_per_axis=16)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def make_field(spec, seed, k_max=None, amplitude=1.0):
    return random_field(
        spec, np.random.default_rng(seed), k_max=k_max, amplitude=amplitude
    )
