"""Run configuration: TOML schema, validation, deterministic generators.

The PRNG behind every seeded stream is numpy's PCG64, so identical
(tag, domain, seed) triples reproduce coefficient streams bit-for-bit on
any platform.  Coefficients are always drawn in lexicographic wavevector
order, independent of array memory layout.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import spectral
from .dynamics import TrajectoryConfig, VoigtParams
from .errors import ConfigError
from .spectral import DomainSpec, SpectralField

_SCHEMA = {
    "seed": int,
    "domain": {
        "period": float,
        "modes_per_axis": int,
        "dealias_fraction": float,
    },
    "params": {
        "nu": float,
        "alpha": float,
        "calib": dict,
    },
    "initial": {
        "kind": str,
        "k_max": int,
        "spectrum_slope": float,
        "amplitude": float,
        "path": str,
    },
    "forcing": {
        "kind": str,
        "k_max": int,
        "amplitude": float,
        "seed": int,
        "path": str,
    },
    "trajectory": {
        "dt": float,
        "t_end": float,
        "record_stride": int,
        "integrator": str,
    },
    "dimension": {
        "n_tangents": int,
        "window": float,
        "reorth_stride": int,
        "transient": float,
        "bundle": str,
    },
    "limit_study": {
        "alphas": list,
        "t_end": float,
        "cloud_transient": float,
        "cloud_window": float,
        "cloud_stride": int,
    },
    "sweep": {
        "alphas": list,
    },
}

_DEFAULTS = {
    "seed": 0,
    "domain": {"period": 2.0 * np.pi, "modes_per_axis": 16,
               "dealias_fraction": 2.0 / 3.0},
    "params": {"nu": 1.0, "alpha": 1.0, "calib": {}},
    "initial": {"kind": "taylor-green", "k_max": 2, "spectrum_slope": 1.0,
                "amplitude": 1.0, "path": ""},
    "forcing": {"kind": "zero", "k_max": 2, "amplitude": 1.0, "seed": 1,
                "path": ""},
    "trajectory": {"dt": 1e-3, "t_end": 1.0, "record_stride": 10,
                   "integrator": "ifrk4"},
    "dimension": {"n_tangents": 24, "window": 200.0, "reorth_stride": 10,
                  "transient": 0.0, "bundle": "random"},
    "limit_study": {"alphas": [0.5, 0.25, 0.125], "t_end": 1.0,
                    "cloud_transient": 0.0, "cloud_window": 0.0,
                    "cloud_stride": 10},
    "sweep": {"alphas": [1.0, 0.5, 0.25, 0.125]},
}

_INITIAL_KINDS = ("taylor-green", "random-lowmode", "file")
_FORCING_KINDS = ("zero", "lowmode-random", "file")


@dataclass(frozen=True)
class RunConfig:
    """Validated run description; ``raw`` is the canonical nested dict."""

    raw: dict = field(repr=False)

    @property
    def seed(self) -> int:
        return self.raw["seed"]

    def domain(self) -> DomainSpec:
        d = self.raw["domain"]
        return DomainSpec(
            period=d["period"],
            modes_per_axis=d["modes_per_axis"],
            dealias_fraction=d["dealias_fraction"],
        )

    def trajectory(self) -> TrajectoryConfig:
        t = self.raw["trajectory"]
        return TrajectoryConfig(
            dt=t["dt"], t_end=t["t_end"],
            record_stride=t["record_stride"], integrator=t["integrator"],
        )

    def params(self, alpha: float | None = None) -> VoigtParams:
        pr = self.raw["params"]
        spec = self.domain()
        return VoigtParams(
            nu=pr["nu"],
            alpha=pr["alpha"] if alpha is None else alpha,
            forcing=generate_forcing(self.raw["forcing"], spec),
            calib=dict(pr.get("calib", {})),
        )

    def initial_field(self) -> SpectralField:
        return generate_initial(self.raw["initial"], self.domain(), self.seed)

    def section(self, name: str) -> dict:
        return self.raw[name]


def _coerce(value, want, where):
    if want is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if want is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if want is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    if want is list:
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected a list, got {value!r}")
        return [float(v) for v in value]
    if want is dict:
        if not isinstance(value, dict):
            raise ConfigError(f"{where}: expected a table, got {value!r}")
        return {k: float(v) for k, v in value.items()}
    raise AssertionError(want)


def validate_config(data: dict) -> RunConfig:
    """Merge user data over defaults, rejecting unknown keys anywhere."""
    merged: dict = {}
    for key, value in data.items():
        if key not in _SCHEMA:
            raise ConfigError(f"unknown top-level key {key!r}")
    merged["seed"] = _coerce(data.get("seed", _DEFAULTS["seed"]), int, "seed")
    for section, fields in _SCHEMA.items():
        if section == "seed":
            continue
        user = data.get(section, {})
        if not isinstance(user, dict):
            raise ConfigError(f"section [{section}] must be a table")
        for key in user:
            if key not in fields:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
        out = {}
        for key, want in fields.items():
            raw_value = user.get(key, _DEFAULTS[section][key])
            out[key] = _coerce(raw_value, want, f"[{section}].{key}")
        merged[section] = out
    cfg = RunConfig(merged)
    kind = merged["initial"]["kind"]
    if kind not in _INITIAL_KINDS:
        raise ConfigError(f"[initial].kind must be one of {_INITIAL_KINDS}")
    fkind = merged["forcing"]["kind"]
    if fkind not in _FORCING_KINDS:
        raise ConfigError(f"[forcing].kind must be one of {_FORCING_KINDS}")
    # construct eagerly so inconsistent numbers fail at parse time
    cfg.domain()
    try:
        cfg.trajectory()
    except ValueError as err:
        raise ConfigError(str(err)) from err
    pr = merged["params"]
    if pr["nu"] <= 0:
        raise ConfigError("[params].nu must be positive")
    if not 0.0 <= pr["alpha"] <= 1.0:
        raise ConfigError("[params].alpha must lie in [0, 1]")
    return cfg


def load_config(path) -> RunConfig:
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as err:
            raise ConfigError(f"{path}: {err}") from err
    return validate_config(data)


def apply_overrides(data: dict, overrides: list[str]) -> dict:
    """Apply ``section.key=value`` strings onto a parsed config dict."""
    out = {k: (dict(v) if isinstance(v, dict) else v) for k, v in data.items()}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        dotted, text = item.split("=", 1)
        keys = dotted.strip().split(".")
        try:
            value = tomllib.loads(f"x = {text}")["x"]
        except tomllib.TOMLDecodeError as err:
            raise ConfigError(f"override {item!r}: bad value ({err})") from err
        node = out
        for key in keys[:-1]:
            node = node.setdefault(key, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {item!r}: {key} is not a table")
        node[keys[-1]] = value
    return out


# ---------------------------------------------------------------------------
# canonical TOML serialization (round-trips through validate_config)
# ---------------------------------------------------------------------------

def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        text = repr(v)
        if "e" not in text and "." not in text and "inf" not in text and "nan" not in text:
            text += ".0"
        return text
    if isinstance(v, str):
        escaped = v.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(v, list):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise ConfigError(f"cannot serialize {v!r}")


def serialize_config(cfg: RunConfig) -> str:
    """Canonical TOML text; parse -> serialize -> parse is the identity."""
    lines = [f"seed = {cfg.raw['seed']}"]
    for section in ("domain", "params", "initial", "forcing", "trajectory",
                    "dimension", "limit_study", "sweep"):
        body = cfg.raw[section]
        lines.append("")
        lines.append(f"[{section}]")
        for key, value in body.items():
            if isinstance(value, dict):
                continue
            lines.append(f"{key} = {_toml_value(value)}")
        for key, value in body.items():
            if isinstance(value, dict):
                lines.append("")
                lines.append(f"[{section}.{key}]")
                for sub, subval in sorted(value.items()):
                    lines.append(f"{sub} = {_toml_value(subval)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# deterministic generators
# ---------------------------------------------------------------------------

def generate_initial(initial: dict, spec: DomainSpec, seed: int) -> SpectralField:
    """Build the configured start field; deterministic in (tag, spec, seed)."""
    kind = initial["kind"]
    if kind == "taylor-green":
        return spectral.taylor_green(spec, amplitude=initial.get("amplitude", 1.0))
    if kind == "random-lowmode":
        rng = np.random.Generator(np.random.PCG64(seed))
        return spectral.random_field(
            spec, rng,
            k_max=initial["k_max"],
            spectrum_slope=initial["spectrum_slope"],
            amplitude=initial.get("amplitude") or None,
        )
    if kind == "file":
        path = Path(initial["path"])
        if not path.exists():
            raise ConfigError(f"initial field file not found: {path}")
        return spectral.load_field(path, spec)
    raise ConfigError(f"unknown initial kind {kind!r}")


def generate_forcing(forcing: dict, spec: DomainSpec) -> SpectralField:
    kind = forcing["kind"]
    if kind == "zero":
        return SpectralField.zero(spec)
    if kind == "lowmode-random":
        rng = np.random.Generator(np.random.PCG64(forcing["seed"]))
        return spectral.random_field(
            spec, rng, k_max=forcing["k_max"], amplitude=forcing["amplitude"]
        )
    if kind == "file":
        path = Path(forcing["path"])
        if not path.exists():
            raise ConfigError(f"forcing field file not found: {path}")
        return spectral.load_field(path, spec)
    raise ConfigError(f"unknown forcing kind {kind!r}")
