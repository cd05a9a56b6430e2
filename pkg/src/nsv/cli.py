"""Command-line harness: deterministic runs, CSV artifacts, JSON manifests.

Grammar:  nsv <subcommand> --config <path> [--override key=value ...]
Exit codes: 0 ok, 1 config error (including capacity), 2 numerical
divergence, 3 io error.  Errors print one machine-readable JSON line to
stderr: {"error": "<config|numerical-divergence|capacity|io>", ...}.

``NSV_THREADS`` caps the worker count for parameter sweeps; workers share
nothing and per-point outputs are merged by a final sequential pass.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, attractor, config as cfgmod, dynamics, io as iomod, limit, spectral
from .errors import CapacityError, ConfigError, DivergenceError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3


def _emit_error(category: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": category, "message": message}) + "\n")


def _worker_count() -> int:
    cap = os.environ.get("NSV_THREADS")
    if cap:
        return max(1, int(cap))
    return min(4, os.cpu_count() or 1)


def _load(args) -> cfgmod.RunConfig:
    data = {}
    if args.config:
        with open(args.config, "rb") as fh:
            data = cfgmod.tomllib.load(fh)
    data = cfgmod.apply_overrides(data, args.override or [])
    return cfgmod.validate_config(data)


def _manifest_base(cfg: cfgmod.RunConfig, subcommand: str) -> dict:
    return {
        "subcommand": subcommand,
        "version": __version__,
        "seed": cfg.seed,
        "config": cfg.raw,
        "outputs": {},
    }


def _finish(out_dir: Path, manifest: dict, files: list[Path], started: float) -> None:
    for f in files:
        manifest["outputs"][f.name] = iomod.sha256_file(f)
    iomod.write_manifest(out_dir / "manifest.json", manifest)
    # wall time is volatile; it lives outside the manifest on purpose
    (out_dir / "timing.txt").write_text(f"wall_seconds {time.perf_counter() - started:.3f}\n")


def _trajectory_rows(traj) -> list:
    return [r.row() for r in traj.records]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    started = time.perf_counter()
    cfg = _load(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    p = cfg.params()
    traj = dynamics.evolve(cfg.initial_field(), p, cfg.trajectory(), warn_cfl=False)
    csv = iomod.write_csv(out_dir / "trajectory.csv",
                          dynamics.StateRecord.CSV_HEADER, _trajectory_rows(traj))
    field_path = out_dir / "final_field.nsvf"
    spectral.save_field(traj.final, field_path)
    manifest = _manifest_base(cfg, "simulate")
    manifest["final_E_alpha"] = traj.records[-1].E_alpha
    _finish(out_dir, manifest,
            [csv, field_path, Path(str(field_path) + ".json")], started)
    return EXIT_OK


def cmd_decay_test(args) -> int:
    started = time.perf_counter()
    cfg = _load(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    p = cfg.params()
    spec = cfg.domain()
    traj = dynamics.evolve(cfg.initial_field(), p, cfg.trajectory(), warn_cfl=False)
    csv = iomod.write_csv(out_dir / "trajectory.csv",
                          dynamics.StateRecord.CSV_HEADER, _trajectory_rows(traj))
    lam1 = spec.lambda1
    kappa = p.kappa_nu()
    pump = (1.0 + lam1 * p.alpha**2) * p.gnorm**2 / (p.nu**2 * lam1**2)
    e0 = traj.records[0].E_alpha
    ok = all(
        r.E_alpha <= e0 * np.exp(-kappa * t) + pump + 1e-8 * max(1.0, r.E_alpha)
        for t, r in zip(traj.times, traj.records)
    )
    manifest = _manifest_base(cfg, "decay-test")
    manifest["envelope"] = {
        "kappa_nu": kappa, "pump": pump, "E0": e0, "envelope_ok": ok,
    }
    _finish(out_dir, manifest, [csv], started)
    return EXIT_OK


def cmd_bounds(args) -> int:
    started = time.perf_counter()
    cfg = _load(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = cfg.domain()
    alphas = _parse_alphas(args.alphas) if args.alphas else None
    nu = args.nu if args.nu is not None else cfg.raw["params"]["nu"]
    if args.gnorm is not None:
        forcing = spectral.single_mode(spec, (1, 0, 0), amplitude=args.gnorm)
    else:
        forcing = cfgmod.generate_forcing(cfg.raw["forcing"], spec)
    if alphas is None:
        alphas = [args.alpha if args.alpha is not None else cfg.raw["params"]["alpha"]]
    rows = []
    for a in alphas:
        p = dynamics.VoigtParams(nu=nu, alpha=a, forcing=forcing,
                                 calib=dict(cfg.raw["params"]["calib"]))
        rows.append(attractor.compute_bounds(p, spec).row())
    csv = iomod.write_csv(out_dir / "bounds.csv", attractor.BoundsReport.CSV_HEADER, rows)
    manifest = _manifest_base(cfg, "bounds")
    manifest["alphas"] = list(alphas)
    _finish(out_dir, manifest, [csv], started)
    return EXIT_OK


def cmd_dimension(args) -> int:
    started = time.perf_counter()
    cfg = _load(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    p = cfg.params()
    sec = dict(cfg.section("dimension"))
    if args.n_tangents is not None:
        sec["n_tangents"] = args.n_tangents
    if args.window is not None:
        sec["window"] = args.window
    traj_cfg = cfg.trajectory()
    if sec["transient"] > 0:
        warm = dynamics.evolve(
            cfg.initial_field(), p,
            dynamics.TrajectoryConfig(dt=traj_cfg.dt, t_end=sec["transient"],
                                      record_stride=10**9),
            record_fields=False, warn_cfl=False)
        base_unhatted = warm.final
    else:
        base_unhatted = cfg.initial_field()
    base = spectral.g_apply(base_unhatted, p.alpha, "forward")
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    n = int(sec["n_tangents"])
    if sec["bundle"] == "canonical":
        bundle = attractor.canonical_tangent_bundle(base, n)
    else:
        bundle = attractor.random_tangent_bundle(base, n, rng)
    window_cfg = dynamics.TrajectoryConfig(dt=traj_cfg.dt, t_end=sec["window"],
                                           record_stride=traj_cfg.record_stride)
    stats = attractor.evolve_tangents(
        bundle, p, window_cfg, reorth_stride=int(sec["reorth_stride"]), rng=rng)
    csv = iomod.write_csv(out_dir / "trace.csv", attractor.TraceStats.CSV_HEADER,
                          stats.rows())
    report = attractor.compute_bounds(p, cfg.domain())
    pair = attractor.dim_comparison_check(report, stats)
    manifest = _manifest_base(cfg, "dimension")
    manifest["trace"] = {
        "n_numerical": stats.n_numerical,
        "kaplan_yorke": stats.kaplan_yorke,
        "dim_bound": report.dim_bound,
        "exp_dim_estimate": report.exp_dim_estimate,
        "trace_dim_plus_one": pair.trace_dim_plus_one,
    }
    _finish(out_dir, manifest, [csv], started)
    return EXIT_OK


def cmd_limit_study(args) -> int:
    started = time.perf_counter()
    cfg = _load(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = cfg.domain()
    sec = dict(cfg.section("limit_study"))
    alphas = _parse_alphas(args.alphas) if args.alphas else list(sec["alphas"])
    t_end = args.t_end if args.t_end is not None else sec["t_end"]
    traj_cfg = cfg.trajectory()
    fam = limit.FamilyRun(
        alphas=tuple(sorted(alphas, reverse=True)),
        nu=cfg.raw["params"]["nu"],
        shared_u0=cfg.initial_field(),
        shared_g=cfgmod.generate_forcing(cfg.raw["forcing"], spec),
        cfg=dynamics.TrajectoryConfig(dt=traj_cfg.dt, t_end=t_end,
                                      record_stride=traj_cfg.record_stride),
    )
    result = limit.run_family(fam)
    rows = []
    for prof in result.profiles:
        for t, d in zip(prof.times, prof.dist_vstar):
            rows.append((prof.alpha, t, d))
    family_csv = iomod.write_csv(out_dir / "family.csv", "alpha,t,dist_vstar", rows)
    files = [family_csv]
    cloud_rows = []
    if sec["cloud_window"] > 0:
        ref_cloud = None
        for alpha in [0.0] + [a for a in fam.alphas if a > 0]:
            p = dynamics.VoigtParams(nu=fam.nu, alpha=alpha, forcing=fam.shared_g)
            cloud = limit.sample_attractor_cloud(
                p, fam.shared_u0, transient=sec["cloud_transient"],
                window=sec["cloud_window"], dt=traj_cfg.dt,
                stride=int(sec["cloud_stride"]))
            if alpha == 0.0:
                ref_cloud = cloud
                continue
            d = limit.cloud_semidistance(cloud, ref_cloud, metric="Vstar")
            cloud_rows.append((alpha, d.semidist_forward, d.semidist_backward,
                               d.metric))
        cloud_csv = iomod.write_csv(out_dir / "clouds.csv",
                                    limit.CloudDistance.CSV_HEADER, cloud_rows)
        files.append(cloud_csv)
    nesting = limit.absorbing_nesting_check(
        fam.nu, spectral.norm(fam.shared_g, "L2"), spec.lambda1,
        [a for a in fam.alphas if a > 0])
    manifest = _manifest_base(cfg, "limit-study")
    manifest["limit"] = {
        "alphas": list(fam.alphas),
        "max_dist": {iomod.format_value(p_.alpha): p_.max_distance
                     for p_ in result.profiles},
        "nesting_ok": nesting,
        "partial": result.partial,
    }
    _finish(out_dir, manifest, files, started)
    return EXIT_OK


def cmd_sweep_alpha(args) -> int:
    started = time.perf_counter()
    cfg = _load(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = cfg.domain()
    alphas = _parse_alphas(args.alphas) if args.alphas else list(cfg.section("sweep")["alphas"])
    forcing = cfgmod.generate_forcing(cfg.raw["forcing"], spec)

    def point(alpha: float):
        p = dynamics.VoigtParams(nu=cfg.raw["params"]["nu"], alpha=alpha,
                                 forcing=forcing,
                                 calib=dict(cfg.raw["params"]["calib"]))
        return attractor.compute_bounds(p, spec).row()

    with concurrent.futures.ThreadPoolExecutor(max_workers=_worker_count()) as pool:
        rows = list(pool.map(point, alphas))
    csv = iomod.write_csv(out_dir / "bounds.csv",
                          attractor.BoundsReport.CSV_HEADER, rows)
    manifest = _manifest_base(cfg, "sweep-alpha")
    manifest["alphas"] = list(alphas)
    _finish(out_dir, manifest, [csv], started)
    return EXIT_OK


def _parse_alphas(text: str) -> list:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as err:
        raise ConfigError(f"bad alpha list {text!r}") from err


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nsv",
        description="Spectral Navier-Stokes-Voigt simulator and analysis toolkit",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(sp):
        sp.add_argument("--config", type=str, default=None,
                        help="TOML run configuration")
        sp.add_argument("--override", action="append", default=[],
                        metavar="KEY=VALUE", help="dotted config override")
        sp.add_argument("--out-dir", type=str, default=".",
                        help="artifact output directory")

    sp = sub.add_parser("simulate", help="integrate the configured system")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("decay-test", help="run and check the dissipative envelope")
    common(sp)
    sp.set_defaults(func=cmd_decay_test)

    sp = sub.add_parser("bounds", help="closed-form dissipation bounds")
    common(sp)
    sp.add_argument("--alpha", type=float, default=None)
    sp.add_argument("--alphas", type=str, default=None,
                    help="comma-separated alpha grid")
    sp.add_argument("--nu", type=float, default=None)
    sp.add_argument("--gnorm", type=float, default=None,
                    help="forcing L2 norm (single low mode)")
    sp.set_defaults(func=cmd_bounds)

    sp = sub.add_parser("dimension", help="trace-formula dimension estimate")
    common(sp)
    sp.add_argument("--n-tangents", type=int, default=None)
    sp.add_argument("--window", type=float, default=None)
    sp.set_defaults(func=cmd_dimension)

    sp = sub.add_parser("limit-study", help="alpha -> 0 convergence study")
    common(sp)
    sp.add_argument("--alphas", type=str, default=None)
    sp.add_argument("--t-end", type=float, default=None)
    sp.set_defaults(func=cmd_limit_study)

    sp = sub.add_parser("sweep-alpha", help="bounds over an alpha grid")
    common(sp)
    sp.add_argument("--alphas", type=str, default=None)
    sp.set_defaults(func=cmd_sweep_alpha)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        _emit_error("config", str(err))
        return EXIT_CONFIG
    except CapacityError as err:
        _emit_error("capacity", str(err))
        return EXIT_CONFIG
    except DivergenceError as err:
        _emit_error("numerical-divergence", f"{err} (t={err.time:g})")
        return EXIT_NUMERICAL
    except OSError as err:
        _emit_error("io", str(err))
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
