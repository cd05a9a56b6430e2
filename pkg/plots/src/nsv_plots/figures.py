"""Figure builders over the simulator's CSV artifacts.

No numerics of its own: every curve, badge and annotation is recomputed
from the rows of the input CSV (plus the run manifest for parameter
lookups), so a figure can never disagree with the data it displays.
Outputs are deterministic: fixed style, no timestamps in the files.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

FIGURE_KINDS = ("decay-envelope", "dim-vs-alpha", "trace-sums", "limit-distance")

_REQUIRED_COLUMNS = {
    "decay-envelope": ("t", "E_alpha"),
    "dim-vs-alpha": ("alpha", "dim_bound"),
    "trace-sums": ("n", "avg_trace", "window"),
    "limit-distance": ("alpha", "t", "dist_vstar"),
}


class SchemaError(ValueError):
    """Input CSV does not provide the columns the figure kind needs."""


@dataclass(frozen=True)
class FigureSpec:
    input_csv: Path
    kind: str
    output: Path
    manifest: Path | None = None

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise SchemaError(
                f"unknown figure kind {self.kind!r}; expected one of {FIGURE_KINDS}"
            )


def read_columns(path: Path, required: tuple) -> dict:
    """Load a CSV into float column arrays, enforcing the schema."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: file is empty") from None
        missing = [c for c in required if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing column {missing[0]!r}")
        rows = [row for row in reader if row]
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    data = np.array([[float(v) for v in row] for row in rows])
    return {name: data[:, i] for i, name in enumerate(header)}


def _load_manifest(spec: FigureSpec) -> dict:
    path = spec.manifest or Path(spec.input_csv).parent / "manifest.json"
    if not Path(path).exists():
        raise SchemaError(f"manifest not found at {path} (needed for envelope parameters)")
    return json.loads(Path(path).read_text())


def _new_axes(title: str):
    fig, ax = plt.subplots(figsize=(6.4, 4.2), dpi=120)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _save(fig, spec: FigureSpec, metadata: dict) -> Path:
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    suffix = out.suffix.lower()
    if suffix == ".png":
        meta = {"Software": "nsv-plot", **metadata}
    elif suffix == ".svg":
        # the SVG writer only takes Dublin Core fields; fold badges into
        # Keywords and drop the volatile date for deterministic bytes
        meta = {"Date": None,
                "Keywords": [f"{k}={v}" for k, v in sorted(metadata.items())]}
    else:
        raise SchemaError(f"unsupported output format {suffix!r} (use .png or .svg)")
    fig.savefig(out, metadata=meta)
    plt.close(fig)
    return out


# ---------------------------------------------------------------------------
# kinds
# ---------------------------------------------------------------------------

def _plot_decay_envelope(spec: FigureSpec) -> Path:
    cols = read_columns(spec.input_csv, _REQUIRED_COLUMNS["decay-envelope"])
    manifest = _load_manifest(spec)
    try:
        env = manifest["envelope"]
        kappa, pump = env["kappa_nu"], env["pump"]
    except KeyError as err:
        raise SchemaError(f"manifest lacks envelope parameters ({err})") from None
    t, e = cols["t"], cols["E_alpha"]
    e0 = e[0]
    bound = e0 * np.exp(-kappa * t) + pump
    ok = bool(np.all(e <= bound * (1.0 + 1e-8)))

    fig, ax = _new_axes("energy decay vs dissipative envelope")
    ax.plot(t, e, label=r"$E_\alpha(t)$", color="tab:blue")
    ax.plot(t, bound, "--", label=r"$E_\alpha(0)e^{-\kappa_\nu t}$ + pump",
            color="tab:red")
    ax.set_xlabel("t")
    ax.set_ylabel("energy")
    ax.set_yscale("log")
    badge = "inside envelope" if ok else "ENVELOPE VIOLATED"
    ax.text(0.98, 0.95, badge, transform=ax.transAxes, ha="right", va="top",
            bbox={"boxstyle": "round", "facecolor": "#c8e6c9" if ok else "#ffcdd2"})
    ax.legend(loc="lower left")
    return _save(fig, spec, {"nsv:envelope_ok": str(ok).lower()})


def fit_loglog_slope(alpha: np.ndarray, values: np.ndarray) -> float:
    return float(np.polyfit(np.log(alpha), np.log(values), 1)[0])


def _plot_dim_vs_alpha(spec: FigureSpec) -> Path:
    cols = read_columns(spec.input_csv, _REQUIRED_COLUMNS["dim-vs-alpha"])
    alpha, dim = cols["alpha"], cols["dim_bound"]
    order = np.argsort(alpha)[::-1]
    alpha, dim = alpha[order], dim[order]
    slope = fit_loglog_slope(alpha, dim)

    fig, ax = _new_axes("attractor dimension bound vs regularization length")
    ax.loglog(alpha, dim, "o-", label="dimension bound", color="tab:blue")
    if "n_numerical" in cols:
        ax.loglog(alpha, cols["n_numerical"][order], "s--",
                  label="trace estimate", color="tab:green")
    ref = dim[0] * (alpha / alpha[0]) ** -3
    ax.loglog(alpha, ref, ":", color="gray", label=r"$\alpha^{-3}$ reference")
    ax.set_xlabel(r"$\alpha$")
    ax.set_ylabel("dimension")
    ax.invert_xaxis()
    ax.text(0.02, 0.95, f"fitted slope {slope:.2f}", transform=ax.transAxes,
            va="top", bbox={"boxstyle": "round", "facecolor": "#eeeeee"})
    ax.legend(loc="lower left")
    return _save(fig, spec, {"nsv:slope": f"{slope:.17g}"})


def _plot_trace_sums(spec: FigureSpec) -> Path:
    cols = read_columns(spec.input_csv, _REQUIRED_COLUMNS["trace-sums"])
    n, avg = cols["n"], cols["avg_trace"]
    window = cols["window"][0]
    crossing = n[avg < 0.0]
    n_num = int(crossing[0]) if len(crossing) else None

    fig, ax = _new_axes(f"windowed trace sums (window {window:g})")
    ax.axhline(0.0, color="black", lw=0.8)
    ax.plot(n, avg, "o-", color="tab:blue")
    if n_num is not None:
        ax.axvline(n_num, color="tab:red", ls="--",
                   label=f"first negative prefix n = {n_num}")
        ax.legend(loc="upper right")
    ax.set_xlabel("tangent count n")
    ax.set_ylabel("time-averaged trace sum")
    meta_n = "none" if n_num is None else str(n_num)
    return _save(fig, spec, {"nsv:n_numerical": meta_n})


def _plot_limit_distance(spec: FigureSpec) -> Path:
    cols = read_columns(spec.input_csv, _REQUIRED_COLUMNS["limit-distance"])
    alpha, t, dist = cols["alpha"], cols["t"], cols["dist_vstar"]
    fig, ax = _new_axes("weak-metric distance to the limit branch")
    maxima = {}
    for a in sorted(set(alpha), reverse=True):
        mask = alpha == a
        ax.plot(t[mask], dist[mask], label=rf"$\alpha = {a:g}$")
        maxima[f"{a:g}"] = float(dist[mask].max())
    ax.set_xlabel("t")
    ax.set_ylabel(r"$V^{*}$ distance")
    ax.legend(loc="upper left")
    meta = json.dumps(maxima, sort_keys=True)
    return _save(fig, spec, {"nsv:max_distances": meta})


_BUILDERS = {
    "decay-envelope": _plot_decay_envelope,
    "dim-vs-alpha": _plot_dim_vs_alpha,
    "trace-sums": _plot_trace_sums,
    "limit-distance": _plot_limit_distance,
}


def plot(spec: FigureSpec) -> Path:
    """Render the requested figure; raises SchemaError before any file is
    written when the input does not validate."""
    if not Path(spec.input_csv).exists():
        raise SchemaError(f"input CSV not found: {spec.input_csv}")
    return _BUILDERS[spec.kind](spec)
