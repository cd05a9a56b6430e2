"""The vanishing-regularization limit: trajectory and attractor-cloud
convergence toward the Navier-Stokes branch in the weak (dual-norm) metric.

On bounded sets weak L2 convergence is equivalent to strong convergence in
the dual norm, so the weak metric is realized concretely as the V* norm
(or its alpha-weighted variant).  The alpha = 0 branch is the Galerkin
Navier-Stokes system, integrated by the same exponential-factor scheme.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import spectral
from .dynamics import Trajectory, TrajectoryConfig, VoigtParams, evolve
from .errors import DivergenceError
from .spectral import SpectralField


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

def weak_distance(u: SpectralField, v: SpectralField, alpha: float = 0.0) -> float:
    """Dual-norm distance: V* for alpha = 0, else the alpha-weighted
    weak norm (||d||_*^2 + alpha^2 |d|^2)^{1/2}."""
    d = u - v
    if alpha == 0.0:
        return spectral.norm(d, "Vstar")
    return spectral.norm(d, "Valpha0", alpha)


@dataclass(frozen=True)
class CloudDistance:
    semidist_forward: float
    semidist_backward: float
    metric: str

    @property
    def hausdorff(self) -> float:
        return max(self.semidist_forward, self.semidist_backward)

    CSV_HEADER = "alpha,forward,backward,metric"


def cloud_semidistance(
    cloud_a: list, cloud_b: list, metric: str = "Vstar", alpha: float = 0.0
) -> CloudDistance:
    """Exact double-loop Hausdorff semidistances between two point clouds.

    ``metric`` is "Vstar" or "Valpha0" (the latter uses ``alpha``).
    """
    if not cloud_a or not cloud_b:
        raise ValueError("clouds must be nonempty")
    if metric not in ("Vstar", "Valpha0"):
        raise ValueError("metric must be 'Vstar' or 'Valpha0'")
    a_eff = 0.0 if metric == "Vstar" else alpha

    def semidist(src, dst):
        worst = 0.0
        for x in src:
            best = min(weak_distance(x, y, a_eff) for y in dst)
            worst = max(worst, best)
        return worst

    return CloudDistance(
        semidist_forward=semidist(cloud_a, cloud_b),
        semidist_backward=semidist(cloud_b, cloud_a),
        metric=metric,
    )


# ---------------------------------------------------------------------------
# family runs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FamilyRun:
    """A ladder of regularization lengths sharing domain, start and forcing."""

    alphas: tuple
    nu: float
    shared_u0: SpectralField
    shared_g: SpectralField
    cfg: TrajectoryConfig

    def __post_init__(self):
        if any(a < 0 or a > 1 for a in self.alphas):
            raise ValueError("alphas must lie in [0, 1]")
        if list(self.alphas) != sorted(self.alphas, reverse=True):
            raise ValueError("alphas must be decreasing")
        if self.shared_u0.spec != self.shared_g.spec:
            raise ValueError("start and forcing must share the domain")


@dataclass
class BranchProfile:
    alpha: float
    times: list
    dist_vstar: list          # t -> V* distance to the alpha = 0 branch
    diverged: bool = False

    @property
    def max_distance(self) -> float:
        return max(self.dist_vstar) if self.dist_vstar else float("nan")


@dataclass
class FamilyResult:
    profiles: list            # one BranchProfile per alpha > 0 in ladder order
    nse_trajectory: Trajectory
    branch_trajectories: dict  # alpha -> Trajectory
    partial: bool = False


def run_family(fam: FamilyRun) -> FamilyResult:
    """Evolve every branch of the ladder plus the alpha = 0 reference and
    emit the V*-distance profile of each branch against the reference.

    A diverging branch flags the family result partial instead of failing
    the whole family.
    """
    spec = fam.shared_u0.spec
    results: dict = {}
    diverged: set = set()
    ladder = list(fam.alphas)
    if 0.0 not in ladder:
        ladder = ladder + [0.0]
    for alpha in ladder:
        p = VoigtParams(nu=fam.nu, alpha=alpha, forcing=fam.shared_g)
        try:
            results[alpha] = evolve(fam.shared_u0, p, fam.cfg, warn_cfl=False)
        except DivergenceError:
            diverged.add(alpha)
    if 0.0 in diverged:
        raise RuntimeError("the reference branch diverged; choose a smaller dt")
    ref = results[0.0]
    profiles = []
    for alpha in fam.alphas:
        if alpha in diverged:
            profiles.append(BranchProfile(alpha, [], [], diverged=True))
            continue
        traj = results[alpha]
        dists = [
            weak_distance(ua, u0, 0.0)
            for ua, u0 in zip(traj.fields, ref.fields)
        ]
        profiles.append(BranchProfile(alpha, list(traj.times), dists))
    return FamilyResult(
        profiles=profiles,
        nse_trajectory=ref,
        branch_trajectories={a: t for a, t in results.items()},
        partial=bool(diverged),
    )


def sample_attractor_cloud(
    p: VoigtParams,
    u0: SpectralField,
    transient: float,
    window: float,
    dt: float,
    stride: int,
) -> list:
    """Strided post-transient snapshots along one trajectory, the cheapest
    unbiased stand-in for the attractor."""
    warm_cfg = TrajectoryConfig(dt=dt, t_end=transient, record_stride=10**9)
    warm = evolve(u0, p, warm_cfg, record_fields=False, warn_cfl=False)
    cloud_cfg = TrajectoryConfig(dt=dt, t_end=window, record_stride=stride)
    traj = evolve(warm.final, p, cloud_cfg, warn_cfl=False)
    return traj.fields


# ---------------------------------------------------------------------------
# Leray-Hopf energy inequality residual
# ---------------------------------------------------------------------------

def energy_inequality_residual(nse_traj: Trajectory, p: VoigtParams) -> float:
    """Largest positive violation, over all record pairs s < t, of

        |u(t)|^2 + 2 nu int_s^t ||u||^2 <= |u(s)|^2 + 2 int_s^t <g, u>,

    normalized by max(1, |u(s)|^2), with trapezoid quadrature.  For
    Galerkin solutions the relation is an identity, so the residual is
    pure integrator and quadrature error and vanishes as dt -> 0.
    """
    if p.alpha != 0.0:
        raise ValueError("the energy inequality residual applies to the alpha=0 branch")
    if len(nse_traj.records) < 2:
        raise ValueError("need at least two records")
    times = np.asarray(nse_traj.times)
    l2sq = np.array([r.E_alpha for r in nse_traj.records])   # alpha=0: E = |u|^2
    h1sq = np.array([r.H1 for r in nse_traj.records])
    gdot = np.array([spectral.inner(p.forcing, f) for f in nse_traj.fields])
    dt_rec = np.diff(times)
    cum_h1 = np.concatenate([[0.0], np.cumsum(0.5 * (h1sq[1:] + h1sq[:-1]) * dt_rec)])
    cum_g = np.concatenate([[0.0], np.cumsum(0.5 * (gdot[1:] + gdot[:-1]) * dt_rec)])
    worst = 0.0
    n = len(times)
    for i in range(n - 1):
        j = np.arange(i + 1, n)
        lhs = l2sq[j] + 2.0 * p.nu * (cum_h1[j] - cum_h1[i])
        rhs = l2sq[i] + 2.0 * (cum_g[j] - cum_g[i])
        viol = (lhs - rhs) / max(1.0, l2sq[i])
        worst = max(worst, float(viol.max()))
    return worst


# ---------------------------------------------------------------------------
# absorbing-ball nesting
# ---------------------------------------------------------------------------

def absorbing_radius_sq(nu: float, gnorm: float, lambda1: float, alpha: float) -> float:
    return 2.0 * (1.0 + lambda1 * alpha**2) * gnorm**2 / (nu**2 * lambda1**2)


def absorbing_nesting_check(nu: float, gnorm: float, lambda1: float, alphas) -> bool:
    """Closed-form check that every Voigt absorbing ball sits inside the
    Navier-Stokes one (radius at alpha = 1)."""
    b0 = absorbing_radius_sq(nu, gnorm, lambda1, 1.0)
    return all(
        absorbing_radius_sq(nu, gnorm, lambda1, a) <= b0 * (1.0 + 1e-15)
        for a in alphas
    )
