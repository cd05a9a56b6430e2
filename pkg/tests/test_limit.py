"""Vanishing-alpha limit: weak metric, family convergence, clouds,
energy inequality and nesting."""

import numpy as np
import pytest

from nsv.dynamics import SpectralField, TrajectoryConfig, VoigtParams, evolve
from nsv.limit import (
    CloudDistance,
    FamilyRun,
    absorbing_nesting_check,
    absorbing_radius_sq,
    cloud_semidistance,
    energy_inequality_residual,
    run_family,
    sample_attractor_cloud,
    weak_distance,
)
from nsv.spectral import norm, single_mode, taylor_green

from conftest import make_field
from oracles import hausdorff_semidistance


def params(spec, nu=1.0, alpha=0.0, forcing=None):
    if forcing is None:
        forcing = SpectralField.zero(spec)
    return VoigtParams(nu=nu, alpha=alpha, forcing=forcing)


# ---------------------------------------------------------------------------
# weak metric
# ---------------------------------------------------------------------------

def test_weak_distance_identical(spec8):
    u = make_field(spec8, seed=80)
    assert weak_distance(u, u, 0.0) == 0.0
    assert weak_distance(u, u, 0.5) == 0.0


def test_weak_distance_single_mode_scalings(spec8):
    a = 0.9
    u = single_mode(spec8, (2, 0, 0), amplitude=2.0 + a)
    v = single_mode(spec8, (2, 0, 0), amplitude=2.0)
    # lambda = 4: V* picks up a factor lambda^{-1/2} = 1/2
    assert weak_distance(u, v, 0.0) == pytest.approx(a / 2.0, rel=1e-12)
    w1 = single_mode(spec8, (1, 0, 0), amplitude=1.0 + a)
    w2 = single_mode(spec8, (1, 0, 0), amplitude=1.0)
    # lambda = 1, alpha = 1: sqrt(1 + 1) * a
    assert weak_distance(w1, w2, 1.0) == pytest.approx(a * np.sqrt(2.0), rel=1e-12)


def test_weak_distance_poincare_domination(spec8):
    lam1 = spec8.lambda1
    for seed in range(81, 86):
        u = make_field(spec8, seed=seed)
        v = make_field(spec8, seed=seed + 50)
        d = u - v
        assert weak_distance(u, v, 0.0) <= norm(d, "L2") / np.sqrt(lam1) + 1e-12


# ---------------------------------------------------------------------------
# family runs
# ---------------------------------------------------------------------------

def test_family_self_comparison(spec8):
    u0 = make_field(spec8, seed=87, k_max=2, amplitude=1.0)
    fam = FamilyRun(
        alphas=(0.0,), nu=1.0, shared_u0=u0,
        shared_g=SpectralField.zero(spec8),
        cfg=TrajectoryConfig(dt=0.01, t_end=0.2, record_stride=5),
    )
    result = run_family(fam)
    assert len(result.profiles) == 1
    assert max(result.profiles[0].dist_vstar) == 0.0


def test_family_taylor_green_convergence(spec16):
    u0 = taylor_green(spec16)
    fam = FamilyRun(
        alphas=(0.5, 0.25, 0.125), nu=0.1, shared_u0=u0,
        shared_g=SpectralField.zero(spec16),
        cfg=TrajectoryConfig(dt=2e-3, t_end=1.0, record_stride=25),
    )
    result = run_family(fam)
    assert not result.partial
    maxima = [prof.max_distance for prof in result.profiles]
    assert maxima[0] > maxima[1] > maxima[2] > 0.0
    assert maxima[1] / maxima[0] <= 0.8
    assert maxima[2] / maxima[1] <= 0.8


def test_family_rejects_bad_ladder(spec8):
    u0 = make_field(spec8, seed=88)
    with pytest.raises(ValueError):
        FamilyRun(
            alphas=(0.25, 0.5), nu=1.0, shared_u0=u0,
            shared_g=SpectralField.zero(spec8),
            cfg=TrajectoryConfig(dt=0.01, t_end=0.1),
        )


def test_family_uniform_H_bound(spec8):
    # every branch stays inside the alpha-independent L2 ball eventually
    g = make_field(spec8, seed=89, k_max=1, amplitude=0.5)
    u0 = make_field(spec8, seed=90, k_max=2, amplitude=1.0)
    nu = 1.0
    lam1 = spec8.lambda1
    b0_sq = 2.0 * (1.0 + lam1) * norm(g, "L2") ** 2 / (nu**2 * lam1**2)
    fam = FamilyRun(
        alphas=(1.0, 0.5, 0.25, 0.0), nu=nu, shared_u0=u0, shared_g=g,
        cfg=TrajectoryConfig(dt=5e-3, t_end=6.0, record_stride=100),
    )
    result = run_family(fam)
    for alpha, traj in result.branch_trajectories.items():
        e0 = traj.records[0].E_alpha
        pump = (1.0 + lam1 * alpha**2) * norm(g, "L2") ** 2 / (nu**2 * lam1**2)
        kappa = nu * lam1 / (1.0 + lam1 * alpha**2)
        t_entry = max(np.log(max(e0 / pump, 1.0)) / kappa, 0.0)
        for t, f in zip(traj.times, traj.fields):
            if t >= t_entry:
                assert norm(f, "L2") ** 2 <= b0_sq * (1.0 + 1e-8)


def test_derivative_integral_uniform_in_alpha(spec8):
    # windowed integrals of the 4/3-power dual-norm derivative stay
    # comparable to the alpha = 1 anchor as alpha -> 0
    g = make_field(spec8, seed=91, k_max=1, amplitude=1.0)
    u0 = make_field(spec8, seed=92, k_max=2, amplitude=1.0)
    cfg = TrajectoryConfig(dt=5e-3, t_end=3.0, record_stride=20)

    def windowed_integral(alpha):
        p = params(spec8, nu=1.0, alpha=alpha, forcing=g)
        traj = evolve(u0, p, cfg, record_fields=False)
        t = np.asarray(traj.times)
        y = np.array([r.dtnorm_Vstar43 for r in traj.records])
        inside = t >= 2.0
        return float(np.trapezoid(y[inside], t[inside]))

    anchor = windowed_integral(1.0)
    for alpha in (0.5, 0.25, 0.125, 0.0):
        assert windowed_integral(alpha) <= 3.0 * anchor + 1e-9


# ---------------------------------------------------------------------------
# clouds
# ---------------------------------------------------------------------------

def _amp_cloud(spec, amps, kvec=(1, 0, 0)):
    return [single_mode(spec, kvec, amplitude=a) for a in amps]


def test_cloud_identical(spec8):
    cloud = _amp_cloud(spec8, [1.0, 2.0, 3.0])
    d = cloud_semidistance(cloud, cloud)
    assert d.semidist_forward == 0.0 and d.semidist_backward == 0.0


def test_cloud_subset(spec8):
    small = _amp_cloud(spec8, [1.0, 2.0])
    big = _amp_cloud(spec8, [1.0, 2.0, 5.0])
    d = cloud_semidistance(small, big)
    assert d.semidist_forward == 0.0
    assert d.semidist_backward > 0.0
    assert d.hausdorff == d.semidist_backward


def test_cloud_matches_hand_computation(spec8):
    # single mode lambda = 1: V* distance between amplitudes is |a - b|
    a_cloud = _amp_cloud(spec8, [1.0, 2.0, 5.0])
    b_cloud = _amp_cloud(spec8, [1.5, 4.0])
    d = cloud_semidistance(a_cloud, b_cloud)
    assert d.semidist_forward == pytest.approx(1.0, rel=1e-12)
    assert d.semidist_backward == pytest.approx(1.0, rel=1e-12)


def test_cloud_matches_bruteforce_oracle(spec8):
    rng_clouds = (
        [make_field(spec8, seed=s, k_max=2) for s in (100, 101, 102)],
        [make_field(spec8, seed=s, k_max=2) for s in (110, 111)],
    )
    d = cloud_semidistance(*rng_clouds, metric="Vstar")
    fwd = hausdorff_semidistance(
        rng_clouds[0], rng_clouds[1], lambda a, b: weak_distance(a, b, 0.0))
    assert d.semidist_forward == pytest.approx(fwd, rel=1e-14)


def test_cloud_triangle_bound(spec8):
    a = [make_field(spec8, seed=s, k_max=2) for s in (120, 121, 122)]
    b = [make_field(spec8, seed=s, k_max=2) for s in (130, 131)]
    c = [make_field(spec8, seed=s, k_max=2) for s in (140, 141, 142, 143)]
    d_ac = cloud_semidistance(a, c).semidist_forward
    d_ab = cloud_semidistance(a, b).semidist_forward
    d_bc = cloud_semidistance(b, c)
    assert d_ac <= d_ab + d_bc.hausdorff + 1e-12


def test_cloud_empty_rejected(spec8):
    cloud = _amp_cloud(spec8, [1.0])
    with pytest.raises(ValueError):
        cloud_semidistance([], cloud)


def test_attractor_cloud_sampler(spec8):
    g = make_field(spec8, seed=150, k_max=1, amplitude=0.5)
    p = params(spec8, nu=1.0, alpha=0.5, forcing=g)
    u0 = make_field(spec8, seed=151, k_max=2, amplitude=1.0)
    cloud = sample_attractor_cloud(p, u0, transient=2.0, window=1.0, dt=0.01, stride=20)
    assert len(cloud) >= 3


# ---------------------------------------------------------------------------
# energy inequality residual
# ---------------------------------------------------------------------------

def test_energy_inequality_zero_solution(spec8):
    p = params(spec8, nu=1.0, alpha=0.0)
    traj = evolve(SpectralField.zero(spec8), p,
                  TrajectoryConfig(dt=0.01, t_end=0.1, record_stride=2))
    assert energy_inequality_residual(traj, p) == 0.0


def test_energy_inequality_forced_nse(spec16):
    g = single_mode(spec16, (1, 0, 0), amplitude=1.0)
    p = params(spec16, nu=1.0, alpha=0.0, forcing=g)
    u0 = taylor_green(spec16)
    traj = evolve(u0, p, TrajectoryConfig(dt=1e-3, t_end=0.5, record_stride=2))
    assert energy_inequality_residual(traj, p) < 1e-5


def test_energy_inequality_dt_convergence(spec8):
    g = single_mode(spec8, (1, 0, 0), amplitude=1.0)
    p = params(spec8, nu=0.5, alpha=0.0, forcing=g)
    u0 = make_field(spec8, seed=160, k_max=2, amplitude=1.0)
    coarse = energy_inequality_residual(
        evolve(u0, p, TrajectoryConfig(dt=2e-3, t_end=0.5, record_stride=2)), p)
    fine = energy_inequality_residual(
        evolve(u0, p, TrajectoryConfig(dt=1e-3, t_end=0.5, record_stride=2)), p)
    assert coarse >= 3.0 * fine


def test_energy_inequality_requires_nse(spec8):
    p = params(spec8, nu=1.0, alpha=0.5)
    traj = evolve(SpectralField.zero(spec8), p,
                  TrajectoryConfig(dt=0.01, t_end=0.05))
    with pytest.raises(ValueError):
        energy_inequality_residual(traj, p)


# ---------------------------------------------------------------------------
# absorbing-ball nesting
# ---------------------------------------------------------------------------

def test_nesting_alpha_one_equality():
    assert absorbing_radius_sq(1.0, 1.0, 1.0, 1.0) == pytest.approx(
        2.0 * (1.0 + 1.0), rel=1e-15
    )


def test_nesting_strict_inside():
    assert absorbing_radius_sq(1.0, 1.0, 1.0, 0.5) < absorbing_radius_sq(
        1.0, 1.0, 1.0, 1.0
    )


def test_nesting_full_grid():
    assert absorbing_nesting_check(0.7, 2.0, 1.3, [1.0, 0.5, 0.25, 0.125])
