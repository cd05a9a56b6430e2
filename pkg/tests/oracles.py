"""Independent brute-force oracles the fast paths are checked against.

Everything here is written for clarity, not speed: direct lattice loops,
explicit convolutions in coefficient space, naive enumerations.  None of
it shares code with the implementation under test.
"""

import numpy as np


def lattice_eigenvalues(period: float, kmax: int, count: int) -> np.ndarray:
    """Sorted Stokes eigenvalues by direct O(N^3) lattice enumeration,
    two solenoidal directions per nonzero vector."""
    lam1 = (2.0 * np.pi / period) ** 2
    vals = []
    for kx in range(-kmax, kmax + 1):
        for ky in range(-kmax, kmax + 1):
            for kz in range(-kmax, kmax + 1):
                if kx == ky == kz == 0:
                    continue
                vals.extend([lam1 * (kx * kx + ky * ky + kz * kz)] * 2)
    return np.sort(np.array(vals))[:count]


def convolution_advect(spec, u_coeffs: np.ndarray, v_coeffs: np.ndarray) -> np.ndarray:
    """Galerkin coefficients of P[(u . grad) v] by direct triple-sum
    convolution over the dealiased lattice, matching the truncation of the
    pseudo-spectral path."""
    n = spec.modes_per_axis
    kd = spec.kmax_dealias
    kappa = 2.0 * np.pi / spec.period
    out = np.zeros_like(u_coeffs)

    def idx(k):
        return tuple(int(c) % n for c in k)

    rng = range(-kd, kd + 1)
    lattice = [(a, b, c) for a in rng for b in rng for c in rng]
    for k in lattice:
        acc = np.zeros(3, dtype=np.complex128)
        for p in lattice:
            q = (k[0] - p[0], k[1] - p[1], k[2] - p[2])
            if max(abs(q[0]), abs(q[1]), abs(q[2])) > kd:
                continue
            up = u_coeffs[(slice(None),) + idx(p)]
            vq = v_coeffs[(slice(None),) + idx(q)]
            # [(u.grad)v]_k = sum_p i (q . u_p) v_q, q = k - p
            acc += 1j * kappa * (q[0] * up[0] + q[1] * up[1] + q[2] * up[2]) * vq
        out[(slice(None),) + idx(k)] = acc
    # Leray projection per mode
    for k in lattice:
        if k == (0, 0, 0):
            out[(slice(None),) + idx(k)] = 0.0
            continue
        kv = np.array(k, dtype=float)
        c = out[(slice(None),) + idx(k)]
        out[(slice(None),) + idx(k)] = c - kv * (kv @ c) / (kv @ kv)
    return out


def per_mode_leray(raw: np.ndarray, k_lattice: np.ndarray) -> np.ndarray:
    """Direct per-mode (I - k k^T / |k|^2) applied with explicit loops."""
    out = np.zeros_like(raw)
    n = raw.shape[-1]
    for ix in range(n):
        for iy in range(n):
            for iz in range(n):
                k = k_lattice[:, ix, iy, iz].astype(float)
                c = raw[:, ix, iy, iz]
                ksq = k @ k
                if ksq == 0:
                    out[:, ix, iy, iz] = 0.0
                else:
                    out[:, ix, iy, iz] = c - k * (k @ c) / ksq
    return out


def hausdorff_semidistance(a_pts, b_pts, dist) -> float:
    """sup over a of inf over b of dist(a, b), by exhaustive loops."""
    best = 0.0
    for a in a_pts:
        best = max(best, min(dist(a, b) for b in b_pts))
    return best
