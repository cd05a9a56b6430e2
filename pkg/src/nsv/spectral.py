"""Fourier-Galerkin discretization on the periodic torus.

Velocity fields are divergence-free, zero-mean truncated Fourier series on
[0, L]^3.  Coefficients are stored on the full N^3 FFT lattice in numpy
``fftfreq`` order with the convention

    u(x) = sum_k  c_k  exp(i (2 pi / L) k . x),

so the L2 norm is the plain Parseval sum over coefficients (unit torus
measure) and all norms are exact lattice sums with no quadrature error.
Nyquist planes (|k_i| = N/2 for even N) are always zeroed; the retained
lattice is |k_i| <= (N-1)//2.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import fft as sfft

from .errors import CapacityError, DomainMismatchError, InvalidFieldError

_HERMITIAN_TOL = 1e-10


def _fftn(a: np.ndarray) -> np.ndarray:
    return sfft.fftn(a, axes=(-3, -2, -1))


def _ifftn(a: np.ndarray) -> np.ndarray:
    return sfft.ifftn(a, axes=(-3, -2, -1))


@dataclass(frozen=True)
class DomainSpec:
    """Periodic box geometry and truncation contract.

    Parameters
    ----------
    period : float
        Edge length L of the cubic box (same on each axis).
    modes_per_axis : int
        FFT grid size N per axis; retained modes satisfy |k_i| <= (N-1)//2.
    dealias_fraction : float
        Fraction f of the Nyquist wavenumber kept by the dealiasing mask,
        strict cut |k_i| < f*N/2.  The default 2/3 removes all aliasing
        from quadratic products.
    """

    period: float = 2.0 * np.pi
    modes_per_axis: int = 16
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        if self.period <= 0:
            raise ValueError("period must be positive")
        if self.modes_per_axis < 2:
            raise ValueError("modes_per_axis must be at least 2")
        if not 0.0 < self.dealias_fraction <= 1.0:
            raise ValueError("dealias_fraction must lie in (0, 1]")

    @property
    def lambda1(self) -> float:
        """Smallest positive Stokes eigenvalue (2 pi / L)^2."""
        return (2.0 * np.pi / self.period) ** 2

    @property
    def kmax_retained(self) -> int:
        return (self.modes_per_axis - 1) // 2

    @property
    def kmax_dealias(self) -> int:
        cut = self.dealias_fraction * self.modes_per_axis / 2.0
        # strict inequality |k| < f*N/2
        kd = int(np.ceil(cut)) - 1 if float(cut).is_integer() else int(np.floor(cut))
        return min(self.kmax_retained, max(kd, 1))

    @cached_property
    def k_lattice(self) -> np.ndarray:
        """Integer wavevectors, shape (3, N, N, N) in fftfreq order."""
        n = self.modes_per_axis
        k1 = np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)
        kx, ky, kz = np.meshgrid(k1, k1, k1, indexing="ij")
        return np.stack([kx, ky, kz])

    @cached_property
    def k_sq_int(self) -> np.ndarray:
        k = self.k_lattice
        return k[0] ** 2 + k[1] ** 2 + k[2] ** 2

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """Stokes eigenvalue lambda_k = lambda1 |k|^2 per lattice site."""
        return self.lambda1 * self.k_sq_int.astype(np.float64)

    @cached_property
    def truncation_mask(self) -> np.ndarray:
        k = np.abs(self.k_lattice)
        return (k <= self.kmax_retained).all(axis=0)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        k = np.abs(self.k_lattice)
        return (k <= self.kmax_dealias).all(axis=0)

    @cached_property
    def _conj_index(self) -> tuple:
        n = self.modes_per_axis
        flip = (-np.arange(n)) % n
        return np.ix_(flip, flip, flip)

    def conj_reflect(self, coeffs: np.ndarray) -> np.ndarray:
        """Return conj(c(-k)) with the lattice index reflected in place."""
        ix = self._conj_index
        return np.conj(coeffs[..., ix[0], ix[1], ix[2]])

    def retained_wavevectors(self) -> np.ndarray:
        """Nonzero retained lattice vectors, lexicographically sorted, (M, 3)."""
        kmax = self.kmax_retained
        r = np.arange(-kmax, kmax + 1)
        kx, ky, kz = np.meshgrid(r, r, r, indexing="ij")
        vecs = np.stack([kx.ravel(), ky.ravel(), kz.ravel()], axis=1)
        return vecs[np.any(vecs != 0, axis=1)]


@dataclass(frozen=True)
class SpectralField:
    """Divergence-free, zero-mean velocity field in coefficient space.

    ``coeffs`` has shape (3, N, N, N): component index first, then the
    fftfreq-ordered lattice.  Instances are immutable; every operation
    returns a new field.
    """

    spec: DomainSpec
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = self.spec.modes_per_axis
        if self.coeffs.shape != (3, n, n, n):
            raise InvalidFieldError(
                f"coefficient array must have shape (3, {n}, {n}, {n})"
            )
        self.coeffs.setflags(write=False)

    # --- invariant checks -------------------------------------------------

    def validate(self, tol: float = 1e-8) -> None:
        """Raise InvalidFieldError if any field invariant is violated."""
        c = self.coeffs
        scale = max(float(np.abs(c).max()), 1e-300)
        if np.abs(c[:, 0, 0, 0]).max() > tol * scale:
            raise InvalidFieldError("mean mode is not zero")
        if np.abs(c - self.spec.conj_reflect(c)).max() > tol * scale:
            raise InvalidFieldError("coefficients are not Hermitian symmetric")
        k = self.spec.k_lattice
        div = (k * c).sum(axis=0)
        if np.abs(div).max() > tol * scale * max(self.spec.kmax_retained, 1):
            raise InvalidFieldError("field is not divergence-free")
        if np.abs(c * ~self.spec.truncation_mask).max() > 0:
            raise InvalidFieldError("energy outside the retained lattice")

    # --- arithmetic -------------------------------------------------------

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _check_same_spec(self, other)
        return SpectralField(self.spec, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _check_same_spec(self, other)
        return SpectralField(self.spec, self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> "SpectralField":
        return SpectralField(self.spec, self.coeffs * scalar)

    __rmul__ = __mul__

    def copy(self) -> "SpectralField":
        return SpectralField(self.spec, self.coeffs.copy())

    @classmethod
    def zero(cls, spec: DomainSpec) -> "SpectralField":
        n = spec.modes_per_axis
        return cls(spec, np.zeros((3, n, n, n), dtype=np.complex128))


def _check_same_spec(u: SpectralField, v: SpectralField) -> None:
    if u.spec != v.spec:
        raise DomainMismatchError("fields live on different domains")


# ---------------------------------------------------------------------------
# core operators (array kernels broadcast over leading axes)
# ---------------------------------------------------------------------------

def hermitianize(spec: DomainSpec, coeffs: np.ndarray) -> np.ndarray:
    """Project coefficients onto the Hermitian (real-field) subspace."""
    return 0.5 * (coeffs + spec.conj_reflect(coeffs))


def project_coeffs(spec: DomainSpec, coeffs: np.ndarray) -> np.ndarray:
    """Leray projection kernel: c_k <- (I - k k^T/|k|^2) c_k, c_0 <- 0.

    Also zeroes everything outside the retained lattice.  Broadcasts over
    leading axes of shape (..., 3, N, N, N).
    """
    k = spec.k_lattice.astype(np.float64)
    ksq = spec.k_sq_int.astype(np.float64)
    inv = np.where(ksq == 0, 0.0, 1.0 / np.where(ksq == 0, 1.0, ksq))
    kdotc = (k * coeffs).sum(axis=-4)
    out = coeffs - k * (kdotc * inv)[..., None, :, :, :]
    out = out * spec.truncation_mask
    out[..., 0, 0, 0] = 0.0
    return out


def leray_project(spec: DomainSpec, raw: np.ndarray) -> SpectralField:
    """Project raw Hermitian coefficients onto divergence-free, zero-mean fields.

    Raises InvalidFieldError when the input lacks Hermitian symmetry (the
    raw data would not describe a real vector field).
    """
    raw = np.asarray(raw, dtype=np.complex128)
    scale = max(float(np.abs(raw).max()), 1e-300)
    if np.abs(raw - spec.conj_reflect(raw)).max() > _HERMITIAN_TOL * scale:
        raise InvalidFieldError("input coefficients are not Hermitian symmetric")
    return SpectralField(spec, project_coeffs(spec, raw))


def stokes_pow_coeffs(spec: DomainSpec, coeffs: np.ndarray, power: float) -> np.ndarray:
    # zero-mean fields carry nothing at k=0, so the factor there is set to
    # keep negative powers (A^{-1}, the V* pairing) well-defined.
    lam = spec.eigenvalues
    lam_safe = np.where(lam == 0, 1.0, lam)
    factor = lam_safe**power
    factor[0, 0, 0] = 1.0 if power == 0 else 0.0
    return coeffs * factor


def stokes_apply(u: SpectralField, power: float = 1.0) -> SpectralField:
    """Apply the fractional Stokes operator A^power diagonally per mode."""
    return SpectralField(u.spec, stokes_pow_coeffs(u.spec, u.coeffs, power))


def g_factor(spec: DomainSpec, alpha: float) -> np.ndarray:
    """Per-mode multiplier (1 + alpha^2 lambda_k)^{1/2} of the map G."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    return np.sqrt(1.0 + alpha**2 * spec.eigenvalues)


def g_apply(u: SpectralField, alpha: float, direction: str = "forward") -> SpectralField:
    """Apply G = (I + alpha^2 A)^{1/2} or its inverse.

    G is an isometry from the alpha-energy norm onto L2; forward followed
    by inverse is the identity.
    """
    fac = g_factor(u.spec, alpha)
    if direction == "forward":
        return SpectralField(u.spec, u.coeffs * fac)
    if direction == "inverse":
        return SpectralField(u.spec, u.coeffs / fac)
    raise ValueError("direction must be 'forward' or 'inverse'")


# ---------------------------------------------------------------------------
# nonlinearity
# ---------------------------------------------------------------------------

def advect_coeffs(spec: DomainSpec, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Dealiased, projected coefficients of (u . grad) v.

    Pseudo-spectral evaluation: both inputs are masked by the 2/3-rule
    mask, transformed to the collocation grid, multiplied pointwise and
    transformed back; the product is masked again and Leray-projected.
    Because the mask is a symmetric truncation followed by an orthogonal
    projection, the trilinear orthogonality <B(u,v),v> = 0 is exact in
    floating point up to roundoff.

    Broadcasts over leading axes of ``v`` (``u`` fixed).
    """
    mask = spec.dealias_mask
    # pointwise values are N^3 * ifftn(c); fold the factor into the return
    u_phys = _ifftn(u * mask).real
    grad_v = _ifftn(
        1j * (2.0 * np.pi / spec.period)
        * spec.k_lattice[:, None] * (v * mask)[..., None, :, :, :, :]
    ).real
    # grad_v axes: (..., 3 grad dir, 3 component, N, N, N)
    prod = (u_phys[..., :, None, :, :, :] * grad_v).sum(axis=-5)
    out = _fftn(prod) * (mask * float(spec.modes_per_axis**3))
    return project_coeffs(spec, out)


def linearized_advect_coeffs(spec: DomainSpec, u: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Dealiased, projected coefficients of (w . grad) u + (u . grad) w.

    ``u`` is a single field (3, N, N, N); ``w`` may carry leading stack
    axes.  The physical-space u and grad(u) are computed once and shared
    across the stack, which is what makes co-evolving many tangent vectors
    affordable.
    """
    mask = spec.dealias_mask
    kfac = 1j * (2.0 * np.pi / spec.period) * spec.k_lattice
    u_phys = _ifftn(u * mask).real
    grad_u = _ifftn(kfac[:, None] * (u * mask)[None]).real
    w_phys = _ifftn(w * mask).real
    grad_w = _ifftn(kfac[:, None] * (w * mask)[..., None, :, :, :, :]).real
    prod = (u_phys[..., :, None, :, :, :] * grad_w).sum(axis=-5)
    prod += (w_phys[..., :, None, :, :, :] * grad_u).sum(axis=-5)
    out = _fftn(prod) * (mask * float(spec.modes_per_axis**3))
    return project_coeffs(spec, out)


def bilinear(u: SpectralField, v: SpectralField) -> SpectralField:
    """B(u, v) = P[(u . grad) v] with 2/3-rule dealiasing."""
    _check_same_spec(u, v)
    return SpectralField(u.spec, advect_coeffs(u.spec, u.coeffs, v.coeffs))


def inner(u: SpectralField, v: SpectralField) -> float:
    """Real L2 inner product (Parseval sum, unit torus measure)."""
    _check_same_spec(u, v)
    return float(np.real(np.vdot(u.coeffs, v.coeffs)))


def trilinear(u: SpectralField, v: SpectralField, w: SpectralField) -> float:
    """b(u, v, w) = <B(u, v), w> in L2."""
    return inner(bilinear(u, v), w)


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

_NORM_KINDS = ("L2", "H1", "Vstar", "Valpha", "Valpha2", "Valpha0")


def _weighted_sq(spec: DomainSpec, coeffs: np.ndarray, weight: np.ndarray) -> float:
    return float((np.abs(coeffs) ** 2 * weight).sum())


def norm(u: SpectralField, kind: str = "L2", alpha: float = 0.0) -> float:
    """Parseval norm of the requested kind.

    L2     : (sum |c_k|^2)^{1/2}
    H1     : (sum lambda_k |c_k|^2)^{1/2}
    Vstar  : (sum lambda_k^{-1} |c_k|^2)^{1/2}     (dual norm)
    Valpha : (L2^2 + alpha^2 H1^2)^{1/2}           (energy norm)
    Valpha2: (H1^2 + alpha^2 |A u|^2)^{1/2}
    Valpha0: (Vstar^2 + alpha^2 L2^2)^{1/2}        (weak metric norm)
    """
    if kind not in _NORM_KINDS:
        raise ValueError(f"unknown norm kind {kind!r}")
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    spec = u.spec
    lam = spec.eigenvalues
    c = u.coeffs
    if kind == "L2":
        return float(np.sqrt(_weighted_sq(spec, c, np.ones_like(lam))))
    if kind == "H1":
        return float(np.sqrt(_weighted_sq(spec, c, lam)))
    if kind == "Vstar":
        inv = np.where(lam == 0, 0.0, 1.0 / np.where(lam == 0, 1.0, lam))
        return float(np.sqrt(_weighted_sq(spec, c, inv)))
    if kind == "Valpha":
        w = 1.0 + alpha**2 * lam
        return float(np.sqrt(_weighted_sq(spec, c, w)))
    if kind == "Valpha2":
        w = lam + alpha**2 * lam**2
        return float(np.sqrt(_weighted_sq(spec, c, w)))
    # Valpha0
    inv = np.where(lam == 0, 0.0, 1.0 / np.where(lam == 0, 1.0, lam))
    w = inv + alpha**2
    w[0, 0, 0] = 0.0
    return float(np.sqrt(_weighted_sq(spec, c, w)))


# ---------------------------------------------------------------------------
# spectrum
# ---------------------------------------------------------------------------

def eigenvalue_table(spec: DomainSpec, count: int) -> np.ndarray:
    """First ``count`` Stokes eigenvalues with solenoidal multiplicity.

    Each nonzero retained lattice vector contributes two divergence-free
    eigendirections at lambda1 |k|^2; the list is sorted ascending.
    """
    vecs = spec.retained_wavevectors()
    capacity = 2 * len(vecs)
    if count > capacity:
        raise CapacityError(
            f"requested {count} eigenvalues but the truncation "
            f"(kmax={spec.kmax_retained}) retains only {capacity} eigendirections"
        )
    lam = spec.lambda1 * (vecs**2).sum(axis=1).astype(np.float64)
    lam = np.sort(np.repeat(lam, 2))
    return lam[:count]


# ---------------------------------------------------------------------------
# canonical fields
# ---------------------------------------------------------------------------

def taylor_green(spec: DomainSpec, amplitude: float = 1.0) -> SpectralField:
    """Classical Taylor-Green vortex on the box, divergence-free by construction."""
    n = spec.modes_per_axis
    x = np.arange(n) * (spec.period / n)
    kappa = 2.0 * np.pi / spec.period
    X, Y, Z = np.meshgrid(kappa * x, kappa * x, kappa * x, indexing="ij")
    u = np.empty((3, n, n, n))
    u[0] = amplitude * np.sin(X) * np.cos(Y) * np.cos(Z)
    u[1] = -amplitude * np.cos(X) * np.sin(Y) * np.cos(Z)
    u[2] = 0.0
    coeffs = _fftn(u) / n**3
    coeffs = hermitianize(spec, coeffs)
    return SpectralField(spec, project_coeffs(spec, coeffs))


def polarization_basis(kvec: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Two orthonormal real vectors perpendicular to the lattice vector."""
    k = kvec.astype(np.float64)
    axis = np.zeros(3)
    axis[int(np.argmin(np.abs(k)))] = 1.0
    e1 = np.cross(k, axis)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(k, e1)
    e2 /= np.linalg.norm(e2)
    return e1, e2


def single_mode(
    spec: DomainSpec,
    kvec,
    amplitude: float = 1.0,
    polarization: int = 0,
    phase: str = "cos",
) -> SpectralField:
    """Real single-mode field a * e * cos/sin(k.x) with L2 norm ``amplitude``."""
    kvec = np.asarray(kvec, dtype=np.int64)
    if np.all(kvec == 0) or np.abs(kvec).max() > spec.kmax_retained:
        raise InvalidFieldError("wavevector must be nonzero and retained")
    e1, e2 = polarization_basis(kvec)
    e = (e1, e2)[polarization]
    n = spec.modes_per_axis
    coeffs = np.zeros((3, n, n, n), dtype=np.complex128)
    idx = tuple(int(k) % n for k in kvec)
    idx_m = tuple(int(-k) % n for k in kvec)
    amp = amplitude / np.sqrt(2.0)
    if phase == "cos":
        val = amp
    elif phase == "sin":
        val = -1j * amp
    else:
        raise ValueError("phase must be 'cos' or 'sin'")
    for i in range(3):
        coeffs[(i,) + idx] = e[i] * val
        coeffs[(i,) + idx_m] = np.conj(e[i] * val)
    return SpectralField(spec, coeffs)


def random_field(
    spec: DomainSpec,
    rng: np.random.Generator,
    k_max: int | None = None,
    spectrum_slope: float = 0.0,
    amplitude: float | None = None,
) -> SpectralField:
    """Random divergence-free field with Gaussian low-mode coefficients.

    Coefficients are drawn per lattice pair in lexicographic wavevector
    order, so the stream is independent of array layout; the result is
    Hermitian-symmetrized and Leray-projected.  If ``amplitude`` is given
    the field is rescaled to that L2 norm.
    """
    n = spec.modes_per_axis
    if k_max is None:
        k_max = spec.kmax_dealias
    k_max = min(k_max, spec.kmax_retained)
    coeffs = np.zeros((3, n, n, n), dtype=np.complex128)
    vecs = spec.retained_wavevectors()
    vecs = vecs[np.all(np.abs(vecs) <= k_max, axis=1)]
    for kvec in vecs:
        shape = float((kvec**2).sum()) ** (-spectrum_slope / 2.0)
        z = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        idx = tuple(int(k) % n for k in kvec)
        for i in range(3):
            coeffs[(i,) + idx] = z[i] * shape
    coeffs = hermitianize(spec, coeffs)
    out = SpectralField(spec, project_coeffs(spec, coeffs))
    if amplitude is not None:
        l2 = norm(out, "L2")
        if l2 == 0.0:
            raise InvalidFieldError("random field collapsed to zero; cannot rescale")
        out = out * (amplitude / l2)
    return out


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

_MAGIC = b"NSVF"
_VERSION = 1


def save_field(u: SpectralField, path) -> None:
    """Binary record (N, L, coefficients in lexicographic k order) + JSON sidecar."""
    spec = u.spec
    vecs = spec.retained_wavevectors()
    n = spec.modes_per_axis
    rows = np.empty((len(vecs), 3), dtype=np.complex128)
    for j, kvec in enumerate(vecs):
        idx = tuple(int(k) % n for k in kvec)
        rows[j] = u.coeffs[(slice(None),) + idx]
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<iid", _VERSION, n, spec.period))
        fh.write(struct.pack("<d", spec.dealias_fraction))
        fh.write(rows.tobytes())
    sidecar = {
        "modes_per_axis": n,
        "period": spec.period,
        "norms": {
            "L2": norm(u, "L2"),
            "H1": norm(u, "H1"),
            "Vstar": norm(u, "Vstar"),
        },
    }
    with open(str(path) + ".json", "w") as fh:
        json.dump(sidecar, fh, sort_keys=True, indent=1)


def load_field(path, spec: DomainSpec | None = None, check_norms: bool = True) -> SpectralField:
    """Load a field written by :func:`save_field`, verifying the sidecar norms."""
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise InvalidFieldError(f"{path}: not a field record")
        version, n, period = struct.unpack("<iid", fh.read(16))
        if version != _VERSION:
            raise InvalidFieldError(f"{path}: unsupported record version {version}")
        (dealias,) = struct.unpack("<d", fh.read(8))
        file_spec = DomainSpec(period=period, modes_per_axis=n, dealias_fraction=dealias)
        if spec is not None and (
            spec.modes_per_axis != n or abs(spec.period - period) > 1e-14 * period
        ):
            raise InvalidFieldError(
                f"{path}: record truncation N={n}, L={period} does not match the "
                f"requested domain"
            )
        spec = spec or file_spec
        vecs = spec.retained_wavevectors()
        data = np.frombuffer(fh.read(), dtype=np.complex128)
    if data.size != 3 * len(vecs):
        raise InvalidFieldError(f"{path}: truncated coefficient payload")
    rows = data.reshape(len(vecs), 3)
    coeffs = np.zeros((3, n, n, n), dtype=np.complex128)
    for j, kvec in enumerate(vecs):
        idx = tuple(int(k) % n for k in kvec)
        coeffs[(slice(None),) + idx] = rows[j]
    out = SpectralField(spec, coeffs)
    if check_norms:
        with open(str(path) + ".json") as fh:
            sidecar = json.load(fh)
        for kind, expected in sidecar["norms"].items():
            got = norm(out, kind)
            if abs(got - expected) > 1e-9 * max(1.0, abs(expected)):
                raise InvalidFieldError(
                    f"{path}: sidecar {kind} norm mismatch ({got} vs {expected})"
                )
    return out
