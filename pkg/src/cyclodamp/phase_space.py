"""Grids, spectral distributions, Fourier conventions, and equilibria.

A distribution f(t,x,v) is stored as its x-Fourier coefficients on a
truncated integer lattice, gridded in v:

    data[k-index..., v-index...] = f_hat(k, v) = int exp(-2*pi*i*k.x) f dx.

The velocity box [-lv, lv)^d is treated as periodic; the companion
transform in v uses the same 2*pi convention,

    f_hat(k, eta) = int exp(-2*pi*i*v.eta) f_hat(k, v) dv,

realized as a scaled FFT on the eta grid eta_m = m/(2*lv).  Equilibria must
decay below 1e-12 at the box boundary so that the periodicization is
invisible at test tolerances.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

CHECKPOINT_MAGIC = b"CYDK"
CHECKPOINT_VERSION = 1


class BoundaryTruncationError(ValueError):
    """Equilibrium tail exceeds 1e-12 at the velocity-box boundary."""


@dataclass(frozen=True)
class Geometry:
    """Discretization of T^dim_x x [-lv,lv)^dim_x.

    kmax is the mode cutoff per retained x-dimension (retained modes are
    -kmax..kmax), nv the number of velocity points per dimension, lv the
    velocity half-box.  nv must be a power of two and at least 32.
    """

    dim_x: int
    kmax: int
    nv: int
    lv: float

    @property
    def dv(self) -> float:
        return 2.0 * self.lv / self.nv

    @property
    def deta(self) -> float:
        return 1.0 / (2.0 * self.lv)

    @property
    def n_modes(self) -> int:
        return 2 * self.kmax + 1

    def k_values(self) -> np.ndarray:
        """Retained integer modes per dimension, ordered -kmax..kmax."""
        return np.arange(-self.kmax, self.kmax + 1)

    def v_grid(self) -> np.ndarray:
        return -self.lv + self.dv * np.arange(self.nv)

    def eta_grid(self) -> np.ndarray:
        """Centered eta grid matching v_transform's output ordering."""
        return self.deta * (np.arange(self.nv) - self.nv // 2)

    def mode_tuples(self):
        """All retained k-lattice tuples (3-vectors; zeros off the retained axes)."""
        if self.dim_x == 1:
            return [(0, 0, int(k)) for k in self.k_values()]
        ks = self.k_values()
        return [(int(a), int(b), int(c)) for a in ks for b in ks for c in ks]


def make_geometry(dim_x: int, kmax: int, nv: int, lv: float) -> Geometry:
    if dim_x not in (1, 3):
        raise ValueError(f"dim_x must be 1 or 3, got {dim_x}")
    if kmax < 1:
        raise ValueError("kmax must be >= 1")
    if nv < 32 or (nv & (nv - 1)) != 0:
        raise ValueError(f"nv must be a power of two >= 32, got {nv}")
    if lv <= 0:
        raise ValueError("lv must be positive")
    return Geometry(dim_x=dim_x, kmax=kmax, nv=nv, lv=lv)


@dataclass
class SpectralDistribution:
    """f_hat(k, v) on the truncated k-lattice and the v grid.

    For dim_x == 1 the k axis is the z direction and data has shape
    (n_modes, nv); for dim_x == 3 the shape is (n_modes,)*3 + (nv,)*3.
    The k axes are ordered -kmax..kmax (index i <-> mode i - kmax).
    """

    geometry: Geometry
    data: np.ndarray
    time: float = 0.0

    def copy(self) -> "SpectralDistribution":
        return SpectralDistribution(self.geometry, self.data.copy(), self.time)

    def k_index(self, k) -> tuple:
        g = self.geometry
        if g.dim_x == 1:
            k3 = k[2] if np.ndim(k) else int(k)
            return (int(k3) + g.kmax,)
        return tuple(int(ki) + g.kmax for ki in k)

    def mode(self, k) -> np.ndarray:
        """View of f_hat(k, .) over the v grid."""
        return self.data[self.k_index(k)]

    def reality_defect(self) -> float:
        """max |f_hat(-k,v) - conj(f_hat(k,v))|; zero for real f."""
        g = self.geometry
        flipped = np.flip(self.data, axis=tuple(range(1 if g.dim_x == 1 else 3)))
        return float(np.max(np.abs(flipped - np.conj(self.data))))


def zero_distribution(geometry: Geometry) -> SpectralDistribution:
    g = geometry
    if g.dim_x == 1:
        shape = (g.n_modes, g.nv)
    else:
        shape = (g.n_modes,) * 3 + (g.nv,) * 3
    return SpectralDistribution(g, np.zeros(shape, dtype=complex), 0.0)


# ---------------------------------------------------------------------------
# velocity transforms


def _axis_transform(a: np.ndarray, axis: int, lv: float, inverse: bool) -> np.ndarray:
    """FFT along one v axis with the continuum 2*pi normalization.

    Forward maps samples on v_j = -lv + j*dv to f_hat(eta_m), eta_m =
    (m - nv/2)/(2*lv); the phase factors account for the -lv grid origin
    and the centered eta ordering.  Inverse is the exact round trip.
    """
    nv = a.shape[axis]
    dv = 2.0 * lv / nv
    m = np.arange(nv)
    # phase from the v-grid origin: exp(+2*pi*i*lv*eta_m) = exp(pi*i*(m - nv/2))
    origin = np.exp(1j * np.pi * (m - nv / 2.0))
    shape = [1] * a.ndim
    shape[axis] = nv
    origin = origin.reshape(shape)
    if not inverse:
        spec = np.fft.fftshift(np.fft.fft(a, axis=axis), axes=axis)
        return dv * origin * spec
    spec = np.fft.ifftshift(a / (dv * origin), axes=axis)
    return np.fft.ifft(spec, axis=axis)


def v_transform(dist: SpectralDistribution) -> np.ndarray:
    """f_hat(k, eta) from f_hat(k, v); eta axes are centered (eta_grid order)."""
    g = dist.geometry
    out = dist.data
    v_axes = range(1, 2) if g.dim_x == 1 else range(3, 6)
    for ax in v_axes:
        out = _axis_transform(out, ax, g.lv, inverse=False)
    return out


def v_inverse_transform(arr: np.ndarray, geometry: Geometry) -> np.ndarray:
    g = geometry
    out = arr
    v_axes = range(1, 2) if g.dim_x == 1 else range(3, 6)
    for ax in v_axes:
        out = _axis_transform(out, ax, g.lv, inverse=True)
    return out


def density(dist: SpectralDistribution) -> np.ndarray:
    """rho_hat(k): trapezoid sum of f_hat(k, v) over the periodic v grid."""
    g = dist.geometry
    v_axes = tuple(range(1, 2) if g.dim_x == 1 else range(3, 6))
    return dist.data.sum(axis=v_axes) * g.dv ** (1 if g.dim_x == 1 else 3)


def velocity_moment(dist: SpectralDistribution, weight: np.ndarray) -> np.ndarray:
    """int weight(v) f_hat(k,v) dv by the same trapezoid rule."""
    g = dist.geometry
    v_axes = tuple(range(1, 2) if g.dim_x == 1 else range(3, 6))
    return (dist.data * weight).sum(axis=v_axes) * g.dv ** (1 if g.dim_x == 1 else 3)


# ---------------------------------------------------------------------------
# equilibria


@dataclass(frozen=True)
class Equilibrium:
    """Normalized velocity profile with an analyticity certificate.

    kind is 'maxwellian' (isotropic, width v_thermal) or 'bi_maxwellian'
    (width v_thermal_perp in the plane, v_thermal in z; only meaningful for
    dim 3).  The certificate (c0, lambda0) witnesses
    |f0_hat(eta)| <= c0 * exp(-2*pi*lambda0*|eta|) on the eta grid.
    """

    kind: str
    v_thermal: float
    v_thermal_perp: float
    c0: float
    lambda0: float
    dim: int

    def values(self, geometry: Geometry) -> np.ndarray:
        v = geometry.v_grid()
        if self.dim == 1:
            return _gauss(v, self.v_thermal)
        v1, v2, v3 = np.meshgrid(v, v, v, indexing="ij", sparse=True)
        return _gauss(v1, self.v_thermal_perp) * _gauss(v2, self.v_thermal_perp) * _gauss(
            v3, self.v_thermal
        )

    def transform(self, eta) -> np.ndarray:
        """Closed-form f0_hat(eta); eta is scalar (dim 1) or a 3-tuple of arrays."""
        if self.dim == 1:
            return _gauss_hat(np.asarray(eta), self.v_thermal)
        e1, e2, e3 = eta
        return (
            _gauss_hat(np.asarray(e1), self.v_thermal_perp)
            * _gauss_hat(np.asarray(e2), self.v_thermal_perp)
            * _gauss_hat(np.asarray(e3), self.v_thermal)
        )

    def grad_cross_v_transform(self, eta):
        """Closed-form transform of grad(f0) x v, a 3-vector of arrays.

        For perpendicular width a and parallel width c this is
        4*pi^2*(a^2 - c^2) * (eta2*eta3, -eta1*eta3, 0) * f0_hat(eta);
        identically zero for the isotropic Maxwellian.
        """
        if self.dim == 1:
            raise ValueError("grad(f0) x v needs the 3-dimensional profile")
        e1, e2, e3 = (np.asarray(e) for e in eta)
        fhat = self.transform(eta)
        pref = 4.0 * np.pi**2 * (self.v_thermal_perp**2 - self.v_thermal**2)
        zero = np.zeros(np.broadcast(e1, e2, e3).shape)
        return (pref * e2 * e3 * fhat, -pref * e1 * e3 * fhat, zero)

    def z_marginal_mass(self, v_te: float) -> float:
        """Fraction of mass with |v3| <= v_te (resonant-particle proxy)."""
        from scipy.special import erf

        return float(erf(v_te / (np.sqrt(2.0) * self.v_thermal)))


def _gauss(v, vt):
    return np.exp(-(v**2) / (2.0 * vt**2)) / np.sqrt(2.0 * np.pi * vt**2)


def _gauss_hat(eta, vt):
    return np.exp(-2.0 * np.pi**2 * vt**2 * eta**2)


def maxwellian(
    geometry: Geometry, v_thermal: float, v_thermal_perp: float | None = None
) -> tuple[Equilibrium, np.ndarray]:
    """Normalized (bi-)Maxwellian on the grid of `geometry`.

    Raises BoundaryTruncationError when the profile exceeds 1e-12 at the
    box boundary (lv too small for v_thermal), since the periodicized
    transforms would then alias above test tolerances.
    """
    if v_thermal <= 0:
        raise ValueError("v_thermal must be positive")
    perp = v_thermal if v_thermal_perp is None else v_thermal_perp
    widest = max(v_thermal, perp)
    boundary = np.exp(-(geometry.lv**2) / (2.0 * widest**2)) / np.sqrt(
        2.0 * np.pi * widest**2
    )
    if boundary > 1e-12:
        raise BoundaryTruncationError(
            f"equilibrium tail {boundary:.3e} at |v| = lv = {geometry.lv} exceeds 1e-12; "
            "enlarge lv"
        )
    lam0 = v_thermal
    c0 = float(np.exp(lam0**2 / (2.0 * v_thermal**2)))
    dim = 1 if geometry.dim_x == 1 else 3
    kind = "maxwellian" if perp == v_thermal else "bi_maxwellian"
    eq = Equilibrium(
        kind=kind, v_thermal=v_thermal, v_thermal_perp=perp, c0=c0, lambda0=lam0, dim=dim
    )
    grid = eq.values(geometry)
    eta = geometry.eta_grid()
    cert = np.abs(eq.transform(eta if dim == 1 else (eta, 0.0 * eta, 0.0 * eta)))
    bound = c0 * np.exp(-2.0 * np.pi * lam0 * np.abs(eta))
    if np.any(cert > bound + 1e-14):
        raise ValueError("analyticity certificate violated on the eta grid")
    return eq, grid


def homogeneous_state(geometry: Geometry, eq: Equilibrium) -> SpectralDistribution:
    """Distribution with f = f0(v): all mass in the k = 0 mode."""
    dist = zero_distribution(geometry)
    zero_idx = dist.k_index((0, 0, 0))
    dist.data[zero_idx] = eq.values(geometry)
    return dist


def apply_cosine_pulse(dist: SpectralDistribution, mode: int, amplitude: float) -> None:
    """In place f <- f * (1 + amplitude*cos(2*pi*mode*x3)): k-lattice convolution.

    Content pushed past the mode cutoff is dropped (consistent with the
    truncated representation).  dim_x == 1 only.
    """
    g = dist.geometry
    if g.dim_x != 1:
        raise ValueError("cosine pulses are supported on the dim_x = 1 geometry")
    old = dist.data.copy()
    n = g.n_modes
    for i in range(n):
        lo, hi = i - mode, i + mode
        if 0 <= lo < n:
            dist.data[i] += 0.5 * amplitude * old[lo]
        if 0 <= hi < n:
            dist.data[i] += 0.5 * amplitude * old[hi]


# ---------------------------------------------------------------------------
# binary checkpoints
#
# Layout (little endian):
#   magic   4s   b"CYDK"
#   version u32
#   dim_x   u32
#   kmax    u32
#   nv      u32
#   lv      f64
#   time    f64
#   payload complex128 array, C order, shape (n_modes, nv) for dim_x = 1
#           and (n_modes,)*3 + (nv,)*3 for dim_x = 3


_HEADER = struct.Struct("<4sIIIIdd")


def save_checkpoint(dist: SpectralDistribution, path) -> None:
    g = dist.geometry
    header = _HEADER.pack(
        CHECKPOINT_MAGIC, CHECKPOINT_VERSION, g.dim_x, g.kmax, g.nv, g.lv, dist.time
    )
    payload = np.ascontiguousarray(dist.data, dtype="<c16").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def load_checkpoint(path) -> SpectralDistribution:
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, version, dim_x, kmax, nv, lv, time = _HEADER.unpack_from(raw, 0)
    if magic != CHECKPOINT_MAGIC:
        raise ValueError("not a cyclodamp checkpoint (bad magic)")
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    geometry = make_geometry(dim_x, kmax, nv, lv)
    if dim_x == 1:
        shape = (geometry.n_modes, nv)
    else:
        shape = (geometry.n_modes,) * 3 + (nv,) * 3
    payload = np.frombuffer(raw, dtype="<c16", offset=_HEADER.size).copy()
    if payload.size != int(np.prod(shape)):
        raise ValueError("checkpoint payload size does not match its header")
    return SpectralDistribution(geometry, payload.reshape(shape), time)
