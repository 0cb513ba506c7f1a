"""Exact charged-particle motion in a uniform magnetic field B0*z.

With q = m = 1 the gyrofrequency is Omega = B0 and the free motion
separates into a rigid rotation of the perpendicular velocity and a drift
of the position,

    v(t) = R(Omega*(t-tau)) v(tau),      x(t) = x(tau) + M(t-tau) v(tau),

where R is the in-plane rotation fixing z and M = int_0^dt R(Omega*s) ds.
Everything here is written through the two scalar profiles

    g(dt) = sin(Omega*dt)/Omega,         h(dt) = (1 - cos(Omega*dt))/Omega,

which stay finite and smooth through Omega -> 0 (the Landau limit), where
g -> dt and h -> 0 so the flow degenerates to straight-line streaming.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Below this |Omega*dt| the trig quotients switch to their Taylor series;
# keeps g, h, and the rotated frequencies continuous at Omega = 0.
_SERIES_THRESHOLD = 1e-4


@dataclass(frozen=True)
class Kinematics:
    """Background-field bundle; omega == b0 under the q = m = 1 convention."""

    omega: float

    @property
    def b0(self) -> float:
        return self.omega

    def __post_init__(self):
        if self.omega < 0:
            raise ValueError("omega must be >= 0 (orientation is fixed by the z axis)")


@dataclass(frozen=True)
class PhasePoint:
    """Point of T^3 x R^3; x is stored reduced mod 1 componentwise."""

    x: np.ndarray
    v: np.ndarray

    @staticmethod
    def of(x, v) -> "PhasePoint":
        x = np.mod(np.asarray(x, dtype=float), 1.0)
        v = np.asarray(v, dtype=float)
        if x.shape != (3,) or v.shape != (3,):
            raise ValueError("phase points are 3-dimensional")
        return PhasePoint(x=x, v=v)


@dataclass(frozen=True)
class RotatedFrequency:
    eta_k1: float
    eta_k2: float
    nu_k: float


def sin_over_omega(dt, omega):
    """g(dt) = sin(Omega*dt)/Omega, with series branch near Omega*dt = 0."""
    dt = np.asarray(dt, dtype=float)
    theta = omega * dt
    small = np.abs(theta) < _SERIES_THRESHOLD
    theta_sq = theta * theta
    series = dt * (1.0 - theta_sq / 6.0 + theta_sq * theta_sq / 120.0)
    if omega == 0.0:
        return series if series.shape else float(series)
    exact = np.sin(theta) / omega
    out = np.where(small, series, exact)
    return out if out.shape else float(out)


def one_minus_cos_over_omega(dt, omega):
    """h(dt) = (1 - cos(Omega*dt))/Omega, with series branch near zero."""
    dt = np.asarray(dt, dtype=float)
    theta = omega * dt
    small = np.abs(theta) < _SERIES_THRESHOLD
    theta_sq = theta * theta
    series = dt * theta * 0.5 * (1.0 - theta_sq / 12.0 + theta_sq * theta_sq / 360.0)
    if omega == 0.0:
        return series if series.shape else float(series)
    exact = (1.0 - np.cos(theta)) / omega
    out = np.where(small, series, exact)
    return out if out.shape else float(out)


def rotation_matrix(dt: float, kin: Kinematics) -> np.ndarray:
    """R(Omega*dt): orthogonal, det 1, fixes z; R(pi/2) maps x-hat to y-hat."""
    theta = kin.omega * dt
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def drift_matrix(dt: float, kin: Kinematics) -> np.ndarray:
    """M(dt) = int_0^dt R(Omega*s) ds; at Omega = 0 this is dt * Identity."""
    g = sin_over_omega(dt, kin.omega)
    h = one_minus_cos_over_omega(dt, kin.omega)
    return np.array([[g, -h, 0.0], [h, g, 0.0], [0.0, 0.0, dt]])


def exact_flow(t: float, tau: float, p: PhasePoint, kin: Kinematics) -> PhasePoint:
    """Exact solution of the free motion with data p at time tau, at time t."""
    dt = t - tau
    v_new = rotation_matrix(dt, kin) @ p.v
    x_new = p.x + drift_matrix(dt, kin) @ p.v
    return PhasePoint.of(x_new, v_new)


def shift_s0(t: float, tau: float, p: PhasePoint, kin: Kinematics) -> PhasePoint:
    """Diagonal free-transport shift: position moves by g in the plane, dt in z.

    The plane shift is written as g(t) - g(tau) rather than g(t - tau); both
    agree when tau = 0 (the form the time-shifted norms use) but only the
    two-time form composes as a two-parameter group, which is the property
    the shift has to carry.
    """
    gp = sin_over_omega(t, kin.omega) - sin_over_omega(tau, kin.omega)
    dz = t - tau
    x_new = p.x + np.array([p.v[0] * gp, p.v[1] * gp, p.v[2] * dz])
    return PhasePoint.of(x_new, p.v)


def rotated_frequencies(k, t: float, kin: Kinematics) -> RotatedFrequency:
    """Rotated frequencies eta_k1, eta_k2 and the weight nu_k for mode k.

    eta_k1 = (k2*(1 - cos Omega t) - k1*sin Omega t)/Omega
    eta_k2 = (-k1*(1 - cos Omega t) - k2*sin Omega t)/Omega
    nu_k   = |eta_k1| + |eta_k2| + |k3|*t

    In the Landau limit eta_k1 -> -k1*t and eta_k2 -> -k2*t.
    """
    k = np.asarray(k)
    g = sin_over_omega(t, kin.omega)
    h = one_minus_cos_over_omega(t, kin.omega)
    eta1 = k[1] * h - k[0] * g
    eta2 = -k[0] * h - k[1] * g
    nu = abs(eta1) + abs(eta2) + abs(k[2]) * abs(t)
    return RotatedFrequency(eta_k1=float(eta1), eta_k2=float(eta2), nu_k=float(nu))


def rotated_frequency_arrays(k, t_grid, kin: Kinematics):
    """Vectorized (eta_k1, eta_k2, k3*t) over a time grid, as three arrays."""
    k = np.asarray(k)
    t_grid = np.asarray(t_grid, dtype=float)
    g = sin_over_omega(t_grid, kin.omega)
    h = one_minus_cos_over_omega(t_grid, kin.omega)
    eta1 = k[1] * h - k[0] * g
    eta2 = -k[0] * h - k[1] * g
    eta3 = k[2] * t_grid
    return eta1, eta2, eta3
