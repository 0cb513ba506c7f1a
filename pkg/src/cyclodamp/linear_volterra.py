"""Linearized density dynamics: per-mode Volterra equation and stability margin.

For each spatial mode k the linearized density obeys the convolution
identity

    rho_hat(t,k) = A_hat(t,k) + int_0^t K0_hat(t-s, k) rho_hat(s,k) ds.

The source is the free-streamed initial perturbation evaluated at the
rotated frequencies,

    A_hat(t,k) = f0_pert_hat(k, eta_k1(t), eta_k2(t), k3*t),

and the kernel collects the electric and magnetic feedback of the
equilibrium, with xi(s) = (eta_k1(s), eta_k2(s), k3*s):

    K0_hat(s,k) = -2*pi*i (W_hat(k) . xi(s)) f0_hat(xi(s))
                  -2*pi*i (k x W_hat(k)) . int_0^s C_hat(xi(u)) du,

where C_hat is the transform of grad(f0) x v.  The magnetic part carries
the inner time integral (regular at omega = 0, where the frequency-domain
form has a 1/omega factor) and vanishes identically for isotropic
equilibria.  In the z-only reduction with the gradient-type potential the
kernel reduces to the classical electrostatic one,
-4*pi^2*W_s(k) f0_hat(kt) |k|^2 t.

The stability margin is the measured distance of the kernel's
Fourier-Laplace transform from the critical value 1: with a small
regularization sigma,

    margin = 1 - sup_omega | int_0^inf exp(2*pi*i*omega*t - sigma*t)
                              K0_hat(t,k) dt |,

a quantitative stand-in for the resonance condition that resonant
particles sit far out in the tail.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline, RegularGridInterpolator

from cyclodamp.fields import InteractionPotential
from cyclodamp.kinematics import Kinematics, rotated_frequency_arrays
from cyclodamp.phase_space import Equilibrium


class EtaRangeError(ValueError):
    """Requested eta lies outside the tabulated grid; enlarge lv."""


class NearSingularStepError(ArithmeticError):
    """Trapezoid update factor |1 - (dt/2) K(0)| below 1e-8; reduce dt."""


@dataclass(frozen=True)
class GaussianEtaProfile:
    """Closed-form perturbation transform amp * exp(-2 pi^2 sigma_v^2 |eta|^2).

    This is the transform of a normalized Gaussian velocity profile of
    width sigma_v scaled by amp.
    """

    amplitude: float
    sigma_v: float

    def eval(self, e1, e2, e3):
        mag2 = np.asarray(e1) ** 2 + np.asarray(e2) ** 2 + np.asarray(e3) ** 2
        return self.amplitude * np.exp(-2.0 * np.pi**2 * self.sigma_v**2 * mag2)


@dataclass
class GriddedEtaProfile:
    """Perturbation transform tabulated on the eta grid, cubic interpolation.

    1-d tables interpolate in eta3 only (perpendicular arguments must be
    zero); 3-d tables use a regular-grid cubic.  Points within two cells of
    the table edge fall back to linear interpolation (monotone near the
    boundary); points outside the table raise EtaRangeError.
    """

    eta_grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.values.ndim == 1:
            self._cubic = CubicSpline(self.eta_grid, self.values)
            self._dim = 1
        elif self.values.ndim == 3:
            pts = (self.eta_grid,) * 3
            self._cubic = RegularGridInterpolator(pts, self.values, method="cubic")
            self._linear = RegularGridInterpolator(pts, self.values, method="linear")
            self._dim = 3
        else:
            raise ValueError("eta table must be 1- or 3-dimensional")

    def eval(self, e1, e2, e3):
        e1, e2, e3 = np.broadcast_arrays(
            np.asarray(e1, float), np.asarray(e2, float), np.asarray(e3, float)
        )
        lo, hi = self.eta_grid[0], self.eta_grid[-1]
        edge = 2 * (self.eta_grid[1] - self.eta_grid[0])
        if self._dim == 1:
            if np.any(e1 != 0) or np.any(e2 != 0):
                raise ValueError("1-d eta table cannot evaluate perpendicular arguments")
            if np.any(e3 < lo) or np.any(e3 > hi):
                raise EtaRangeError("eta3 outside the tabulated grid; enlarge lv")
            out = self._cubic(e3)
            near = (e3 < lo + edge) | (e3 > hi - edge)
            if np.any(near):
                out = np.where(near, np.interp(e3, self.eta_grid, self.values), out)
            return out
        pts = np.stack([e1.ravel(), e2.ravel(), e3.ravel()], axis=-1)
        if np.any(pts < lo) or np.any(pts > hi):
            raise EtaRangeError("eta outside the tabulated grid; enlarge lv")
        out = self._cubic(pts)
        near = np.any((pts < lo + edge) | (pts > hi - edge), axis=-1)
        if np.any(near):
            out = np.where(near, self._linear(pts), out)
        return out.reshape(e1.shape)


@dataclass
class VolterraSystem:
    k: tuple
    t_grid: np.ndarray
    a_of_t: np.ndarray
    kernel_of_t: np.ndarray
    rho_of_t: np.ndarray | None = None

    def __post_init__(self):
        if not (len(self.t_grid) == len(self.a_of_t) == len(self.kernel_of_t)):
            raise ValueError("t_grid, a_of_t, kernel_of_t must share a length")


@dataclass(frozen=True)
class StabilityReport:
    kappa_margin: float
    v_te: float
    resonant_mass: float
    kappa_min: float
    sup_omega: float

    @property
    def stable(self) -> bool:
        return self.kappa_margin >= self.kappa_min


@dataclass(frozen=True)
class DecayFit:
    rate: float
    r_squared: float
    non_exponential: bool
    n_points: int


def source_a(profile, k, t_grid, kin: Kinematics) -> np.ndarray:
    """A_hat(t,k): the perturbation transform at the rotated frequencies."""
    e1, e2, e3 = rotated_frequency_arrays(k, t_grid, kin)
    return np.asarray(profile.eval(e1, e2, e3), dtype=complex)


def kernel_k0(
    eq: Equilibrium,
    w: InteractionPotential,
    k,
    t_grid,
    kin: Kinematics,
    subdivisions: int = 4,
) -> np.ndarray:
    """Closed-form Volterra kernel K0_hat(t,k) on t_grid.

    The magnetic part integrates the grad(f0) x v transform along the
    rotated-frequency path on a grid refined by `subdivisions`, then
    samples the cumulative trapezoid back on t_grid.
    """
    k = np.asarray(k, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    wk = w.symbol(k)
    if not np.any(wk):
        return np.zeros(len(t_grid), dtype=complex)

    e1, e2, e3 = rotated_frequency_arrays(k, t_grid, kin)
    if eq.dim == 1:
        if abs(wk[0]) or abs(wk[1]):
            raise ValueError("1-d equilibrium supports only the gradient_z potential")
        f0hat = eq.transform(e3)
        dot = wk[2] * e3
    else:
        f0hat = eq.transform((e1, e2, e3))
        dot = wk[0] * e1 + wk[1] * e2 + wk[2] * e3
    kernel = -2j * np.pi * dot * f0hat

    kxw = np.cross(k, wk)
    if np.any(kxw) and eq.dim == 3:
        # inner time integral on a refined grid, cumulative trapezoid
        n_fine = (len(t_grid) - 1) * subdivisions + 1
        t_fine = np.linspace(t_grid[0], t_grid[-1], n_fine)
        f1, f2, f3 = rotated_frequency_arrays(k, t_fine, kin)
        c1, c2, c3 = eq.grad_cross_v_transform((f1, f2, f3))
        integrand = kxw[0] * c1 + kxw[1] * c2 + kxw[2] * c3
        df = np.diff(t_fine)
        cum = np.concatenate(
            [[0.0], np.cumsum(0.5 * df * (integrand[1:] + integrand[:-1]))]
        )
        kernel = kernel - 2j * np.pi * cum[::subdivisions]
    return kernel


def volterra_march(system: VolterraSystem) -> np.ndarray:
    """Trapezoid product-integration march; second order in dt.

    Solves rho(t_n) = A(t_n) + dt * sum''_j K(t_n - t_j) rho(t_j) where
    sum'' halves the endpoint weights; the implicit endpoint term is
    divided out, guarded against a near-singular update factor.
    """
    t = system.t_grid
    a = np.asarray(system.a_of_t, dtype=complex)
    kern = np.asarray(system.kernel_of_t, dtype=complex)
    n = len(t)
    if n < 2:
        system.rho_of_t = a.copy()
        return system.rho_of_t
    dt = t[1] - t[0]
    if not np.allclose(np.diff(t), dt, rtol=1e-10, atol=1e-14):
        raise ValueError("volterra_march requires a uniform time grid")
    denom = 1.0 - 0.5 * dt * kern[0]
    if abs(denom) < 1e-8:
        raise NearSingularStepError(
            f"|1 - (dt/2) K(0)| = {abs(denom):.3e} < 1e-8; reduce dt"
        )
    rho = np.empty(n, dtype=complex)
    rho[0] = a[0]
    for i in range(1, n):
        acc = 0.5 * kern[i] * rho[0]
        if i > 1:
            acc += np.dot(kern[1:i][::-1], rho[1:i])
        rho[i] = (a[i] + dt * acc) / denom
    system.rho_of_t = rho
    return rho


def stability_margin(
    eq: Equilibrium,
    w: InteractionPotential,
    k,
    kin: Kinematics,
    omega_grid: np.ndarray | None = None,
    v_te: float | None = None,
    kappa_min: float = 0.05,
    sigma_reg: float | None = None,
    horizon: float | None = None,
    n_t: int = 4096,
) -> StabilityReport:
    """Measured sup over omega of |K0_tilde(omega, k)| and the margin to 1.

    A configuration with margin <= 0 is reported unstable, not raised.
    """
    k = np.asarray(k, dtype=float)
    k3 = abs(k[2])
    vt = eq.v_thermal
    if sigma_reg is None:
        sigma_reg = 1e-3 * max(k3, 0.1) * vt
    if horizon is None:
        # kernel decays through f0_hat(k3 t); fall back to the regularization
        # scale when k3 = 0 (perpendicular modes, experimental branch)
        horizon = 8.0 / (k3 * vt) if k3 > 0 else 8.0 / sigma_reg
        horizon = min(horizon, 4000.0)
    if omega_grid is None:
        omega_max = 5.0 * max(5.0 * k3 * vt, kin.omega, 1.0)
        omega_grid = np.linspace(-omega_max, omega_max, 2001)

    t = np.linspace(0.0, horizon, n_t)
    kern = kernel_k0(eq, w, k, t, kin)
    damp = np.exp(-sigma_reg * t)
    sup = 0.0
    omega_at_sup = 0.0
    chunk = 256
    for i0 in range(0, len(omega_grid), chunk):
        om = omega_grid[i0 : i0 + chunk]
        phases = np.exp(2j * np.pi * np.outer(om, t))
        vals = np.trapezoid(phases * (kern * damp)[None, :], t, axis=1)
        mags = np.abs(vals)
        j = int(np.argmax(mags))
        if mags[j] > sup:
            sup = float(mags[j])
            omega_at_sup = float(om[j])
    if v_te is None:
        v_te = abs(omega_at_sup) / k3 if k3 > 0 else 0.0
    return StabilityReport(
        kappa_margin=1.0 - sup,
        v_te=v_te,
        resonant_mass=eq.z_marginal_mass(v_te),
        kappa_min=kappa_min,
        sup_omega=sup,
    )


class WindowTooShortError(ValueError):
    """Fewer than 8 envelope points in the fit window."""


def fit_decay_rate(t_grid, rho_of_t, t_window: tuple[float, float]) -> DecayFit:
    """Least-squares decay rate of the |rho| envelope inside t_window.

    The envelope is the set of local maxima of |rho| (running peaks over
    an oscillation period); for non-oscillatory signals every sample
    participates.  The non_exponential flag marks a rate that grows by
    more than 25% between the window's halves (Gaussian-type decay).
    """
    t_grid = np.asarray(t_grid, dtype=float)
    mags = np.abs(np.asarray(rho_of_t))
    sel = (t_grid >= t_window[0]) & (t_grid <= t_window[1]) & (mags > 0)
    t = t_grid[sel]
    y = mags[sel]
    if len(t) < 8:
        raise WindowTooShortError(f"only {len(t)} usable points in window {t_window}")
    interior = (y[1:-1] >= y[:-2]) & (y[1:-1] >= y[2:])
    peak_idx = np.flatnonzero(interior) + 1
    if len(peak_idx) >= 8:
        te, ye = t[peak_idx], y[peak_idx]
    else:
        # too few oscillations to form an envelope: fit the samples directly
        te, ye = t, y
    logy = np.log(ye)
    slope, intercept = np.polyfit(te, logy, 1)
    pred = slope * te + intercept
    ss_res = float(np.sum((logy - pred) ** 2))
    ss_tot = float(np.sum((logy - np.mean(logy)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0

    mid = 0.5 * (te[0] + te[-1])
    first = te <= mid
    second = ~first
    non_exp = False
    if np.count_nonzero(first) >= 4 and np.count_nonzero(second) >= 4:
        r1 = -np.polyfit(te[first], logy[first], 1)[0]
        r2_half = -np.polyfit(te[second], logy[second], 1)[0]
        if r1 > 0 and r2_half > 1.25 * r1:
            non_exp = True
    return DecayFit(rate=-slope, r_squared=r2, non_exponential=non_exp, n_points=len(te))


@dataclass
class LinearModeRun:
    """Solved linear trajectory of one mode with its field diagnostics."""

    system: VolterraSystem
    e_hat: np.ndarray  # (n_t, 3)
    b_hat: np.ndarray  # (n_t, 3)


def running_envelope(t_grid, rho_of_t) -> np.ndarray:
    """|rho| envelope: running max over one oscillation period.

    The period is taken from the mean spacing of local maxima of |rho|;
    signals with fewer than three interior peaks are already their own
    envelope.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    mags = np.abs(np.asarray(rho_of_t))
    if len(mags) < 3:
        return mags.copy()
    interior = (mags[1:-1] >= mags[:-2]) & (mags[1:-1] >= mags[2:])
    peaks = np.flatnonzero(interior) + 1
    if len(peaks) < 3:
        return mags.copy()
    period = float(np.mean(np.diff(t_grid[peaks])))
    half = max(1, int(round(0.5 * period / max(t_grid[1] - t_grid[0], 1e-300))))
    out = np.empty_like(mags)
    for i in range(len(mags)):
        lo = max(0, i - half)
        hi = min(len(mags), i + half + 1)
        out[i] = np.max(mags[lo:hi])
    return out


def run_linear_mode(
    eq: Equilibrium,
    w: InteractionPotential,
    profile,
    k,
    t_grid,
    kin: Kinematics,
    disable_b_terms: bool = False,
) -> LinearModeRun:
    """Solve one mode end to end: source, kernel, march, field traces."""
    k = np.asarray(k, dtype=float)
    a = source_a(profile, k, t_grid, kin)
    if disable_b_terms:
        kern = _e_only_kernel(eq, w, k, t_grid, kin)
    else:
        kern = kernel_k0(eq, w, k, t_grid, kin)
    system = VolterraSystem(k=tuple(int(x) for x in k), t_grid=np.asarray(t_grid, float),
                            a_of_t=a, kernel_of_t=kern)
    rho = volterra_march(system)
    wk = w.symbol(k)
    e_hat = np.outer(rho, wk)
    curl = 2j * np.pi * np.cross(np.broadcast_to(k, (len(rho), 3)), e_hat)
    t = np.asarray(t_grid, float)
    b_hat = np.zeros_like(e_hat)
    if len(t) > 1:
        df = np.diff(t)[:, None]
        b_hat[1:] = np.cumsum(0.5 * df * (curl[1:] + curl[:-1]), axis=0)
    return LinearModeRun(system=system, e_hat=e_hat, b_hat=b_hat)


def _e_only_kernel(eq, w, k, t_grid, kin):
    e1, e2, e3 = rotated_frequency_arrays(k, t_grid, kin)
    wk = w.symbol(np.asarray(k, float))
    if eq.dim == 1:
        return -2j * np.pi * wk[2] * e3 * eq.transform(e3)
    dot = wk[0] * e1 + wk[1] * e2 + wk[2] * e3
    return -2j * np.pi * dot * eq.transform((e1, e2, e3))