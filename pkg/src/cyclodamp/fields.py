"""Interaction potential W, electric field E = W * rho, and Faraday's law.

The interaction is a convolution with a fixed vector kernel W(x) whose
Fourier symbol is bounded by 1/(1 + |k|^gamma).  Two families are exposed:

* ``perpendicular`` -- the 3-d form (W1, W2, 0), odd in x3; default symbol
  W1_hat(k) = i * amp * sign(k3) / (1 + |k|^gamma), W2_hat = 0.
* ``gradient_z``   -- the 1-d reduction along z, W3_hat(k) =
  -i * amp * sign(k3) / (1 + |k3|^gamma).  This is the gradient of the even
  scalar potential W_s(k) = amp / (2*pi*|k3| * (1 + |k3|^gamma)), so the
  induced per-mode kernel reproduces the classical electrostatic one.

The magnetic perturbation obeys d/dt B_hat(t,k) = 2*pi*i * k x E_hat(t,k)
(the 2*pi is demanded by the exp(-2*pi*i*k.x) convention) with B_hat(0) = 0,
so k.B_hat = 0 holds identically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from cyclodamp.kinematics import Kinematics
from cyclodamp.phase_space import Geometry, SpectralDistribution, v_inverse_transform, v_transform


@dataclass(frozen=True)
class InteractionPotential:
    """Fourier rule for the convolution kernel W.

    kind: 'perpendicular' (3-d, W3 = 0, odd in x3) or 'gradient_z' (1-d).
    amplitude must lie in (0, 1] so |W_hat(k)| <= 1/(1+|k|^gamma) holds.
    """

    gamma: float
    amplitude: float = 1.0
    kind: str = "perpendicular"

    def __post_init__(self):
        if self.gamma <= 1:
            raise ValueError("gamma must exceed 1")
        if not 0 <= self.amplitude <= 1:
            raise ValueError("amplitude must lie in [0, 1]")
        if self.kind not in ("perpendicular", "gradient_z"):
            raise ValueError(f"unknown potential kind {self.kind!r}")

    def symbol(self, k) -> np.ndarray:
        """W_hat(k) as a complex 3-vector; k is an integer 3-vector."""
        k = np.asarray(k, dtype=float)
        mag = np.linalg.norm(k)
        if mag == 0.0:
            return np.zeros(3, dtype=complex)
        envelope = self.amplitude / (1.0 + mag**self.gamma)
        out = np.zeros(3, dtype=complex)
        if self.kind == "perpendicular":
            out[0] = 1j * np.sign(k[2]) * envelope
        else:
            out[2] = -1j * np.sign(k[2]) * envelope
        return out

    def scalar_symbol_z(self, k3: int) -> float:
        """Even scalar potential generating the gradient_z rule on z modes."""
        if self.kind != "gradient_z":
            raise ValueError("scalar symbol only defined for the gradient_z kind")
        if k3 == 0:
            return 0.0
        return self.amplitude / (2.0 * np.pi * abs(k3) * (1.0 + abs(k3) ** self.gamma))

    def check_bound(self, kmax: int) -> None:
        """Verify |W_hat(k)| <= 1/(1+|k|^gamma) on the truncated lattice."""
        rng = range(-kmax, kmax + 1)
        for a in rng:
            for b in rng:
                for c in rng:
                    k = np.array([a, b, c], dtype=float)
                    mag = np.linalg.norm(k)
                    if mag == 0:
                        continue
                    if np.linalg.norm(self.symbol(k)) > 1.0 / (1.0 + mag**self.gamma) + 1e-15:
                        raise ValueError(f"potential bound violated at k = {k}")

    def parity_defect(self, kmax: int) -> float:
        """max |W_hat(k1,k2,k3) + W_hat(k1,k2,-k3)| (odd-in-x3 check)."""
        worst = 0.0
        rng = range(-kmax, kmax + 1)
        for a in rng:
            for b in rng:
                for c in rng:
                    d = self.symbol((a, b, c)) + self.symbol((a, b, -c))
                    worst = max(worst, float(np.max(np.abs(d))))
        return worst


@dataclass
class FieldState:
    """E and B modes on the truncated lattice; B starts from zero."""

    geometry: Geometry
    e_hat: np.ndarray
    b_hat: np.ndarray
    time: float = 0.0
    _prev_curl: np.ndarray | None = field(default=None, repr=False)

    @staticmethod
    def zeros(geometry: Geometry) -> "FieldState":
        if geometry.dim_x == 1:
            shape = (geometry.n_modes, 3)
        else:
            shape = (geometry.n_modes,) * 3 + (3,)
        return FieldState(
            geometry, np.zeros(shape, dtype=complex), np.zeros(shape, dtype=complex), 0.0
        )

    def divergence_defect(self) -> float:
        """max over k of |k . B_hat(k)|."""
        worst = 0.0
        for k, idx in _lattice(self.geometry):
            worst = max(worst, abs(np.dot(k, self.b_hat[idx])))
        return worst


def _lattice(geometry: Geometry):
    if geometry.dim_x == 1:
        for i, k3 in enumerate(geometry.k_values()):
            yield np.array([0, 0, k3], dtype=float), (i,)
    else:
        ks = geometry.k_values()
        for i, a in enumerate(ks):
            for j, b in enumerate(ks):
                for l, c in enumerate(ks):
                    yield np.array([a, b, c], dtype=float), (i, j, l)


def electric_field(rho_hat: np.ndarray, w: InteractionPotential, geometry: Geometry) -> np.ndarray:
    """E_hat(k) = W_hat(k) * rho_hat(k) componentwise (convolution theorem)."""
    if geometry.dim_x == 1:
        out = np.zeros((geometry.n_modes, 3), dtype=complex)
    else:
        out = np.zeros((geometry.n_modes,) * 3 + (3,), dtype=complex)
    for k, idx in _lattice(geometry):
        out[idx] = w.symbol(k) * rho_hat[idx]
    return out


def advance_b(state: FieldState, e_hat_new: np.ndarray, dt: float) -> None:
    """Trapezoid update of d/dt B_hat = 2*pi*i k x E_hat, in place.

    The first call after construction seeds the one-sided history; callers
    advance E and B on the same step grid.
    """
    g = state.geometry
    curl = np.zeros_like(e_hat_new)
    for k, idx in _lattice(g):
        curl[idx] = 2j * np.pi * np.cross(k, e_hat_new[idx])
    if state._prev_curl is None:
        state._prev_curl = curl
        state.e_hat = e_hat_new
        return
    state.b_hat = state.b_hat + 0.5 * dt * (state._prev_curl + curl)
    state._prev_curl = curl
    state.e_hat = e_hat_new
    state.time += dt


def field_energies(state: FieldState) -> tuple[float, float]:
    """(sum |E_hat|^2, sum |B_hat|^2) over the lattice."""
    return (
        float(np.sum(np.abs(state.e_hat) ** 2)),
        float(np.sum(np.abs(state.b_hat) ** 2)),
    )


def lorentz_term(
    dist: SpectralDistribution,
    state: FieldState,
    kin: Kinematics,
    include_background: bool = True,
) -> np.ndarray:
    """(E + v x (B0 z + B)) . grad_v f on the (k, v) grid.

    The velocity gradient is spectral in eta.  The background rotation term
    uses the generator of the kinematics rotation, Omega*(z x v).grad_v, so
    one exponential step of this term reproduces exact_flow's velocity
    rotation.  Intended for dim_x = 3 diagnostics and force assembly; the
    dim_x = 1 reduction has only the z force, handled inline by the solver.
    """
    g = dist.geometry
    if g.dim_x != 3:
        raise ValueError("lorentz_term is defined on the dim_x = 3 geometry")
    v = g.v_grid()
    v1 = v[:, None, None]
    v2 = v[None, :, None]
    v3 = v[None, None, :]
    eta = g.eta_grid()
    grad_mult = [
        2j * np.pi * eta[:, None, None],
        2j * np.pi * eta[None, :, None],
        2j * np.pi * eta[None, None, :],
    ]

    spec = v_transform(dist)
    grad = [
        v_inverse_transform(spec * grad_mult[c][None, None, None, ...], g) for c in range(3)
    ]

    out = np.zeros_like(dist.data)
    if include_background and kin.omega != 0.0:
        # Omega*(z x v).grad_v f = Omega*(-v2 d1 + v1 d2) f, mode-diagonal.
        out += kin.omega * (-v2 * grad[0] + v1 * grad[1])

    # (E(x) + v x B(x)).grad_v f couples modes: k-lattice convolution, with
    # out-of-range sums dropped (truncated representation).
    n = g.n_modes
    kmax = g.kmax
    for kf, idxf in _lattice(g):
        e = state.e_hat[idxf]
        b = state.b_hat[idxf]
        if np.all(e == 0) and np.all(b == 0):
            continue
        force = [
            e[0] + v2 * b[2] - v3 * b[1],
            e[1] + v3 * b[0] - v1 * b[2],
            e[2] + v1 * b[1] - v2 * b[0],
        ]
        fi = tuple(int(x) for x in kf)
        for idx_out in np.ndindex(n, n, n):
            src = (
                idx_out[0] - fi[0] - kmax,
                idx_out[1] - fi[1] - kmax,
                idx_out[2] - fi[2] - kmax,
            )
            if any(s < -kmax or s > kmax for s in src):
                continue
            idx_src = tuple(s + kmax for s in src)
            for c in range(3):
                out[idx_out] += force[c] * grad[c][idx_src]
    return out
