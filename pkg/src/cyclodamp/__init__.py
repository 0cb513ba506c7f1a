"""cyclodamp: spectral simulation and analysis of magnetized collisionless plasmas.

The package covers the exact free transport of charged particles in a uniform
magnetic field B0*z, the linearized density dynamics as a per-mode Volterra
equation with a closed-form kernel, a quantitative stability margin, a
nonlinear Vlasov solver built on splitting with the exact magnetized flow,
two-pulse plasma-echo experiments, hybrid analytic norm evaluation, and the
echo-kernel moment / growth-control machinery.

Conventions used throughout:

* positions live on the unit torus, x in [0,1)^d, with Fourier phases
  exp(-2*pi*i*k.x) for integer k;
* velocities live on a large periodic box [-lv, lv)^d with the matching
  2*pi transform convention, f_hat(eta) = int exp(-2*pi*i*v.eta) f dv;
* charge and mass are 1, so the gyrofrequency equals the field: Omega = B0.
"""

from cyclodamp.kinematics import (
    Kinematics,
    PhasePoint,
    RotatedFrequency,
    drift_matrix,
    exact_flow,
    rotated_frequencies,
    rotation_matrix,
    shift_s0,
)
from cyclodamp.phase_space import Geometry, SpectralDistribution, make_geometry, maxwellian

__version__ = "0.1.0"

__all__ = [
    "Kinematics",
    "PhasePoint",
    "RotatedFrequency",
    "Geometry",
    "SpectralDistribution",
    "drift_matrix",
    "exact_flow",
    "make_geometry",
    "maxwellian",
    "rotated_frequencies",
    "rotation_matrix",
    "shift_s0",
    "__version__",
]
