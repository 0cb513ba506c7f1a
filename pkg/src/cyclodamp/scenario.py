"""Scenario configuration: validated, normalized, hashable.

Scenarios are JSON documents with nested blocks.  Unknown keys anywhere are
hard errors (silent default substitution is the classic simulation-config
failure mode), every block is validated against its module's preconditions
before any compute starts, and the normalized dump is canonical: loading a
dump of a load is the identity, and the scenario hash is the sha256 of the
canonical dump.
"""

from __future__ import annotations

import hashlib
import json
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GeometryBlock(_Block):
    dim_x: Literal[1, 3] = 1
    kmax: int = Field(default=8, ge=1)
    nv: int = Field(default=128, ge=32)
    lv: float = Field(default=8.0, gt=0)

    @model_validator(mode="after")
    def _power_of_two(self):
        if self.nv & (self.nv - 1):
            raise ValueError(f"nv must be a power of two, got {self.nv}")
        return self


class KinematicsBlock(_Block):
    b0: float = Field(default=0.0, ge=0)


class PotentialBlock(_Block):
    gamma: float = Field(default=2.0, gt=1)
    amplitude: float = Field(default=1.0, ge=0, le=1)
    kind: Literal["perpendicular", "gradient_z"] = "gradient_z"


class EquilibriumBlock(_Block):
    kind: Literal["maxwellian", "bi_maxwellian"] = "maxwellian"
    v_thermal: float = Field(default=1.0, gt=0)
    v_thermal_perp: Optional[float] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _perp_requires_bi(self):
        if self.kind == "bi_maxwellian" and self.v_thermal_perp is None:
            raise ValueError("bi_maxwellian needs v_thermal_perp")
        if self.kind == "maxwellian" and self.v_thermal_perp is not None:
            raise ValueError("maxwellian takes no v_thermal_perp")
        return self


class VProfileBlock(_Block):
    kind: Literal["gaussian"] = "gaussian"
    width: float = Field(default=1.0, gt=0)


class PerturbationBlock(_Block):
    mode: tuple[int, int, int]
    amplitude: float = Field(gt=0)
    v_profile: VProfileBlock = VProfileBlock()


class SolverBlock(_Block):
    dt: float = Field(default=2e-3, gt=0)
    t_end: float = Field(default=2.0, gt=0)
    splitting: Literal["strang"] = "strang"
    dealias: bool = True
    track_deflection: bool = False
    checkpoint_every: int = Field(default=0, ge=0)


class LinearBlock(_Block):
    modes: list[tuple[int, int, int]] = Field(default_factory=lambda: [(0, 0, 1)])
    dt: float = Field(default=5e-3, gt=0)
    t_end: float = Field(default=4.0, gt=0)
    disable_b_terms: bool = False
    fit_window_start_factor: float = Field(default=2.0, gt=0)


class StabilityBlock(_Block):
    mode: tuple[int, int, int] = (0, 0, 1)
    kappa_min: float = Field(default=0.05, gt=0, lt=1)
    v_te: Optional[float] = Field(default=None, ge=0)


class EchoBlock(_Block):
    k1: int = Field(default=1, ge=1)
    k2: int = Field(default=2, ge=2)
    tau_pulse: float = Field(default=10.0, gt=0)
    a1: float = Field(default=0.01, gt=0)
    a2: float = Field(default=0.01, ge=0)
    dt_out: float = Field(default=0.05, gt=0)
    t_end: Optional[float] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _ordered(self):
        if not self.k2 > self.k1:
            raise ValueError("echo needs k2 > k1")
        return self


class MomentsBlock(_Block):
    alpha: float = Field(default=0.1, gt=0, lt=1)
    gamma: float = Field(default=2.0, gt=1)
    eps: float = Field(default=0.05, gt=0, lt=1)
    t_values: list[float] = Field(default_factory=lambda: [600.0, 1200.0, 2400.0, 4800.0])
    backward: bool = True
    rtol: float = Field(default=1e-3, gt=0)

    @model_validator(mode="after")
    def _eps_below_alpha(self):
        if self.eps > self.alpha:
            raise ValueError("forward moment needs eps <= alpha")
        return self


class NormsBlock(_Block):
    seed: int = 0
    samples: int = Field(default=20, ge=1)
    samples_3d: int = Field(default=1, ge=0)


class GrowthBlock(_Block):
    a_const: float = Field(default=1.0, gt=0)
    c_kernel: float = Field(default=0.01, ge=0)
    alpha: float = Field(default=0.1, gt=0, lt=1)
    gamma: float = Field(default=2.0, gt=1)
    eps: float = Field(default=0.05, gt=0, lt=1)
    c0: float = Field(default=0.0, ge=0)
    m: float = Field(default=2.0, gt=1)
    t_end: float = Field(default=200.0, gt=0)
    dt: float = Field(default=0.1, gt=0)
    include_linear_kernel: bool = False
    kappa_min: float = Field(default=0.05, gt=0, lt=1)


class OutputBlock(_Block):
    directory: str = "out"
    prefix: str = ""


class Scenario(_Block):
    name: str
    experiment: Literal[
        "linear", "nonlinear", "echo", "stability", "moments", "norms", "growth"
    ]
    seed: int = 0
    geometry: GeometryBlock = GeometryBlock()
    kinematics: KinematicsBlock = KinematicsBlock()
    potential: PotentialBlock = PotentialBlock()
    equilibrium: EquilibriumBlock = EquilibriumBlock()
    perturbations: list[PerturbationBlock] = Field(default_factory=list)
    solver: SolverBlock = SolverBlock()
    linear: LinearBlock = LinearBlock()
    stability: StabilityBlock = StabilityBlock()
    echo: EchoBlock = EchoBlock()
    moments: MomentsBlock = MomentsBlock()
    norms: NormsBlock = NormsBlock()
    growth: GrowthBlock = GrowthBlock()
    output: OutputBlock = OutputBlock()

    @model_validator(mode="after")
    def _cross_block(self):
        widest = self.equilibrium.v_thermal
        if self.equilibrium.v_thermal_perp is not None:
            widest = max(widest, self.equilibrium.v_thermal_perp)
        if self.geometry.lv < 6.0 * widest:
            raise ValueError(
                f"geometry.lv = {self.geometry.lv} below 6 * thermal speed = {6 * widest}"
            )
        if self.experiment == "nonlinear":
            if self.solver.dt * self.geometry.kmax * self.geometry.lv >= 1.0:
                raise ValueError("solver.dt violates the kick guard dt*kmax*lv < 1")
            if not self.perturbations:
                raise ValueError("nonlinear experiment needs at least one perturbation")
            if self.geometry.dim_x == 1 and self.potential.kind != "gradient_z":
                raise ValueError(
                    "dim_x = 1 carries only the z force: use the gradient_z potential"
                )
        if self.experiment == "echo":
            if self.geometry.dim_x != 1:
                raise ValueError("echo experiments run on the dim_x = 1 reduction")
        if self.experiment == "linear" and not self.perturbations:
            raise ValueError("linear experiment needs at least one perturbation")
        return self


def load_scenario(path) -> Scenario:
    """Parse and validate a scenario file; unknown keys are errors."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"scenario parse error at line {exc.lineno}: {exc.msg}") from exc
    return Scenario.model_validate(raw)


def dump_scenario(s: Scenario) -> str:
    """Canonical normalized dump: defaults filled, keys sorted, compact."""
    return json.dumps(s.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))


def scenario_hash(s: Scenario) -> str:
    return hashlib.sha256(dump_scenario(s).encode()).hexdigest()[:16]
