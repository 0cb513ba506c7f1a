"""FastAPI service wrapping the toolkit.

The service is stateless: every request carries a full scenario, the
response carries the summary plus artifact bodies inline, and the client
decides where files land.  Validation errors surface as 422 with the
offending key path; numeric failures as 500 with the failure class.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, ConfigDict

from cyclodamp import __version__
from cyclodamp.runner import RunResult, run_scenario
from cyclodamp.scenario import Scenario, dump_scenario, scenario_hash


class HealthResponse(BaseModel):
    status: str
    version: str


class ValidateResponse(BaseModel):
    valid: bool
    scenario_hash: str
    normalized: str


class ArtifactModel(BaseModel):
    path: str
    kind: str
    text: str


class RunResponse(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scenario_hash: str
    experiment: str
    summary: dict
    artifacts: list[ArtifactModel]


NUMERIC_FAILURES = (
    "NumericFailure",
    "NormDivergenceError",
    "NearSingularStepError",
    "StabilityMarginError",
    "WeightedNormOverflowError",
)


def create_app() -> FastAPI:
    app = FastAPI(
        title="cyclodamp",
        version=__version__,
        description="Spectral cyclotron/Landau damping experiments over HTTP",
    )

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", version=__version__)

    @app.post("/scenarios/validate", response_model=ValidateResponse)
    def validate(scenario: Scenario):
        return ValidateResponse(
            valid=True,
            scenario_hash=scenario_hash(scenario),
            normalized=dump_scenario(scenario),
        )

    def _execute(scenario: Scenario, expected: str | None = None) -> RunResponse:
        if expected is not None and scenario.experiment != expected:
            raise HTTPException(
                status_code=422,
                detail=f"scenario.experiment is {scenario.experiment!r}; "
                f"this endpoint runs {expected!r}",
            )
        try:
            result: RunResult = run_scenario(scenario, write=False)
        except Exception as exc:  # classify for the exit-code contract
            name = type(exc).__name__
            code = 500 if name in NUMERIC_FAILURES else 400
            raise HTTPException(status_code=code, detail=f"{name}: {exc}") from exc
        return RunResponse(
            scenario_hash=result.scenario_hash,
            experiment=scenario.experiment,
            summary=result.summary,
            artifacts=[ArtifactModel(path=a.path, kind=a.kind, text=a.text) for a in result.artifacts],
        )

    @app.post("/scenarios/run", response_model=RunResponse)
    def run(scenario: Scenario):
        return _execute(scenario)

    @app.post("/experiments/stability", response_model=RunResponse)
    def stability(scenario: Scenario):
        return _execute(scenario, expected="stability")

    @app.post("/experiments/echo", response_model=RunResponse)
    def echo(scenario: Scenario):
        return _execute(scenario, expected="echo")

    @app.post("/experiments/moments", response_model=RunResponse)
    def moments(scenario: Scenario):
        return _execute(scenario, expected="moments")

    @app.post("/experiments/norms-suite", response_model=RunResponse)
    def norms_suite(scenario: Scenario):
        return _execute(scenario, expected="norms")

    return app


app = create_app()
