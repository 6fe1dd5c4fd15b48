"""Typed run configuration and artifact records.

Input models forbid unknown fields so a misspelled config key fails loudly;
output models ignore extras so older artifacts keep loading.
"""

from __future__ import annotations

import math
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, computed_field, model_validator

Command = Literal["solve", "bench", "verify", "toy"]
Family = Literal[
    "linreg-wdro",
    "mlp-wdro",
    "cubic_quadratic",
    "sine_bilinear",
    "bilinear",
    "strongly_concave",
]
SolverMethod = Literal["plda", "sgda", "subgrad"]
NormOrder = Literal["1", "2", "inf"]


class ProblemSettings(BaseModel):
    """Problem family and its construction parameters."""

    family: Family = "bilinear"
    n: int = Field(default=20, ge=1, description="Number of samples for WDRO families.")
    d: int = Field(default=3, ge=1, description="Feature dimension for synthetic WDRO data.")
    rho: float = Field(default=1.0, ge=0.0)
    p: NormOrder = "2"
    data_path: str | None = None
    data_mode: Literal["planted", "independent"] = "planted"
    trust_radius: float | None = Field(default=None, gt=0.0)

    model_config = ConfigDict(extra="forbid")


class ParameterSettings(BaseModel):
    """Where the step sizes come from: the theory formulas or explicit values."""

    source: Literal["theory", "explicit"] = "theory"
    regime: Literal["general", "kl"] = "general"
    r: float | None = Field(default=None, gt=0.0)
    lam: float | None = Field(default=None, gt=0.0)
    alpha: float | None = Field(default=None, gt=0.0)
    beta: float | None = Field(default=None, gt=0.0, lt=1.0)
    force: bool = False
    gda_step: float | None = Field(default=None, gt=0.0)

    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def _explicit_values_present(self) -> ParameterSettings:
        if self.source == "explicit" and (self.alpha is None or self.beta is None):
            raise ValueError("explicit parameters need alpha and beta")
        return self


class InnerSettings(BaseModel):
    method: Literal[
        "auto",
        "closed_form",
        "projected_subgradient_averaging",
        "accelerated_projected_gradient",
        "dual_projected_gradient",
    ] = "auto"
    target: float = Field(default=1e-8, gt=0.0)
    max_iters: int = Field(default=5000, ge=1)
    adaptive: bool = False
    on_nonconvergence: Literal["raise", "warn"] = "warn"

    model_config = ConfigDict(extra="forbid")


class RunConfig(BaseModel):
    """Fully resolved configuration of one CLI invocation."""

    command: Command
    problem: ProblemSettings = Field(default_factory=ProblemSettings)
    method: SolverMethod = "plda"
    params: ParameterSettings = Field(default_factory=ParameterSettings)
    inner: InnerSettings = Field(default_factory=InnerSettings)
    horizon: int = Field(default=200, ge=1)
    seed: int = 0
    stride: int = Field(default=10, ge=0)
    output_dir: str = "runs"
    suite: Literal["all", "toys", "errors", "rates", "conversion", "wdro"] = "all"
    toy_id: Literal["cubic_quadratic", "sine_bilinear", "bilinear"] = "bilinear"
    grid_step: float = Field(default=1e-3, gt=0.0)
    workers: int = Field(default=4, ge=1)
    oracle_budget: int | None = Field(default=None, ge=1)

    model_config = ConfigDict(extra="forbid")


class TraceRecord(BaseModel):
    """One row of a solver trace; ``None`` marks a diagnostic that was not computed."""

    k: int
    F: float
    dx_norm: float | None = None
    dz_norm: float | None = None
    dual_residual: float | None = None
    gs_primal: float | None = None
    gs_dual: float | None = None
    os_residual: float | None = None
    potential: float | None = None
    objective: float | None = Field(default=None, exclude=True)

    model_config = ConfigDict(extra="ignore")

    @property
    def gs(self) -> float | None:
        if self.gs_primal is None or self.gs_dual is None:
            return None
        return max(self.gs_primal, self.gs_dual)


class CheckReport(BaseModel):
    """Outcome of one numerical inequality check.

    ``worst_ratio`` is the largest observed ``lhs / rhs``; a check passes exactly
    when it does not exceed ``1 + tolerance``.
    """

    name: str
    instances: int
    worst_ratio: float
    tolerance: float = 0.0
    details: dict[str, Any] = Field(default_factory=dict)

    model_config = ConfigDict(extra="ignore")

    @computed_field  # type: ignore[prop-decorator]
    @property
    def passed(self) -> bool:
        return not math.isnan(self.worst_ratio) and self.worst_ratio <= 1.0 + self.tolerance


class BenchRow(BaseModel):
    """Final objective of one method on one problem after the shared oracle budget."""

    method: SolverMethod
    problem: str
    step: float | None = None
    iterations: int
    final_objective: float
    best_objective: float
    oracle_calls: int | None = None
    oracle_budget: int | None = None

    model_config = ConfigDict(extra="ignore")


class RunSummary(BaseModel):
    """JSON summary written next to a trace CSV."""

    version: str
    config: dict[str, Any]
    problem: str
    method: SolverMethod
    parameters: dict[str, Any]
    iterations: int
    best_iterate: dict[str, Any]
    residuals: dict[str, Any] = Field(default_factory=dict)
    objective: dict[str, Any] = Field(default_factory=dict)
    wall_time_ms: float | None = None
    metadata: dict[str, Any] = Field(default_factory=dict)

    model_config = ConfigDict(extra="ignore")
