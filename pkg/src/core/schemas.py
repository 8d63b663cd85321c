"""
Validated record types for the half-plane Euler laboratory.

This module defines the pydantic models shared across modules: points,
quadrature settings, the profile constants of the barrier construction,
simulation and experiment configuration, and the run report emitted by
every subcommand.
"""

import math
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from core.interfaces import DomainError

E_INV = math.exp(-1.0)
E_INV4 = math.exp(-4.0)

# Relative tolerance for the displayed-formula invariants of ProfileConstants
FORMULA_RTOL = 1e-10


def _split_list(value: Any) -> Any:
    """Accept comma-separated strings for list-valued fields."""
    if isinstance(value, str):
        parts = [p.strip() for p in value.split(",")]
        return [p for p in parts if p]
    return value


class Point(BaseModel):
    """A position in the (closed) half-plane."""

    model_config = ConfigDict(frozen=True)

    x1: float
    x2: float

    @field_validator("x1", "x2")
    @classmethod
    def _finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("coordinates must be finite")
        return v

    @property
    def reflect_x1(self) -> "Point":
        """The reflection (-x1, x2)."""
        return Point(x1=-self.x1, x2=self.x2)

    @property
    def reflect_x2(self) -> "Point":
        """The reflection (x1, -x2)."""
        return Point(x1=self.x1, x2=-self.x2)

    @property
    def norm(self) -> float:
        return math.hypot(self.x1, self.x2)

    def in_open_quadrant(self) -> bool:
        return self.x1 > 0.0 and self.x2 > 0.0

    def require_open_quadrant(self) -> "Point":
        """Return self, or raise DomainError if not in the open first quadrant."""
        if not self.in_open_quadrant():
            raise DomainError(f"point ({self.x1!r}, {self.x2!r}) is not in the open first quadrant")
        return self

    def as_tuple(self) -> tuple:
        return (self.x1, self.x2)


class QuadratureSpec(BaseModel):
    """Tolerances for adaptive quadrature."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    rel_tol: float = Field(default=1e-8, gt=0.0)
    abs_tol: float = Field(default=1e-10, gt=0.0)
    max_depth: int = Field(default=10, ge=1)
    singularity_radius: float = Field(default=1e-3, ge=0.0)

    @property
    def limit(self) -> int:
        """Subinterval limit handed to QUADPACK."""
        return 50 * self.max_depth

    def tightened(self, factor: float) -> "QuadratureSpec":
        """Copy with both tolerances divided by factor."""
        return self.model_copy(update={
            "rel_tol": self.rel_tol / factor,
            "abs_tol": self.abs_tol / factor,
            "max_depth": self.max_depth + int(math.ceil(math.log2(max(factor, 1.0)))),
        })

    @classmethod
    def from_config(cls) -> "QuadratureSpec":
        from utils.config import get_config
        return cls(
            rel_tol=get_config("quadrature.rel_tol", 1e-8),
            abs_tol=get_config("quadrature.abs_tol", 1e-10),
            max_depth=get_config("quadrature.max_depth", 10),
            singularity_radius=get_config("quadrature.singularity_radius", 1e-3),
        )


class ProfileConstants(BaseModel):
    """
    The constants of the barrier construction in one record.

    rho0, Cprime and CI are functions of (C, I, s0); the validator checks
    them against their defining formulas.
    """

    model_config = ConfigDict(frozen=True)

    C: float = Field(ge=1.0)
    s0: float = Field(gt=0.0, le=E_INV4)
    rho0: float = Field(gt=0.0)
    Cprime: float = Field(gt=0.0)
    I: float = Field(ge=1.0)
    CI: float = Field(gt=0.0)
    provenance: Dict[str, str] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_formulas(self) -> "ProfileConstants":
        lam = -math.log(self.s0)
        root = math.sqrt(lam)
        expected = {
            "rho0": self.s0 / (2.0 * root),
            "Cprime": self.C * math.exp(root) * (1.0 + math.log1p(math.exp(root))),
            "CI": 0.25 * (4.0 * math.log(2.0) + 4.0 * math.log(10.0 * math.sqrt(self.I))
                          + (2.0 * self.C + 16.0) * math.pi),
        }
        for name, value in expected.items():
            actual = getattr(self, name)
            if abs(actual - value) > FORMULA_RTOL * abs(value):
                raise ValueError(f"{name}={actual!r} does not match its formula value {value!r}")
        return self

    @property
    def barrier_rate(self) -> float:
        """The linear decay coefficient 3(C' s0 / rho0 + C) of the alpha equation."""
        return 3.0 * (self.Cprime * self.s0 / self.rho0 + self.C)


class GrowthBoundParams(BaseModel):
    """Parameters of the closed-form double-exponential gradient bound."""

    model_config = ConfigDict(frozen=True)

    CI: float = Field(gt=0.0)
    grad0: float = Field(gt=0.0)
    gamma: float = Field(default=1.0, gt=0.0, le=1.0)


class SimConfig(BaseModel):
    """Configuration of one contour-dynamics run."""

    model_config = ConfigDict(frozen=True)

    initial_eps: float = Field(default=E_INV4, gt=0.0, le=E_INV4)
    dt_max: float = Field(default=5e-3, gt=0.0)
    cfl: float = Field(default=0.5, gt=0.0, lt=1.0)
    node_spacing_min: float = Field(default=2e-4, gt=0.0)
    node_spacing_max: float = Field(default=2e-2, gt=0.0)
    t_end: float = Field(default=2.0, ge=0.0)
    proxy_window: float = Field(default=0.2, gt=0.0)
    strength: float = Field(default=1.0, gt=0.0, le=1.0)
    max_nodes: int = Field(default=20000, ge=16)
    snapshot_times: List[float] = Field(default_factory=list)
    constants: ProfileConstants

    @field_validator("snapshot_times", mode="before")
    @classmethod
    def _times(cls, v: Any) -> Any:
        return _split_list(v)

    @model_validator(mode="after")
    def _check_spacing(self) -> "SimConfig":
        if not self.node_spacing_min < self.node_spacing_max:
            raise ValueError("node_spacing_min must be smaller than node_spacing_max")
        return self

    @property
    def premise_small_eps(self) -> bool:
        """Whether the initial eps satisfies eps(0) <= s0."""
        return self.initial_eps <= self.constants.s0


# Experiment configuration sections

class RunSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    seed: int = 0
    output_dir: str = "lab_output"
    deterministic: bool = False


class ConstantsSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    C: Optional[float] = Field(default=None, ge=1.0)  # None: fitted over the kernel battery
    I: float = Field(default=1.0, ge=1.0)
    s0: Optional[float] = Field(default=None, gt=0.0, le=E_INV4)


class RegionsSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    h_grid: List[float] = Field(default_factory=lambda: [10.0 ** -k for k in range(4, 13)])
    limit_s: float = Field(default=1e-150, gt=0.0, le=E_INV4)
    boundary_samples: int = Field(default=256, ge=8)
    chain_points: int = Field(default=200, ge=100)

    @field_validator("h_grid", mode="before")
    @classmethod
    def _grid(cls, v: Any) -> Any:
        return _split_list(v)

    @field_validator("h_grid")
    @classmethod
    def _grid_nonempty(cls, v: List[float]) -> List[float]:
        if not v:
            raise ValueError("h_grid must not be empty")
        if any(not (0.0 < s <= E_INV4) for s in v):
            raise ValueError("h_grid values must lie in (0, e^-4]")
        return v


class KernelSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    battery_dir: Optional[str] = None
    eval_points: int = Field(default=20, ge=1)
    fit_grid: int = Field(default=20, ge=2)
    fit_min: float = Field(default=1e-3, gt=0.0)
    fit_max: float = Field(default=0.49, gt=0.0, lt=0.5)
    domain_samples: int = Field(default=50, ge=1)
    tighten_factor: float = Field(default=10.0, gt=1.0)
    cross_rel_tol: float = Field(default=1e-3, gt=0.0)
    c_max: float = Field(default=50.0, gt=0.0)


class EstimatesSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    eps_values: List[float] = Field(default_factory=lambda: [1e-3, 1e-4, 1e-5, 1e-6])
    I_values: List[float] = Field(default_factory=lambda: [1.0, 4.0])
    area_tol: float = Field(default=1e-6, gt=0.0)
    trend_slack: float = Field(default=1e-3, ge=0.0)

    @field_validator("eps_values", "I_values", mode="before")
    @classmethod
    def _lists(cls, v: Any) -> Any:
        return _split_list(v)

    @field_validator("eps_values", "I_values")
    @classmethod
    def _nonempty(cls, v: List[float]) -> List[float]:
        if not v:
            raise ValueError("sweep lists must not be empty")
        return v


class SimulateSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    initial_eps: float = Field(default=E_INV4, gt=0.0, le=E_INV4)
    dt_max: float = Field(default=5e-3, gt=0.0)
    cfl: float = Field(default=0.5, gt=0.0, lt=1.0)
    node_spacing_min: float = Field(default=2e-4, gt=0.0)
    node_spacing_max: float = Field(default=2e-2, gt=0.0)
    t_end: float = Field(default=2.0, ge=0.0)
    proxy_window: float = Field(default=0.2, gt=0.0)
    strength: float = Field(default=1.0, gt=0.0, le=1.0)
    max_nodes: int = Field(default=20000, ge=16)
    snapshot_times: List[float] = Field(default_factory=lambda: [0.0, 0.5, 1.0])
    checkpoint: Optional[str] = None
    convergence_check: bool = True
    trajectory_t_end: float = Field(default=60.0, gt=0.0)

    @field_validator("snapshot_times", mode="before")
    @classmethod
    def _times(cls, v: Any) -> Any:
        return _split_list(v)


class BoundsSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    history: Optional[str] = None
    synthetic: Optional[str] = None
    grad0: Optional[float] = Field(default=None, gt=0.0)
    CI: Optional[float] = Field(default=None, gt=0.0)
    t_max: float = Field(default=2.0, gt=0.0)
    curve_points: int = Field(default=101, ge=2)

    @field_validator("synthetic")
    @classmethod
    def _synthetic(cls, v: Optional[str]) -> Optional[str]:
        if v is not None and v not in ("exp_exp_2t_over_pi", "exp_exp_3t"):
            raise ValueError(f"unknown synthetic history '{v}'")
        return v


class ExperimentConfig(BaseModel):
    """Validated content of an experiment configuration file."""

    model_config = ConfigDict(extra="forbid")

    run: RunSection = Field(default_factory=RunSection)
    quadrature: QuadratureSpec = Field(default_factory=QuadratureSpec)
    constants: ConstantsSection = Field(default_factory=ConstantsSection)
    regions: RegionsSection = Field(default_factory=RegionsSection)
    kernel: KernelSection = Field(default_factory=KernelSection)
    estimates: EstimatesSection = Field(default_factory=EstimatesSection)
    simulate: SimulateSection = Field(default_factory=SimulateSection)
    bounds: BoundsSection = Field(default_factory=BoundsSection)


# Run reports

class CheckResult(BaseModel):
    """Outcome of a single acceptance check."""

    name: str
    status: str = Field(pattern="^(pass|fail|not_applicable|threshold_exceeded)$")
    value: Optional[float] = None
    bound: Optional[float] = None
    margin: Optional[float] = None
    detail: str = ""

    @property
    def failed(self) -> bool:
        return self.status == "fail"


class ArtifactEntry(BaseModel):
    path: str
    sha256: str
    kind: str


class RunMetadata(BaseModel):
    version: str
    subcommand: str
    config_hash: str
    wall_time_s: float = 0.0
    deterministic: bool = False
    notes: Dict[str, Any] = Field(default_factory=dict)


class RunReport(BaseModel):
    """Report of one subcommand run."""

    metadata: RunMetadata
    checks: List[CheckResult] = Field(default_factory=list)
    artifacts: List[ArtifactEntry] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not any(c.failed for c in self.checks)

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)
