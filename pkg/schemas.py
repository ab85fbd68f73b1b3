# schemas.py
from __future__ import annotations

from typing import Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

PACKAGE_VERSION = "1.0.0"

Scalars = Union[float, List[float]]

# -------------------------
# Grid / limiter parameters
# -------------------------
class GridParams(BaseModel):
    """Per-interface and per-cell scheme parameters.

    Scalars are broadcast over the grid; lists must match the number of
    interfaces (alpha_minus, alpha_plus, K_minus, K_plus) or cells (alpha_center,
    gain, froude_ref). Range checks live in core.mesh.build_grid so that they
    are reported as GridError.
    """
    model_config = ConfigDict(extra="forbid")
    alpha_minus: Scalars = 0.75
    alpha_plus: Scalars = 0.75
    alpha_center: Scalars = 0.25
    gain: Optional[Scalars] = Field(None, description="G_j; defaults to 1 - max edge alpha")
    K_minus: Scalars = 100.0
    K_plus: Scalars = 100.0
    froude_ref: Optional[Scalars] = Field(None, description="Fr_j; defaults to (1 + 1/G_j)^(3/2)")
    gravity: float = 9.81


# -------------------------
# Scenario configuration
# -------------------------
ScenarioName = Literal[
    "lake_at_rest",
    "dam_break",
    "draining_slope",
    "particle_current",
    "comparison_sweep",
    "convergence_study",
]
SchemeName = Literal["blend", "kurganov_levy", "chertock", "bollermann"]


class ScenarioConfig(BaseModel):
    """Fully resolved run configuration (one config file plus overrides)."""
    model_config = ConfigDict(extra="forbid")

    scenario: ScenarioName
    scheme: SchemeName = "blend"
    system: Literal["plain", "width", "particle"] = "plain"

    # grid
    J: int = Field(100, ge=4, description="number of cells")
    x_left: float = 0.0
    x_right: float = 10.0
    boundary: Literal["wall", "outflow"] = "wall"

    # bed
    bed: Literal["flat", "bump", "linear", "basin_slope", "step"] = "flat"
    bed_csv: Optional[str] = None
    bed_amplitude: float = 0.2
    bed_slope: float = 0.1

    # channel width
    width_profile: Literal["constant", "linear", "contraction"] = "constant"
    width_left: float = Field(1.0, ge=0)
    width_right: float = Field(1.0, ge=0)
    width_min: float = Field(0.5, ge=0)
    width_cutoff: bool = False

    # physics
    gravity: float = Field(9.81, gt=0)
    g_particle: float = Field(1.0, gt=0)
    g_ambient: float = Field(0.0, ge=0)
    settling_velocity: float = Field(0.0, ge=0)

    # limiter / blend
    alpha_edge: float = 0.75
    alpha_center: float = 0.25
    gain: Optional[float] = None
    suppression_threshold: float = 100.0
    froude_ref: Optional[float] = None

    # time stepping
    end_time: float = Field(1.0, ge=0)
    max_steps: Optional[int] = Field(None, ge=0)
    nu: float = 0.45

    # initial data
    lake_level: float = 1.0
    dam_position: float = 0.0
    dam_left_depth: float = Field(1.0, ge=0)
    dam_right_depth: float = Field(0.5, ge=0)
    concentration: float = Field(1.0, ge=0)
    release_left: float = 7.0
    release_right: float = 8.0
    release_depth: float = Field(0.2, ge=0)

    # comparison sweep / convergence
    sweep_step: float = 1.0 / 64.0
    sweep_max: float = Field(7.0 / 3.0, gt=0)
    kl_threshold: float = Field(0.75, gt=0)
    convergence_target: Literal["width_lake_at_rest", "dam_break"] = "width_lake_at_rest"
    resolutions: List[int] = Field(default_factory=lambda: [50, 100, 200, 400])

    # output
    output_dir: str = "out"
    output_every: int = Field(50, ge=1)
    energy_column: bool = False
    svg: bool = False
    check_bounds: bool = True

    @field_validator("nu")
    @classmethod
    def _courant(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("Courant number must be positive")
        if v > 0.5:
            raise ValueError("Courant number must be ≤ 0.5")
        return v

    @field_validator("sweep_step")
    @classmethod
    def _sweep_step(cls, v: float) -> float:
        if not 0 < v <= 1.0 / 64.0:
            raise ValueError("sweep step must be in (0, 1/64]")
        return v

    @field_validator("resolutions", mode="before")
    @classmethod
    def _split_list(cls, v):
        if isinstance(v, str):
            return [s.strip() for s in v.split(",") if s.strip()]
        return v

    @field_validator("resolutions")
    @classmethod
    def _check_resolutions(cls, v: List[int]) -> List[int]:
        if not v or any(n < 4 for n in v):
            raise ValueError("resolutions must be a nonempty list of cell counts ≥ 4")
        return v

    @model_validator(mode="after")
    def _consistency(self) -> "ScenarioConfig":
        if self.x_right <= self.x_left:
            raise ValueError("x_right must exceed x_left")
        if self.scheme != "blend" and self.scenario != "comparison_sweep":
            raise ValueError(f"scheme {self.scheme} is only valid for comparison_sweep")
        if self.scenario == "particle_current" and self.system != "particle":
            raise ValueError("particle_current requires system = particle")
        return self

    def grid_params(self) -> GridParams:
        return GridParams(
            alpha_minus=self.alpha_edge,
            alpha_plus=self.alpha_edge,
            alpha_center=self.alpha_center,
            gain=self.gain,
            K_minus=self.suppression_threshold,
            K_plus=self.suppression_threshold,
            froude_ref=self.froude_ref,
            gravity=self.gravity,
        )


# -------------------------
# Run outputs
# -------------------------
class SweepRow(BaseModel):
    """One cell of one reconstruction in the comparison sweep."""
    model_config = ConfigDict(extra="forbid")
    h_0: float
    scheme: SchemeName
    cell: int
    h_left: float
    h_right: float
    gamma: Optional[float] = None
    xi: Optional[float] = None


SWEEP_COLUMNS = tuple(SweepRow.model_fields)
CONVERGENCE_COLUMNS = ("J", "dx", "error", "ratio")


class RunMetadata(BaseModel):
    """Everything needed to reproduce and audit a run."""
    model_config = ConfigDict(extra="forbid")
    package_version: str = PACKAGE_VERSION
    python_version: str
    numpy_version: str
    config: Dict[str, object]
    steps: int = 0
    final_time: float = 0.0
    clamp_count: int = 0
    diagnostics: Dict[str, float] = Field(default_factory=dict)
    artifacts: Dict[str, str] = Field(default_factory=dict)
