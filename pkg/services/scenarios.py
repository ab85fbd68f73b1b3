# services/scenarios.py
"""
Scenario library: named beds, channel widths and initial states, the
time-dependent runs, the reconstruction comparison sweep and the convergence
study. Everything here computes; writing files is left to routers.run.
"""
from __future__ import annotations

import logging
import platform
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from core.exceptions import ConfigError
from core.mesh import (
    BedGeometry,
    Grid,
    bed_from_values,
    bed_stats,
    build_grid,
    read_bed_csv,
    uniform_interfaces,
    width_from_values,
)
from schemas import CONVERGENCE_COLUMNS, SWEEP_COLUMNS, GridParams, RunMetadata, ScenarioConfig, SweepRow
from services.altrecon import AltScheme, alt_reconstruct
from services.exact import cell_averages, dam_break_exact
from services.solver import Problem, StepReport, System, SystemKind
from services.stepper import Integrator, StepResult
from services.wbrecon import reconstruct_area_width, reconstruct_depth, velocity_bound_violations

logger = logging.getLogger(__name__)

Series = Dict[str, Dict[str, Tuple[np.ndarray, np.ndarray]]]

COMPARISON_DEPTHS = (4.0, 3.0, 3.0, None, 1.0, 1.0, 1.0)   # cells -3..3, None is h_0
COMPARISON_FIRST_CELL = -3
COMPARISON_PROFILES = (0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0)
SCHEMES = ("blend", "kurganov_levy", "chertock", "bollermann")


# -------------------------
# Geometry
# -------------------------
def bed_profile(config: ScenarioConfig, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(b just left of, b just right of) each interface position x."""
    mid = 0.5 * (config.x_left + config.x_right)
    amp, slope = config.bed_amplitude, config.bed_slope
    if config.bed == "flat":
        b = np.zeros_like(x)
    elif config.bed == "bump":
        b = amp * np.exp(-((x - mid) ** 2))
    elif config.bed == "linear":
        b = slope * (x - config.x_left)
    elif config.bed == "basin_slope":
        b = np.maximum(0.0, slope * (x - mid))
    else:
        return np.where(x > mid, amp, 0.0), np.where(x >= mid, amp, 0.0)
    return b, b


def width_profile(config: ScenarioConfig, x: np.ndarray) -> np.ndarray:
    s = (x - config.x_left) / (config.x_right - config.x_left)
    if config.width_profile == "constant":
        return np.full_like(x, config.width_left)
    if config.width_profile == "linear":
        return config.width_left + (config.width_right - config.width_left) * s
    # contraction: linear taper to width_min at mid-channel and back out
    return np.where(
        s <= 0.5,
        config.width_left + (config.width_min - config.width_left) * 2.0 * s,
        config.width_min + (config.width_right - config.width_min) * (2.0 * s - 1.0),
    )


def build_geometry(config: ScenarioConfig, params: Optional[GridParams] = None, J: Optional[int] = None):
    """Grid, bed and (for the width system) channel width described by the config."""
    params = params or config.grid_params()
    if config.bed_csv:
        interfaces, b_minus, b_plus = read_bed_csv(config.bed_csv)
        grid = build_grid(interfaces, params)
        bed = bed_stats(b_minus, b_plus, grid)
    else:
        grid = build_grid(uniform_interfaces(config.x_left, config.x_right, J or config.J), params)
        b_minus, b_plus = bed_profile(config, np.asarray(grid.interfaces))
        bed = bed_stats(b_minus, b_plus, grid)
    width = None
    if config.system == "width":
        width = width_from_values(width_profile(config, np.asarray(grid.interfaces)), grid)
    return grid, bed, width


def build_system(config: ScenarioConfig) -> System:
    return System(
        kind=SystemKind(config.system),
        gravity=config.gravity,
        g_particle=config.g_particle,
        g_ambient=config.g_ambient,
        settling_velocity=config.settling_velocity,
        width_cutoff=config.width_cutoff,
    )


# -------------------------
# Initial states
# -------------------------
def lake_depth(level: float, bed: BedGeometry) -> np.ndarray:
    return np.maximum(level - bed.b_cell, 0.0)


def dam_depth(config: ScenarioConfig, grid: Grid) -> np.ndarray:
    return np.where(grid.centers < config.dam_position, config.dam_left_depth, config.dam_right_depth)


def initial_depth(config: ScenarioConfig, grid: Grid, bed: BedGeometry) -> np.ndarray:
    if config.scenario in ("dam_break", "particle_current"):
        return dam_depth(config, grid)
    h = lake_depth(config.lake_level, bed)
    if config.scenario == "draining_slope":
        block = (grid.centers >= config.release_left) & (grid.centers <= config.release_right)
        h = h + np.where(block, config.release_depth, 0.0)
    return h


def initial_values(config: ScenarioConfig, problem: Problem) -> np.ndarray:
    """Conserved cell averages at t = 0, shape (M, J)."""
    grid, bed = problem.grid, problem.bed
    h = initial_depth(config, grid, bed)
    q = np.zeros_like(h)
    kind = problem.system.kind
    if kind is SystemKind.WIDTH:
        return np.stack([problem.width.w_cell * h, q])
    if kind is SystemKind.PARTICLE:
        loaded = grid.centers < config.dam_position if config.scenario == "particle_current" else np.ones_like(h, bool)
        Phi = np.where(loaded, config.concentration * h, 0.0)
        return np.stack([h, Phi, q])
    return np.stack([h, q])


# -------------------------
# Diagnostics
# -------------------------
def depth_of(problem: Problem, values: np.ndarray) -> np.ndarray:
    if problem.system.kind is SystemKind.WIDTH:
        return values[0] / problem.width.w_cell
    return values[0]


def state_frame(problem: Problem, values: np.ndarray, time: float, energy: bool = False) -> pd.DataFrame:
    """One row per cell: x_center, h, q, u, eta (+ A, phi, E when relevant)."""
    system, grid, bed = problem.system, problem.grid, problem.bed
    h = depth_of(problem, values)
    q = values[-1]
    u = np.divide(q, values[0], out=np.zeros_like(q), where=values[0] > 0)
    eta = h + bed.b_cell
    columns = {
        "time": np.full(grid.num_cells, time),
        "cell": np.arange(grid.num_cells),
        "x_center": grid.centers,
        "h": h,
        "q": q,
        "u": u,
        "eta": eta,
    }
    phi = np.zeros_like(h)
    if system.kind is SystemKind.WIDTH:
        columns["A"] = values[0]
    if system.kind is SystemKind.PARTICLE:
        phi = np.divide(values[1], h, out=np.zeros_like(h), where=h > 0)
        columns["phi"] = phi
    if energy:
        columns["E"] = 0.5 * u * u + system.effective_gravity(phi) * eta
    return pd.DataFrame(columns)


def max_froude(problem: Problem, values: np.ndarray) -> float:
    h = depth_of(problem, values)
    u = np.divide(values[-1], values[0], out=np.zeros_like(h), where=values[0] > 0)
    phi = np.divide(values[1], h, out=np.zeros_like(h), where=h > 0) if problem.system.kind is SystemKind.PARTICLE else np.zeros_like(h)
    c = np.sqrt(problem.system.effective_gravity(phi) * h)
    wet = c > 0
    return float(np.max(np.abs(u[wet]) / c[wet])) if np.any(wet) else 0.0


@dataclass
class BoundMonitor:
    """Checks the edge-velocity bound of the flux reconstruction after every step."""
    problem: Problem
    checks: int = 0
    violations: int = 0
    min_depth: float = np.inf
    min_particle_mass: float = np.inf

    def __call__(self, values: np.ndarray, report: StepReport) -> None:
        self.min_depth = min(self.min_depth, float(values[0].min()))
        if self.problem.system.kind is SystemKind.PARTICLE:
            self.min_particle_mass = min(self.min_particle_mass, float(values[1].min()))
        flux = report.recon.flux
        ghosts = self.problem.flux_ghosts(values[-1])
        bad = velocity_bound_violations(
            self.problem.grid, values[0], values[-1], flux.u_left, flux.u_right,
            ghosts=ghosts, width=self.problem.width,
        )
        self.checks += 1
        if bad.size:
            self.violations += int(bad.size)
            logger.warning("[Runner] velocity bound exceeded in %d cells (first: %d)", bad.size, bad[0])


# -------------------------
# Time-dependent runs
# -------------------------
@dataclass
class ScenarioResult:
    series: pd.DataFrame
    final: pd.DataFrame
    metadata: RunMetadata
    plots: Series = field(default_factory=dict)
    tables: Dict[str, pd.DataFrame] = field(default_factory=dict)


def _metadata(config: ScenarioConfig, **kwargs) -> RunMetadata:
    return RunMetadata(
        python_version=platform.python_version(),
        numpy_version=np.__version__,
        config=config.model_dump(),
        **kwargs,
    )


def dam_break_error(problem: Problem, values: np.ndarray, config: ScenarioConfig, time: float) -> float:
    """Relative L1 error of the depth against the exact flat-bed dam break."""
    grid = problem.grid
    exact = cell_averages(
        lambda x: dam_break_exact(x, time, config.dam_left_depth, config.dam_right_depth, config.gravity, config.dam_position)[0],
        grid.interfaces,
    )
    dx = grid.cell_widths
    return float(np.sum(np.abs(values[0] - exact) * dx) / np.sum(np.abs(exact) * dx))


def simulate(config: ScenarioConfig, J: Optional[int] = None) -> Tuple[Problem, np.ndarray, Integrator, List[pd.DataFrame], BoundMonitor]:
    grid, bed, width = build_geometry(config, J=J)
    problem = Problem(system=build_system(config), grid=grid, bed=bed, width=width, boundary=config.boundary)
    values = initial_values(config, problem)
    integrator = Integrator.for_state(problem, values, config.nu)
    monitor = BoundMonitor(problem)
    frames = [state_frame(problem, values, 0.0, config.energy_column)]
    state = {"values": values}

    def on_step(step: int, time: float, result: StepResult) -> None:
        if config.check_bounds:
            monitor(state["values"], result.report)
        state["values"] = result.values
        if step % config.output_every == 0:
            frames.append(state_frame(problem, result.values, time, config.energy_column))

    logger.info("[Runner] %s: %d cells, %s system, t_end=%g", config.scenario, grid.num_cells, config.system, config.end_time)
    final = integrator.advance(values, end_time=config.end_time, max_steps=config.max_steps, callback=on_step)
    if integrator.steps % config.output_every != 0:
        frames.append(state_frame(problem, final, integrator.time, config.energy_column))
    monitor.min_depth = min(monitor.min_depth, float(final[0].min()))
    return problem, final, integrator, frames, monitor


def run_scenario(config: ScenarioConfig) -> ScenarioResult:
    """Dispatch on config.scenario and collect outputs and diagnostics."""
    if config.scenario == "comparison_sweep":
        return run_comparison(config)
    if config.scenario == "convergence_study":
        return run_convergence(config)

    problem, final, integrator, frames, monitor = simulate(config)
    start = frames[0]["A" if problem.system.kind is SystemKind.WIDTH else "h"].to_numpy()
    initial_mass = float(np.sum(start * problem.grid.cell_widths))
    final_mass = float(np.sum(final[0] * problem.grid.cell_widths))
    diagnostics = {
        "min_depth": monitor.min_depth,
        "mass_drift": abs(final_mass - initial_mass) / initial_mass if initial_mass > 0 else 0.0,
        "max_froude": max_froude(problem, final),
        "bound_checks": float(monitor.checks),
        "bound_violations": float(monitor.violations),
    }
    if problem.system.kind is SystemKind.PARTICLE:
        diagnostics["min_particle_mass"] = min(monitor.min_particle_mass, float(final[1].min()))
    if config.scenario == "lake_at_rest":
        h = depth_of(problem, final)
        wet = h > 0
        diagnostics["well_balance_eta"] = float(np.max(np.abs(h[wet] + problem.bed.b_cell[wet] - config.lake_level)))
        diagnostics["max_abs_q"] = float(np.max(np.abs(final[-1])))
    if config.scenario == "dam_break":
        diagnostics["l1_error"] = dam_break_error(problem, final, config, integrator.time)

    metadata = _metadata(
        config, steps=integrator.steps, final_time=integrator.time,
        clamp_count=integrator.clamp_count, diagnostics=diagnostics,
    )
    final_frame = state_frame(problem, final, integrator.time, config.energy_column)
    plots: Series = {"h": {"final": (problem.grid.centers, final_frame["h"].to_numpy())},
                     "eta": {"final": (problem.grid.centers, final_frame["eta"].to_numpy()),
                             "bed": (problem.grid.centers, problem.bed.b_cell)}}
    logger.info("[Runner] %s finished: %d steps, t=%.6g, clamps=%d", config.scenario, integrator.steps, integrator.time, integrator.clamp_count)
    return ScenarioResult(series=pd.concat(frames, ignore_index=True), final=final_frame, metadata=metadata, plots=plots)


# -------------------------
# Comparison sweep
# -------------------------
def comparison_setup(h0: float, params: Optional[GridParams] = None) -> Tuple[Grid, BedGeometry, np.ndarray]:
    """Seven unit cells j = -3..3 on the bed b = x; deep lake on the left, h_0 in cell 0."""
    x = np.arange(-3.5, 4.0, 1.0)
    grid = build_grid(x, params)
    bed = bed_from_values(x, grid)
    h = np.array([h0 if d is None else d for d in COMPARISON_DEPTHS], dtype=float)
    return grid, bed, h


def sweep_values(step: float, maximum: float) -> np.ndarray:
    values = np.arange(0.0, maximum, step)
    if values.size == 0 or values[-1] < maximum:
        values = np.append(values, maximum)
    return values


def reconstruct_scheme(scheme: str, grid: Grid, bed: BedGeometry, h: np.ndarray, kl_threshold: float = 0.75):
    """(h_left, h_right, gamma, xi) of one reconstruction; gamma and xi are None for the others."""
    if scheme == "blend":
        depth = reconstruct_depth(grid, bed, h)
        return depth.h_left, depth.h_right, depth.gamma, depth.xi
    recon = alt_reconstruct(AltScheme(scheme, kl_threshold), grid, bed, h)
    return recon.h_left, recon.h_right, None, None


def comparison_sweep(config: ScenarioConfig) -> pd.DataFrame:
    """Edge depths of every cell for every scheme while h_0 sweeps 0..sweep_max."""
    params = config.grid_params()
    rows: List[dict] = []
    for h0 in sweep_values(config.sweep_step, config.sweep_max):
        grid, bed, h = comparison_setup(float(h0), params)
        for scheme in SCHEMES:
            left, right, gamma, xi = reconstruct_scheme(scheme, grid, bed, h, config.kl_threshold)
            for i in range(grid.num_cells):
                rows.append(SweepRow(
                    h_0=float(h0), scheme=scheme, cell=COMPARISON_FIRST_CELL + i,
                    h_left=float(left[i]), h_right=float(right[i]),
                    gamma=None if gamma is None else float(gamma[i]),
                    xi=None if xi is None else float(xi[i]),
                ).model_dump())
    frame = pd.DataFrame(rows, columns=list(SWEEP_COLUMNS))
    logger.info("[Sweep] %d rows over %d values of h_0", len(frame), frame["h_0"].nunique())
    return frame


def comparison_profiles(config: ScenarioConfig, h0_values=COMPARISON_PROFILES) -> Series:
    """Piecewise-linear depth profiles h(x), one panel per scheme, one line per h_0."""
    params = config.grid_params()
    panels: Series = {}
    for scheme in SCHEMES:
        panel = {}
        for h0 in h0_values:
            grid, bed, h = comparison_setup(float(h0), params)
            left, right, _, _ = reconstruct_scheme(scheme, grid, bed, h, config.kl_threshold)
            x = np.column_stack([grid.interfaces[:-1], grid.interfaces[1:], np.full(grid.num_cells, np.nan)]).ravel()
            y = np.column_stack([left, right, np.full(grid.num_cells, np.nan)]).ravel()
            panel[f"h_0 = {h0:g}"] = (x, y)
        panels[scheme] = panel
    return panels


def run_comparison(config: ScenarioConfig) -> ScenarioResult:
    frame = comparison_sweep(config)
    return ScenarioResult(
        series=frame, final=frame, metadata=_metadata(config, diagnostics={"rows": float(len(frame))}),
        plots=comparison_profiles(config), tables={"sweep": frame},
    )


# -------------------------
# Convergence study
# -------------------------
def width_lake_error(config: ScenarioConfig, J: int) -> Tuple[float, float]:
    """(dx, sup |h + b - eta| over all reconstructed edges) for a width-system lake at rest."""
    width_config = config.model_copy(update={"system": "width"})
    grid, bed, width = build_geometry(width_config, J=J)
    h = lake_depth(config.lake_level, bed)
    recon = reconstruct_area_width(grid, width, bed, width.w_cell * h)
    error = max(
        float(np.max(np.abs(recon.h_left + bed.b_left - config.lake_level))),
        float(np.max(np.abs(recon.h_right + bed.b_right - config.lake_level))),
    )
    return float(np.max(grid.cell_widths)), error


def dam_break_convergence_error(config: ScenarioConfig, J: int) -> Tuple[float, float]:
    dam = config.model_copy(update={"scenario": "dam_break", "bed": "flat", "boundary": "outflow", "check_bounds": False})
    problem, final, integrator, _, _ = simulate(dam, J=J)
    return float(np.max(problem.grid.cell_widths)), dam_break_error(problem, final, config, integrator.time)


def convergence_study(config: ScenarioConfig) -> pd.DataFrame:
    measure: Callable[[ScenarioConfig, int], Tuple[float, float]] = (
        width_lake_error if config.convergence_target == "width_lake_at_rest" else dam_break_convergence_error
    )
    rows = []
    previous = None
    for J in config.resolutions:
        dx, error = measure(config, J)
        ratio = previous / error if previous is not None and error > 0 else np.nan
        rows.append({"J": J, "dx": dx, "error": error, "ratio": ratio})
        logger.info("[Convergence] J=%d dx=%.4g error=%.6e", J, dx, error)
        previous = error
    return pd.DataFrame(rows, columns=list(CONVERGENCE_COLUMNS))


def run_convergence(config: ScenarioConfig) -> ScenarioResult:
    if config.convergence_target == "dam_break" and config.system != "plain":
        raise ConfigError("dam_break convergence needs system = plain")
    frame = convergence_study(config)
    plots: Series = {"error": {config.convergence_target: (frame["dx"].to_numpy(), frame["error"].to_numpy())}}
    return ScenarioResult(
        series=frame, final=frame, metadata=_metadata(config, diagnostics={"levels": float(len(frame))}),
        plots=plots, tables={"convergence": frame},
    )
