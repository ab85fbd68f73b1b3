# services/stepper.py
"""
Time integration: CFL step control, the positivity-preserving Euler step
with draining times, and its two-stage SSP Runge-Kutta (Heun) composition.

Draining: fluxes and sinks of a mass-like field act on a cell only until the
material they can reach is exhausted, then stop for the rest of the step. The
hydrostatic momentum flux and the bed source always act in full since they
balance each other at rest.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Tuple

import numpy as np
from numpy.typing import ArrayLike

from core.exceptions import ConfigError, SolverError
from services.solver import Problem, StepReport, SystemKind, rhs

logger = logging.getLogger(__name__)

CLAMP_FACTOR = 1e-14
SPEED_FLOOR_FACTOR = 1e-12
MAX_COURANT = 0.5


# -------------------------
# Step size
# -------------------------
def speed_floor(gravity: float, reference_depth: float) -> float:
    """Smallest wave speed used by cfl_dt, so quiescent states keep a finite step."""
    return SPEED_FLOOR_FACTOR * float(np.sqrt(gravity * max(reference_depth, 1.0e-300)))


def cfl_dt(dx: ArrayLike, a_minus: ArrayLike, a_plus: ArrayLike, nu: float, floor: float = 1e-12) -> float:
    """nu * min_j dx_j / max speed over the cell's two interfaces (J+1 speeds, J cells)."""
    if not 0 < nu <= MAX_COURANT:
        raise ConfigError("Courant number must lie in (0, 0.5]")
    if floor <= 0:
        raise ConfigError("speed floor must be positive")
    dx = np.asarray(dx, dtype=float)
    speed = np.maximum(np.abs(np.asarray(a_minus, dtype=float)), np.asarray(a_plus, dtype=float))
    cell_speed = np.maximum(np.maximum(speed[:-1], speed[1:]), floor)
    return float(nu * np.min(dx / cell_speed))


# -------------------------
# Draining times
# -------------------------
@dataclass(frozen=True)
class DrainingFactors:
    """Fractions of the step during which each flux and source acts.

    d_flux: (M, J+1) per interface and field; for the momentum row this is the
    factor applied to the advective part only. d_source: (M, J).
    d_momentum_advect and d_particle are the coupled interface factors.
    """
    d_flux: np.ndarray
    d_source: np.ndarray
    d_momentum_advect: np.ndarray
    d_particle: Optional[np.ndarray] = None

    @property
    def is_trivial(self) -> bool:
        return bool(np.all(self.d_flux == 1.0) and np.all(self.d_source == 1.0))


def _flux_draining_time(Q, dx, F, Psi):
    out = np.maximum(F[1:], 0.0) + np.maximum(-F[:-1], 0.0) + np.maximum(-Psi * dx, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(out > 0, Q * dx / out, np.inf)


def _donor_factor(cell_factor: np.ndarray, F: np.ndarray) -> np.ndarray:
    """Factor of each interface from its donor cell; 1 where F = 0 or the donor is a ghost."""
    padded = np.concatenate(([1.0], cell_factor, [1.0]))
    from_left = padded[:-1]    # cell j for interface j+1/2
    from_right = padded[1:]    # cell j+1
    return np.where(F > 0, from_left, np.where(F < 0, from_right, 1.0))


def _source_factor(t_flux, dx, F_drained, Psi, dt):
    inflow = np.maximum(-F_drained[1:], 0.0) + np.maximum(F_drained[:-1], 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_source = np.where(Psi < 0, t_flux + inflow * dt / (-Psi * dx), np.inf)
    return np.minimum(t_source / dt, 1.0)


def draining_times(
    values: ArrayLike,
    fluxes: ArrayLike,
    sources: ArrayLike,
    dx: ArrayLike,
    dt: float,
    *,
    mass_rows: Tuple[int, ...] = (0,),
    momentum_row: Optional[int] = None,
) -> DrainingFactors:
    """Draining factors for an Euler step of length dt.

    values (M, J), fluxes (M, J+1), sources (M, J). Only mass-like rows are
    drained. With two mass rows the second (particle mass) is coupled to the
    first by taking the smaller factor, for fluxes and sources alike.
    """
    if dt <= 0:
        raise SolverError("time step must be positive")
    values = np.atleast_2d(np.asarray(values, dtype=float))
    fluxes = np.atleast_2d(np.asarray(fluxes, dtype=float))
    sources = np.atleast_2d(np.asarray(sources, dtype=float))
    dx = np.asarray(dx, dtype=float)
    for row in mass_rows:
        bad = np.flatnonzero(values[row] < 0)
        if bad.size:
            raise SolverError(f"negative mass-like value in field {row}", cell=int(bad[0]))

    d_flux = np.ones_like(fluxes)
    d_source = np.ones_like(sources)
    t_flux = {}
    for row in mass_rows:
        t_flux[row] = _flux_draining_time(values[row], dx, fluxes[row], sources[row])
        d_flux[row] = _donor_factor(np.minimum(t_flux[row] / dt, 1.0), fluxes[row])

    d_particle = None
    if len(mass_rows) > 1:
        fluid, particle = mass_rows[0], mass_rows[1]
        d_particle = np.minimum(d_flux[fluid], d_flux[particle])
        d_flux[particle] = d_particle

    for row in mass_rows:
        d_source[row] = _source_factor(t_flux[row], dx, d_flux[row] * fluxes[row], sources[row], dt)
    if len(mass_rows) > 1:
        d_source[mass_rows[1]] = np.minimum(d_source[mass_rows[0]], d_source[mass_rows[1]])

    d_advect = d_flux[mass_rows[0]].copy()
    if momentum_row is not None:
        d_flux[momentum_row] = d_advect
    return DrainingFactors(d_flux=d_flux, d_source=d_source, d_momentum_advect=d_advect, d_particle=d_particle)


# -------------------------
# Euler and SSP-RK2
# -------------------------
@dataclass
class ClampCounter:
    count: int = 0


def clamp_state(problem: Problem, values: np.ndarray, scale: np.ndarray, counter: Optional[ClampCounter] = None) -> np.ndarray:
    """Round values below CLAMP_FACTOR * scale to exact zero and stop flow in dry cells."""
    values = values.copy()
    small = (np.abs(values) < CLAMP_FACTOR * scale[:, None]) & (values != 0.0)
    values[small] = 0.0
    dry = values[0] == 0.0
    moving = dry & (values[-1] != 0.0)
    values[-1, dry] = 0.0
    stranded = np.zeros_like(dry)
    if problem.system.kind is SystemKind.PARTICLE:
        stranded = dry & (values[1] != 0.0)
        values[1, dry] = 0.0
    if counter is not None:
        counter.count += int(small.sum() + moving.sum() + stranded.sum())
    return values


def field_scale(values: np.ndarray) -> np.ndarray:
    scale = np.max(np.abs(values), axis=1)
    return np.where(scale > 0, scale, 1.0)


def euler_step_positive(
    problem: Problem,
    values: ArrayLike,
    dt: float,
    *,
    evaluated: Optional[Tuple[np.ndarray, StepReport]] = None,
    counter: Optional[ClampCounter] = None,
    time: Optional[float] = None,
) -> Tuple[np.ndarray, StepReport]:
    """One forward-Euler step with drained fluxes and sinks.

    `evaluated` lets the caller pass an rhs already computed at `values`.
    """
    system, grid = problem.system, problem.grid
    values = problem.check_values(values)
    _, report = evaluated if evaluated is not None else rhs(problem, values)
    dx = grid.cell_widths
    F = report.interface_flux
    Psi = report.cell_source
    factors = draining_times(
        values, F, Psi, dx, dt, mass_rows=system.mass_rows, momentum_row=system.momentum_row,
    )

    drained = factors.d_flux * F
    mom = system.momentum_row
    drained[mom] = report.hydrostatic + factors.d_momentum_advect * (F[mom] - report.hydrostatic)
    drained_source = Psi.copy()
    for row in system.mass_rows:
        drained_source[row] = factors.d_source[row] * Psi[row]

    new = values - (dt / dx) * (drained[:, 1:] - drained[:, :-1]) + dt * drained_source
    if not np.all(np.isfinite(new)):
        bad = np.flatnonzero(~np.all(np.isfinite(new), axis=0))
        raise SolverError("non-finite state after Euler step", cell=int(bad[0]), time=time)

    new = clamp_state(problem, new, field_scale(values), counter)
    for row in system.mass_rows:
        bad = np.flatnonzero(new[row] < 0)
        if bad.size:
            raise SolverError(
                f"negative {system.field_names[row]} after Euler step ({new[row, bad[0]]:.3e})",
                cell=int(bad[0]), time=time,
            )
    if not factors.is_trivial:
        logger.debug("[Stepper] draining active in %d interfaces", int(np.sum(factors.d_flux < 1.0)))
    return new, replace(report, draining=factors)


def heun(euler: Callable[[np.ndarray], np.ndarray], values: ArrayLike, dt: float) -> np.ndarray:
    """Two-stage SSP-RK2 built from any Euler map: (Q + E(E(Q))) / 2."""
    values = np.asarray(values, dtype=float)
    first = euler(values)
    second = euler(first)
    return 0.5 * (values + second)


@dataclass
class StepResult:
    values: np.ndarray
    dt: float
    report: StepReport   # first stage, evaluated at the old state
    clamps: int = 0


def ssp_rk2(
    problem: Problem,
    values: ArrayLike,
    dt: float,
    *,
    evaluated: Optional[Tuple[np.ndarray, StepReport]] = None,
    time: Optional[float] = None,
) -> StepResult:
    """Heun step whose two stages are positivity-preserving Euler steps."""
    values = problem.check_values(values)
    counter = ClampCounter()
    reports: List[StepReport] = []

    def stage(state: np.ndarray) -> np.ndarray:
        given = evaluated if not reports and evaluated is not None else None
        new, report = euler_step_positive(problem, state, dt, evaluated=given, counter=counter, time=time)
        reports.append(report)
        return new

    new = heun(stage, values, dt)
    new = clamp_state(problem, new, field_scale(values), counter)
    return StepResult(values=new, dt=dt, report=reports[0], clamps=counter.count)


# -------------------------
# Driver
# -------------------------
@dataclass
class Integrator:
    """Advances a Problem in time with CFL-limited SSP-RK2 steps."""
    problem: Problem
    nu: float = 0.45
    floor: float = 1e-12
    time: float = 0.0
    steps: int = 0
    clamp_count: int = 0
    history: List[float] = field(default_factory=list)

    def __post_init__(self):
        if not 0 < self.nu <= MAX_COURANT:
            raise ConfigError("Courant number must be ≤ 0.5" if self.nu > 0 else "Courant number must be positive")

    @classmethod
    def for_state(cls, problem: Problem, values: np.ndarray, nu: float = 0.45) -> "Integrator":
        g = problem.system.gravity
        if problem.system.kind is SystemKind.PARTICLE:
            g = problem.system.g_particle + problem.system.g_ambient
        return cls(problem=problem, nu=nu, floor=speed_floor(g, float(np.max(values[0]))))

    def step(self, values: np.ndarray, end_time: Optional[float] = None) -> StepResult:
        evaluated = rhs(self.problem, values)
        report = evaluated[1]
        dt = cfl_dt(self.problem.grid.cell_widths, report.a_minus, report.a_plus, self.nu, self.floor)
        if end_time is not None:
            dt = min(dt, end_time - self.time)
        result = ssp_rk2(self.problem, values, dt, evaluated=evaluated, time=self.time)
        self.time += dt
        self.steps += 1
        self.clamp_count += result.clamps
        self.history.append(dt)
        logger.debug("[Stepper] step %d: dt=%.6g t=%.6g clamps=%d", self.steps, dt, self.time, result.clamps)
        return result

    def advance(
        self,
        values: np.ndarray,
        *,
        end_time: Optional[float] = None,
        max_steps: Optional[int] = None,
        callback: Optional[Callable[[int, float, StepResult], None]] = None,
    ) -> np.ndarray:
        """Step until end_time or max_steps, whichever comes first."""
        if end_time is None and max_steps is None:
            raise ConfigError("advance needs end_time or max_steps")
        while True:
            if max_steps is not None and self.steps >= max_steps:
                break
            if end_time is not None and end_time - self.time <= 1e-12 * max(abs(end_time), 1.0):
                break
            result = self.step(values, end_time)
            values = result.values
            if callback is not None:
                callback(self.steps, self.time, result)
        return values
