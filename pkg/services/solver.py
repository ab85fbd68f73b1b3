# services/solver.py
"""
Semi-discrete right-hand side for the three shallow-water-type systems.

    plain     Q = (h, q)
    width     Q = (A, q~)       A = w h, q~ = u A
    particle  Q = (h, Phi, q)   Phi = phi h, gravity g'_T = g'_p phi + g'_a

Interface states come from services.wbrecon, interface fluxes from a
central-upwind flux, and the momentum source from the cell's own edge depths
so that the lake at rest is preserved to roundoff. Boundary interfaces see a
mirror of the adjacent edge state: reflective walls negate the flux, outflow
boundaries copy it.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Literal, Optional, Tuple

import numpy as np
from numpy.typing import ArrayLike

from core.exceptions import ConfigError, ReconstructionError
from core.mesh import BedGeometry, Grid, WidthGeometry
from services.wbrecon import (
    EdgeReconstruction,
    froude_cutoff,
    reconstruct_area_width,
    reconstruct_concentration,
    reconstruct_depth,
    reconstruct_flux,
    reconstruct_width_flux,
)

if TYPE_CHECKING:
    from services.stepper import DrainingFactors

logger = logging.getLogger(__name__)

Boundary = Literal["wall", "outflow"]


class SystemKind(str, Enum):
    PLAIN = "plain"
    WIDTH = "width"
    PARTICLE = "particle"


@dataclass(frozen=True)
class System:
    """Which balance law is solved, with its physical constants."""
    kind: SystemKind = SystemKind.PLAIN
    gravity: float = 9.81
    g_particle: float = 1.0
    g_ambient: float = 0.0
    settling_velocity: float = 0.0
    froude_cutoff: bool = True    # plain and particle systems
    width_cutoff: bool = False    # opt-in for the width system

    def __post_init__(self):
        object.__setattr__(self, "kind", SystemKind(self.kind))
        if self.gravity <= 0:
            raise ConfigError("gravity must be positive")
        if self.g_particle <= 0:
            raise ConfigError("g_particle must be positive")
        if self.g_ambient < 0:
            raise ConfigError("g_ambient must be nonnegative")
        if self.settling_velocity < 0:
            raise ConfigError("settling velocity must be nonnegative")

    @property
    def num_fields(self) -> int:
        return 3 if self.kind is SystemKind.PARTICLE else 2

    @property
    def mass_rows(self) -> Tuple[int, ...]:
        """Rows that must stay nonnegative: depth-like first, then particle mass."""
        return (0, 1) if self.kind is SystemKind.PARTICLE else (0,)

    @property
    def momentum_row(self) -> int:
        return self.num_fields - 1

    @property
    def field_names(self) -> Tuple[str, ...]:
        return {
            SystemKind.PLAIN: ("h", "q"),
            SystemKind.WIDTH: ("A", "q"),
            SystemKind.PARTICLE: ("h", "Phi", "q"),
        }[self.kind]

    def effective_gravity(self, phi: ArrayLike) -> np.ndarray:
        """g for plain and width systems, g'_p phi + g'_a for the particle system."""
        phi = np.asarray(phi, dtype=float)
        if self.kind is SystemKind.PARTICLE:
            return self.g_particle * phi + self.g_ambient
        return np.full(phi.shape, self.gravity)


@dataclass(frozen=True)
class Problem:
    """Everything rhs needs besides the state: physics, mesh, bed, width, boundaries."""
    system: System
    grid: Grid
    bed: BedGeometry
    width: Optional[WidthGeometry] = None
    boundary: Boundary = "wall"

    def __post_init__(self):
        if self.system.kind is SystemKind.WIDTH and self.width is None:
            raise ConfigError("the width system needs a channel width")
        if self.boundary not in ("wall", "outflow"):
            raise ConfigError(f"unknown boundary: {self.boundary}")

    def check_values(self, values: ArrayLike) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        expected = (self.system.num_fields, self.grid.num_cells)
        if values.shape != expected:
            raise ReconstructionError(f"state must have shape {expected}, got {values.shape}")
        return values

    def flux_ghosts(self, q: np.ndarray):
        if self.boundary == "wall":
            return (-q[0], -q[-1])
        return (q[0], q[-1])


# -------------------------
# Point states and fluxes
# -------------------------
@dataclass(frozen=True)
class PointState:
    """Conserved values plus the primitive quantities the flux needs, at N points."""
    values: np.ndarray   # (M, N)
    h: np.ndarray        # depth
    q: np.ndarray        # volume flux (q or q~)
    u: np.ndarray        # velocity, 0 where dry
    g_eff: np.ndarray
    w: np.ndarray        # channel width at the point, 1 outside the width system

    def mirrored(self, boundary: Boundary) -> "PointState":
        if boundary == "outflow":
            return self
        values = self.values.copy()
        values[-1] = -values[-1]
        return PointState(values=values, h=self.h, q=-self.q, u=-self.u, g_eff=self.g_eff, w=self.w)

    def take(self, index) -> "PointState":
        return PointState(
            values=self.values[:, index], h=self.h[index], q=self.q[index],
            u=self.u[index], g_eff=self.g_eff[index], w=self.w[index],
        )

    @staticmethod
    def concat(*states: "PointState") -> "PointState":
        return PointState(
            values=np.concatenate([s.values for s in states], axis=1),
            h=np.concatenate([s.h for s in states]),
            q=np.concatenate([s.q for s in states]),
            u=np.concatenate([s.u for s in states]),
            g_eff=np.concatenate([s.g_eff for s in states]),
            w=np.concatenate([s.w for s in states]),
        )


def point_state(system: System, values: ArrayLike, width: ArrayLike = 1.0) -> PointState:
    """Build a PointState from conserved values alone (cell averages, test states)."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    if values.ndim == 2 and values.shape[0] != system.num_fields:
        values = values.T
    w = np.broadcast_to(np.asarray(width, dtype=float), values.shape[1:]).astype(float)
    depth_like = values[0]
    if np.any(depth_like < 0):
        raise ReconstructionError("negative depth in point state")
    h = np.divide(depth_like, w, out=np.zeros_like(depth_like), where=w > 0) if system.kind is SystemKind.WIDTH else depth_like
    q = values[-1]
    u = np.divide(q, depth_like, out=np.zeros_like(q), where=depth_like > 0)
    if system.kind is SystemKind.PARTICLE:
        phi = np.divide(values[1], h, out=np.zeros_like(h), where=h > 0)
    else:
        phi = np.zeros_like(h)
    return PointState(values=values, h=h, q=q, u=u, g_eff=system.effective_gravity(phi), w=w)


def physical_flux(system: System, state: PointState) -> np.ndarray:
    """Analytic flux vector at every point of `state`, shape (M, N)."""
    rows = [state.q]
    if system.kind is SystemKind.PARTICLE:
        rows.append(state.values[1] * state.u)
    rows.append(state.q * state.u + 0.5 * state.g_eff * state.w * state.h * state.h)
    return np.stack(rows)


def wave_speeds(left: PointState, right: PointState) -> Tuple[np.ndarray, np.ndarray]:
    c_left = np.sqrt(left.g_eff * left.h)
    c_right = np.sqrt(right.g_eff * right.h)
    a_plus = np.maximum(np.maximum(left.u + c_left, right.u + c_right), 0.0)
    a_minus = np.minimum(np.minimum(left.u - c_left, right.u - c_right), 0.0)
    return a_minus, a_plus


def numerical_flux(system: System, left: PointState, right: PointState):
    """Central-upwind flux between `left` and `right` states.

    Returns (flux (M, N), a_minus, a_plus). Written as a correction of the
    left physical flux so that equal states give exactly F(Q).
    """
    f_left = physical_flux(system, left)
    f_right = physical_flux(system, right)
    a_minus, a_plus = wave_speeds(left, right)
    span = a_plus - a_minus
    jump = (f_left - f_right) + a_plus * (right.values - left.values)
    correction = np.divide(a_minus * jump, span, out=np.zeros_like(jump), where=span > 0)
    flux = np.where(span > 0, f_left + correction, 0.0)
    return flux, a_minus, a_plus


# -------------------------
# Sources
# -------------------------
def bed_source(
    system: System,
    grid: Grid,
    bed: BedGeometry,
    h_left: np.ndarray,
    h_right: np.ndarray,
    *,
    width: Optional[WidthGeometry] = None,
    g_left: Optional[np.ndarray] = None,
    g_right: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Momentum source per cell from the cell's own edge depths.

    The bed interface values are the inner-side ones b+_{j-1/2}, b-_{j+1/2}.
    For the particle system g is the mean of the two edge values of g'_T.
    """
    dx = grid.cell_widths
    if system.kind is SystemKind.PARTICLE:
        if g_left is None or g_right is None:
            raise ReconstructionError("particle bed source needs edge gravities")
        g = 0.5 * (g_left + g_right)
    else:
        g = system.gravity

    if system.kind is SystemKind.WIDTH:
        if width is None:
            raise ReconstructionError("width bed source needs a channel width")
        weighted = 0.5 * (width.w_left * h_left + width.w_right * h_right)
        squares = 0.5 * (h_left * h_left + h_right * h_right)
        return -g * weighted * bed.db_cell / dx + 0.5 * g * squares * (width.w_right - width.w_left) / dx
    return -g * 0.5 * (h_left + h_right) * bed.db_cell / dx


def settling_sink(h: ArrayLike, Phi: ArrayLike, settling_velocity: float) -> np.ndarray:
    """-v_s phi per cell; 0 in dry cells."""
    if settling_velocity < 0:
        raise ConfigError("settling velocity must be nonnegative")
    h = np.asarray(h, dtype=float)
    Phi = np.asarray(Phi, dtype=float)
    phi = np.divide(Phi, h, out=np.zeros_like(Phi), where=h > 0)
    return -settling_velocity * phi


# -------------------------
# Reconstruction of a full state
# -------------------------
def _cutoff(problem: Problem, q: np.ndarray, g_eff: np.ndarray) -> np.ndarray:
    """Froude cutoff B per cell; a cell without gravity but with flux counts as infinitely fast."""
    Fr = problem.grid.froude_ref
    B = np.zeros_like(q)
    active = g_eff > 0
    if np.any(active):
        B[active] = froude_cutoff(q[active], g_eff[active], Fr[active])
    B[~active & (q != 0)] = np.inf
    return B


def reconstruct_state(problem: Problem, values: ArrayLike) -> EdgeReconstruction:
    """Run the reconstruction pipeline of the problem's system on cell averages."""
    system, grid, bed = problem.system, problem.grid, problem.bed
    values = problem.check_values(values)
    q = values[-1]
    ghosts = problem.flux_ghosts(q)

    if system.kind is SystemKind.WIDTH:
        widths = problem.width
        A = values[0]
        B = None
        if system.width_cutoff:
            u_proxy = np.divide(q, widths.w_cell, out=np.zeros_like(q), where=widths.w_cell > 0)
            B = froude_cutoff(u_proxy, system.gravity, grid.froude_ref)
        recon = reconstruct_area_width(grid, widths, bed, A, B)
        flux = reconstruct_width_flux(grid, q, recon, widths, A, ghosts=ghosts)
        return EdgeReconstruction(
            depth=recon.depth, flux=flux, h_left=recon.h_left, h_right=recon.h_right,
            depth_like_left=recon.A_left, depth_like_right=recon.A_right, width=recon,
        )

    h = values[0]
    concentration = None
    if system.kind is SystemKind.PARTICLE:
        phi = np.divide(values[1], h, out=np.zeros_like(h), where=h > 0)
        g_eff = system.effective_gravity(phi)
    else:
        g_eff = np.full(h.shape, system.gravity)
    B = _cutoff(problem, q, g_eff) if system.froude_cutoff else None
    depth = reconstruct_depth(grid, bed, h, B)
    if system.kind is SystemKind.PARTICLE:
        concentration = reconstruct_concentration(grid, values[1], depth)
    flux = reconstruct_flux(grid, q, depth, ghosts=ghosts)
    return EdgeReconstruction(
        depth=depth, flux=flux, h_left=depth.h_left, h_right=depth.h_right,
        depth_like_left=depth.h_left, depth_like_right=depth.h_right, concentration=concentration,
    )


def edge_states(problem: Problem, recon: EdgeReconstruction) -> Tuple[PointState, PointState]:
    """(left edge, right edge) states of every cell."""
    system = problem.system
    flux = recon.flux
    if system.kind is SystemKind.WIDTH:
        w_left, w_right = problem.width.w_left, problem.width.w_right
    else:
        w_left = w_right = np.ones(problem.grid.num_cells)

    def build(depth_like, h, q, u, w, conc_edge, phi_edge):
        rows = [depth_like]
        if system.kind is SystemKind.PARTICLE:
            rows.append(conc_edge)
        rows.append(q)
        g_eff = system.effective_gravity(phi_edge)
        return PointState(values=np.stack(rows), h=h, q=q, u=u, g_eff=g_eff, w=np.asarray(w, dtype=float))

    conc = recon.concentration
    zeros = np.zeros(problem.grid.num_cells)
    left = build(
        recon.depth_like_left, recon.h_left, flux.q_left, flux.u_left, w_left,
        conc.Phi_left if conc else None, conc.phi_left if conc else zeros,
    )
    right = build(
        recon.depth_like_right, recon.h_right, flux.q_right, flux.u_right, w_right,
        conc.Phi_right if conc else None, conc.phi_right if conc else zeros,
    )
    return left, right


def interface_states(problem: Problem, left_edges: PointState, right_edges: PointState) -> Tuple[PointState, PointState]:
    """States on the two sides of every interface, J+1 entries each."""
    n = problem.grid.num_cells
    minus = PointState.concat(left_edges.take(slice(0, 1)).mirrored(problem.boundary), right_edges)
    plus = PointState.concat(left_edges, right_edges.take(slice(n - 1, n)).mirrored(problem.boundary))
    return minus, plus


# -------------------------
# Right-hand side
# -------------------------
@dataclass(frozen=True)
class StepReport:
    """Per-stage record of what rhs computed.

    interface_flux: (M, J+1); hydrostatic: the part of the momentum flux that
    is never drained, evaluated at the upwind face; cell_source: (M, J).
    draining is filled in by the stepper.
    """
    interface_flux: np.ndarray
    hydrostatic: np.ndarray
    cell_source: np.ndarray
    a_minus: np.ndarray
    a_plus: np.ndarray
    recon: EdgeReconstruction
    draining: Optional["DrainingFactors"] = None

    @property
    def wave_speeds(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.a_minus, self.a_plus


def rhs(problem: Problem, values: ArrayLike) -> Tuple[np.ndarray, StepReport]:
    """dQ/dt = -(F_{j+1/2} - F_{j-1/2}) / dx_j + Psi_j, plus the StepReport."""
    system, grid, bed = problem.system, problem.grid, problem.bed
    values = problem.check_values(values)
    recon = reconstruct_state(problem, values)
    left_edges, right_edges = edge_states(problem, recon)
    minus, plus = interface_states(problem, left_edges, right_edges)
    flux, a_minus, a_plus = numerical_flux(system, minus, plus)

    if problem.boundary == "wall":
        for row in system.mass_rows:
            flux[row, 0] = 0.0
            flux[row, -1] = 0.0

    mass = flux[0]
    upwind_h = np.where(mass < 0, plus.h, minus.h)
    upwind_g = np.where(mass < 0, plus.g_eff, minus.g_eff)
    upwind_w = np.where(mass < 0, plus.w, minus.w)
    hydrostatic = 0.5 * upwind_g * upwind_w * upwind_h * upwind_h

    source = np.zeros_like(values)
    source[system.momentum_row] = bed_source(
        system, grid, bed, recon.h_left, recon.h_right,
        width=problem.width, g_left=left_edges.g_eff, g_right=right_edges.g_eff,
    )
    if system.kind is SystemKind.PARTICLE:
        source[1] = settling_sink(values[0], values[1], system.settling_velocity)

    dQdt = -(flux[:, 1:] - flux[:, :-1]) / grid.cell_widths + source
    report = StepReport(
        interface_flux=flux, hydrostatic=hydrostatic, cell_source=source,
        a_minus=a_minus, a_plus=a_plus, recon=recon,
    )
    return dQdt, report
