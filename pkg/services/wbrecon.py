# services/wbrecon.py
"""
Well-balanced, self-monotone interface reconstruction.

Depth is reconstructed as a convex blend of a limited reconstruction in h and
one in the surface elevation eta = h + b. The blend weight gamma follows the
ratio xi of the smallest one-sided depth to the local bed variation: pure h
where the fluid is thin compared with the bed, pure eta where it is deep, so
lake-at-rest states keep a flat surface while thin films keep positive,
self-monotone edge depths.

On top of the depth sit:
  - a suppressed flux reconstruction (kappa in [0, 1]) that bounds edge velocities,
  - a width-weighted variant for channels of varying width,
  - a product reconstruction of particle mass Phi = phi * h that keeps edge
    concentrations inside the local range.

Pipeline order per stage: depth (needs B from q and phi), then Phi (needs the
depth gradient), then q (needs only the cell depths). Boundary cells see
zero-gradient ghost values unless a ghost value is passed explicitly.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from numpy.typing import ArrayLike

from core.exceptions import ReconstructionError
from core.limiter import field_extremes, field_lower_derivatives, slope, slope_derivatives
from core.mesh import BedGeometry, Grid, WidthGeometry

logger = logging.getLogger(__name__)

Ghosts = Tuple[Optional[float], Optional[float]]
NO_GHOSTS: Ghosts = (None, None)


# -------------------------
# Result types
# -------------------------
@dataclass(frozen=True)
class DepthRecon:
    h: np.ndarray
    grad_h: np.ndarray
    h_left: np.ndarray
    h_right: np.ndarray
    gamma: np.ndarray
    xi: np.ndarray
    db_up: np.ndarray
    h_down: np.ndarray
    h_up: np.ndarray
    sigma_h: np.ndarray
    sigma_eta: np.ndarray


@dataclass(frozen=True)
class FluxRecon:
    grad_q: np.ndarray
    q_left: np.ndarray
    q_right: np.ndarray
    kappa: np.ndarray
    u_left: np.ndarray
    u_right: np.ndarray


@dataclass(frozen=True)
class ConcenRecon:
    phi: np.ndarray
    grad_Phi: np.ndarray
    Phi_left: np.ndarray
    Phi_right: np.ndarray
    phi_left: np.ndarray
    phi_right: np.ndarray
    phi_down: np.ndarray
    phi_up: np.ndarray


@dataclass(frozen=True)
class WidthRecon:
    depth: DepthRecon        # reconstruction of h = A / w
    grad_A: np.ndarray
    A_left: np.ndarray
    A_right: np.ndarray
    h_left: np.ndarray
    h_right: np.ndarray
    degenerate: np.ndarray   # cells with a zero-width edge


@dataclass(frozen=True)
class DiagnosticRecord:
    R: np.ndarray
    S: np.ndarray
    N: np.ndarray


# -------------------------
# Helpers
# -------------------------
def _pad(values: np.ndarray, ghosts: Ghosts = NO_GHOSTS) -> np.ndarray:
    left = values[0] if ghosts[0] is None else ghosts[0]
    right = values[-1] if ghosts[1] is None else ghosts[1]
    return np.concatenate(([left], values, [right]))


def _stencil(values: np.ndarray, ghosts: Ghosts = NO_GHOSTS):
    padded = _pad(values, ghosts)
    return padded[:-2], padded[1:-1], padded[2:]


def _dry_ratio(num, den) -> np.ndarray:
    """num / den with the dry convention: 0 wherever den == 0."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    return np.divide(num, den, out=np.zeros(np.broadcast(num, den).shape), where=den > 0)


def _as_cells(values: ArrayLike, grid: Grid, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.shape != (grid.num_cells,):
        raise ReconstructionError(f"{name} must have one value per cell ({grid.num_cells}), got shape {arr.shape}")
    return arr


def _check_nonnegative(values: np.ndarray, name: str) -> None:
    bad = np.flatnonzero(values < 0)
    if bad.size:
        raise ReconstructionError(f"negative {name} in cell {int(bad[0])}")


# -------------------------
# Scalar building blocks
# -------------------------
def gamma_of_xi(xi: ArrayLike, G: ArrayLike):
    """Blend weight: 0 up to xi = 1, linear with slope G, 1 from xi = 1 + 1/G on."""
    xi = np.asarray(xi, dtype=float)
    G = np.asarray(G, dtype=float)
    with np.errstate(invalid="ignore"):
        ramp = G * (xi - 1.0)
    out = np.where(xi >= 1.0 + 1.0 / G, 1.0, np.where(xi <= 1.0, 0.0, ramp))
    return float(out) if out.ndim == 0 else out


def froude_cutoff(q: ArrayLike, g_eff: ArrayLike, Fr: ArrayLike):
    """B = (q^2 / (Fr^2 g_eff))^(1/3): depth below which the cell counts as fast."""
    g_eff = np.asarray(g_eff, dtype=float)
    Fr = np.asarray(Fr, dtype=float)
    if np.any(g_eff <= 0):
        raise ReconstructionError("effective gravity must be positive")
    if np.any(Fr <= 0):
        raise ReconstructionError("reference Froude number must be positive")
    q = np.asarray(q, dtype=float)
    out = np.cbrt(q * q / (Fr * Fr * g_eff))
    return float(out) if out.ndim == 0 else out


def suppression_factor(h_prev, h_mid, h_next, K_prev, K_next):
    """kappa = min(1, K_prev h_mid / h_prev, K_next h_mid / h_next), 1/0 = inf, 0/0 = 0."""
    h_prev, h_mid, h_next = (np.asarray(v, dtype=float) for v in (h_prev, h_mid, h_next))

    def ratio(K, den):
        num = np.asarray(K, dtype=float) * h_mid
        shape = np.broadcast(num, den).shape
        fallback = np.where(np.broadcast_to(h_mid, shape) > 0, np.inf, 0.0)
        return np.divide(num, den, out=fallback, where=den > 0)

    out = np.minimum(1.0, np.minimum(ratio(K_prev, h_prev), ratio(K_next, h_next)))
    return float(out) if out.ndim == 0 else out


# -------------------------
# Depth
# -------------------------
def reconstruct_depth(grid: Grid, bed: BedGeometry, h: ArrayLike, B: Optional[ArrayLike] = None) -> DepthRecon:
    h = _as_cells(h, grid, "depth")
    _check_nonnegative(h, "depth")
    B = np.zeros(grid.num_cells) if B is None else _as_cells(B, grid, "cutoff B")
    p = grid.slope_params()
    dx = grid.cell_widths

    h_prev, _, h_next = _stencil(h)
    eta = h + bed.b_cell
    eta_prev, _, eta_next = _stencil(eta)

    sigma_h = slope(h_prev, h, h_next, p)
    sigma_eta = slope(eta_prev, eta, eta_next, p)
    h_down, h_up = field_extremes(h_prev, h, h_next, p)

    db_up = np.maximum(bed.db_up_geo, B)
    with np.errstate(divide="ignore", invalid="ignore"):
        xi = np.where(db_up > 0, h_down / db_up, np.inf)
    gamma = gamma_of_xi(xi, grid.gain)

    grad_h = (1.0 - gamma) * sigma_h + gamma * (sigma_eta - bed.db_cell / dx)
    half = 0.5 * dx
    # edges are >= (1 - 1/xi_C) h_down >= 0; the clip only removes roundoff
    h_left = np.maximum(h - half * grad_h, 0.0)
    h_right = np.maximum(h + half * grad_h, 0.0)
    return DepthRecon(
        h=h, grad_h=grad_h, h_left=h_left, h_right=h_right, gamma=gamma, xi=xi,
        db_up=db_up, h_down=h_down, h_up=h_up, sigma_h=sigma_h, sigma_eta=sigma_eta,
    )


def depth_bounds(grid: Grid, depth: DepthRecon) -> Tuple[np.ndarray, np.ndarray]:
    """Lower and upper bounds every edge depth of the cell must respect."""
    xi_c = grid.xi_critical
    return (1.0 - 1.0 / xi_c) * depth.h_down, depth.h_up + depth.h_down / xi_c


# -------------------------
# Flux
# -------------------------
def reconstruct_flux(
    grid: Grid,
    q: ArrayLike,
    depth: DepthRecon,
    *,
    ghosts: Ghosts = NO_GHOSTS,
    weights: Optional[np.ndarray] = None,
) -> FluxRecon:
    """Suppressed minmod reconstruction of the volume flux.

    `weights` are the depth-like cell values used for kappa (h by default,
    A for the width system); `ghosts` are the q values beyond each boundary.
    """
    q = _as_cells(q, grid, "flux")
    w = depth.h if weights is None else weights
    w_prev, _, w_next = _stencil(w)
    kappa = suppression_factor(w_prev, w, w_next, grid.suppress_left, grid.suppress_right)

    q_prev, _, q_next = _stencil(q, ghosts)
    grad_q = kappa * slope(q_prev, q, q_next, grid.slope_params())
    half = 0.5 * grid.cell_widths
    q_left = q - half * grad_q
    q_right = q + half * grad_q
    return FluxRecon(
        grad_q=grad_q, q_left=q_left, q_right=q_right, kappa=kappa,
        u_left=_dry_ratio(q_left, depth.h_left), u_right=_dry_ratio(q_right, depth.h_right),
    )


def interface_velocities(depth: DepthRecon, flux: FluxRecon) -> Tuple[np.ndarray, np.ndarray]:
    """u = q / h at each edge; 0 on dry edges."""
    return _dry_ratio(flux.q_left, depth.h_left), _dry_ratio(flux.q_right, depth.h_right)


def velocity_bounds(
    grid: Grid,
    h: ArrayLike,
    q: ArrayLike,
    *,
    ghosts: Ghosts = NO_GHOSTS,
    width: Optional[WidthGeometry] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Upper bounds on |u| at the left and right edge of every cell.

    h and q are the depth-like and flux cell averages the flux reconstruction
    saw (A and q~ for the width system, in which case `width` must be given).
    """
    h = np.asarray(h, dtype=float)
    u = _dry_ratio(q, h)
    q_prev, _, q_next = _stencil(np.asarray(q, dtype=float), ghosts)
    h_prev, _, h_next = _stencil(h)
    u_prev = _dry_ratio(q_prev, h_prev)
    u_next = _dry_ratio(q_next, h_next)

    factor = (grid.gain + 1.0) / (1.0 - grid.alpha_up)
    left = factor * (np.abs(u) + grid.suppress_left * grid.alpha_left * np.abs(u_prev))
    right = factor * (np.abs(u) + grid.suppress_right * grid.alpha_right * np.abs(u_next))
    if width is not None:
        # no bound survives in a cell with a zero-width edge
        open_cell = width.w_down > 0
        ratio = _dry_ratio(width.w_cell, width.w_down)
        left = np.where(open_cell, left * ratio, np.inf)
        right = np.where(open_cell, right * ratio, np.inf)
    return left, right


def velocity_bound_violations(
    grid: Grid,
    h: ArrayLike,
    q: ArrayLike,
    u_left: np.ndarray,
    u_right: np.ndarray,
    *,
    ghosts: Ghosts = NO_GHOSTS,
    width: Optional[WidthGeometry] = None,
    rtol: float = 1e-10,
) -> np.ndarray:
    """Indices of wet cells whose edge velocities exceed their bound."""
    left, right = velocity_bounds(grid, h, q, ghosts=ghosts, width=width)
    wet = np.asarray(h) > 0
    bad = wet & ((np.abs(u_left) > left * (1.0 + rtol)) | (np.abs(u_right) > right * (1.0 + rtol)))
    return np.flatnonzero(bad)


# -------------------------
# Concentration
# -------------------------
def reconstruct_concentration(grid: Grid, Phi: ArrayLike, depth: DepthRecon) -> ConcenRecon:
    """Product reconstruction of Phi = phi h keeping edge phi within [phi_down, phi_up]."""
    Phi = _as_cells(Phi, grid, "particle mass")
    _check_nonnegative(Phi, "particle mass")
    h = depth.h
    phi = _dry_ratio(Phi, h)
    p = grid.slope_params()
    phi_prev, _, phi_next = _stencil(phi)
    sigma_phi = slope(phi_prev, phi, phi_next, p)
    phi_down, phi_up = field_extremes(phi_prev, phi, phi_next, p)

    half = 0.5 * grid.cell_widths
    grad_Phi = sigma_phi * (h - half * np.abs(depth.grad_h)) + phi * depth.grad_h
    Phi_left = np.maximum(Phi - half * grad_Phi, 0.0)
    Phi_right = np.maximum(Phi + half * grad_Phi, 0.0)
    return ConcenRecon(
        phi=phi, grad_Phi=grad_Phi, Phi_left=Phi_left, Phi_right=Phi_right,
        phi_left=_dry_ratio(Phi_left, depth.h_left), phi_right=_dry_ratio(Phi_right, depth.h_right),
        phi_down=phi_down, phi_up=phi_up,
    )


# -------------------------
# Channel of varying width
# -------------------------
def reconstruct_area_width(
    grid: Grid, widths: WidthGeometry, bed: BedGeometry, A: ArrayLike, B: Optional[ArrayLike] = None,
) -> WidthRecon:
    A = _as_cells(A, grid, "area")
    _check_nonnegative(A, "area")
    narrow = np.flatnonzero(widths.w_cell <= 0)
    if narrow.size:
        raise ReconstructionError(f"channel width must be positive in cell {int(narrow[0])}")
    h = A / widths.w_cell
    depth = reconstruct_depth(grid, bed, h, B)

    grad_A = depth.grad_h * widths.w_down + h * widths.w_gradient
    half = 0.5 * grid.cell_widths
    A_left = np.maximum(A - half * grad_A, 0.0)
    A_right = np.maximum(A + half * grad_A, 0.0)
    h_left = np.where(widths.w_left > 0, _dry_ratio(A_left, widths.w_left), h)
    h_right = np.where(widths.w_right > 0, _dry_ratio(A_right, widths.w_right), h)
    return WidthRecon(
        depth=depth, grad_A=grad_A, A_left=A_left, A_right=A_right,
        h_left=h_left, h_right=h_right, degenerate=widths.w_down == 0,
    )


def reconstruct_width_flux(
    grid: Grid, qt: ArrayLike, recon: WidthRecon, widths: WidthGeometry, A: ArrayLike, *, ghosts: Ghosts = NO_GHOSTS,
) -> FluxRecon:
    """Flux q~ = u A for the width system, suppressed by area ratios.

    A cell with a zero-width edge puts all of its flux on the open edge, which
    keeps u constant across the cell.
    """
    qt = _as_cells(qt, grid, "flux")
    A = np.asarray(A, dtype=float)
    base = reconstruct_flux(grid, qt, recon.depth, ghosts=ghosts, weights=A)
    closed_left = widths.w_left == 0
    closed_right = widths.w_right == 0
    dx = grid.cell_widths
    grad_q = np.where(closed_left, 2.0 * qt / dx, np.where(closed_right, -2.0 * qt / dx, base.grad_q))
    q_left = np.where(closed_left, 0.0, np.where(closed_right, 2.0 * qt, base.q_left))
    q_right = np.where(closed_right, 0.0, np.where(closed_left, 2.0 * qt, base.q_right))

    u_cell = _dry_ratio(qt, A)
    u_left = np.where(closed_left, u_cell, _dry_ratio(q_left, recon.A_left))
    u_right = np.where(closed_right, u_cell, _dry_ratio(q_right, recon.A_right))
    return FluxRecon(grad_q=grad_q, q_left=q_left, q_right=q_right, kappa=base.kappa, u_left=u_left, u_right=u_right)


# -------------------------
# Diagnostics used by the lemma test suites
# -------------------------
def proof_diagnostics(
    grid: Grid, bed: BedGeometry, h: ArrayLike, B: Optional[ArrayLike] = None, j: Optional[int] = None,
):
    """R, S and N of the right edge of every cell (or of cell j).

    S and N use the exact branch derivatives of the limiter and of h_down, so
    they are one-sided at ties. R is 0 where the bed variation scale is 0;
    S (N) is +inf where h_down does not depend on h_j (h_{j+1}).
    """
    depth = reconstruct_depth(grid, bed, h, B)
    p = grid.slope_params()
    half = 0.5 * grid.cell_widths
    h_prev, h_mid, h_next = _stencil(depth.h)
    eta = depth.h + bed.b_cell
    eta_prev, _, eta_next = _stencil(eta)

    with np.errstate(divide="ignore", invalid="ignore"):
        R = np.where(
            depth.db_up > 0,
            (0.5 * bed.db_cell + half * (depth.sigma_h - depth.sigma_eta)) / depth.db_up,
            0.0,
        )
        _, dsh_mid, dsh_next = slope_derivatives(h_prev, h_mid, h_next, p)
        _, dse_mid, dse_next = slope_derivatives(eta_prev, eta, eta_next, p)
        _, ddown_mid, ddown_next = field_lower_derivatives(h_prev, h_mid, h_next, p)
        gamma = depth.gamma
        S_num = 1.0 + half * ((1.0 - gamma) * dsh_mid + gamma * dse_mid)
        N_num = half * ((1.0 - gamma) * dsh_next + gamma * dse_next)
        S = np.where(ddown_mid > 0, S_num / ddown_mid, np.inf)
        N = np.where(ddown_next > 0, N_num / ddown_next, np.inf)

    if j is not None:
        return DiagnosticRecord(R=float(R[j]), S=float(S[j]), N=float(N[j]))
    return DiagnosticRecord(R=R, S=S, N=N)


# -------------------------
# Full pipeline for one stage
# -------------------------
@dataclass(frozen=True)
class EdgeReconstruction:
    """Interface values of every field for one stage, plus per-cell diagnostics.

    h_left/h_right are the depths fed to the flux (for the width system these
    come from A / w). depth_like_left/right are the conserved depth-like
    quantity (h, or A for the width system).
    """
    depth: DepthRecon
    flux: FluxRecon
    h_left: np.ndarray
    h_right: np.ndarray
    depth_like_left: np.ndarray
    depth_like_right: np.ndarray
    concentration: Optional[ConcenRecon] = None
    width: Optional[WidthRecon] = None
