# services/altrecon.py
"""
Three positivity fixes for the surface-elevation reconstruction, kept small
and used side by side with services.wbrecon in the comparison sweep.

kurganov_levy  eta-minmod where the cell and both neighbours are deeper than
               a threshold, h-minmod elsewhere; a negative edge is lifted to 0
               and the other edge takes the rest of the cell's mass.
chertock       eta-minmod; cells with a negative edge become constant.
bollermann     eta-minmod in wet cells; a cell without enough fluid to cover
               its high bed edge, or whose eta-minmod edge goes negative, holds
               a wedge against its low edge and is dry beyond it.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
from numpy.typing import ArrayLike

from core.exceptions import ReconstructionError
from core.limiter import slope
from core.mesh import BedGeometry, Grid

logger = logging.getLogger(__name__)

AltKind = Literal["kurganov_levy", "chertock", "bollermann"]


@dataclass(frozen=True)
class AltScheme:
    kind: AltKind
    depth_threshold: float = 0.75   # kurganov_levy only

    def __post_init__(self):
        if self.kind not in ("kurganov_levy", "chertock", "bollermann"):
            raise ReconstructionError(f"unknown reconstruction: {self.kind}")
        if self.kind == "kurganov_levy" and not self.depth_threshold > 0:
            raise ReconstructionError("depth threshold must be positive")


@dataclass(frozen=True)
class AltRecon:
    h_left: np.ndarray
    h_right: np.ndarray
    wet_length: Optional[np.ndarray] = None   # bollermann: wet part of each cell


def _neighbours(values: np.ndarray):
    padded = np.pad(values, 1, mode="edge")
    return padded[:-2], padded[2:]


def _checked(h: ArrayLike, grid: Grid) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    if h.shape != (grid.num_cells,):
        raise ReconstructionError(f"depth must have one value per cell ({grid.num_cells})")
    bad = np.flatnonzero(h < 0)
    if bad.size:
        raise ReconstructionError(f"negative depth in cell {int(bad[0])}")
    return h


def _gradients(grid: Grid, bed: BedGeometry, h: np.ndarray):
    """(h-minmod gradient, eta-minmod gradient of h) per cell."""
    p = grid.slope_params()
    h_prev, h_next = _neighbours(h)
    eta = h + bed.b_cell
    eta_prev, eta_next = _neighbours(eta)
    grad_h = slope(h_prev, h, h_next, p)
    grad_eta = slope(eta_prev, eta, eta_next, p) - bed.db_cell / grid.cell_widths
    return np.asarray(grad_h, dtype=float), np.asarray(grad_eta, dtype=float)


def _edges(grid: Grid, h: np.ndarray, grad: np.ndarray):
    half = 0.5 * grid.cell_widths
    return h - half * grad, h + half * grad


def kurganov_levy(grid: Grid, bed: BedGeometry, h: ArrayLike, K_threshold: float = 0.75) -> AltRecon:
    AltScheme("kurganov_levy", K_threshold)
    h = _checked(h, grid)
    grad_h, grad_eta = _gradients(grid, bed, h)
    h_prev, h_next = _neighbours(h)
    deep = np.minimum(np.minimum(h_prev, h), h_next) > K_threshold
    left, right = _edges(grid, h, np.where(deep, grad_eta, grad_h))
    # lift a negative edge to zero, keeping the cell mass
    left, right = (
        np.where(left < 0, 0.0, np.where(right < 0, 2.0 * h, left)),
        np.where(right < 0, 0.0, np.where(left < 0, 2.0 * h, right)),
    )
    return AltRecon(h_left=left, h_right=right)


def chertock(grid: Grid, bed: BedGeometry, h: ArrayLike) -> AltRecon:
    h = _checked(h, grid)
    _, grad_eta = _gradients(grid, bed, h)
    left, right = _edges(grid, h, grad_eta)
    negative = (left < 0) | (right < 0)
    return AltRecon(h_left=np.where(negative, h, left), h_right=np.where(negative, h, right))


def bollermann(grid: Grid, bed: BedGeometry, h: ArrayLike) -> AltRecon:
    """Edge depths and wet length per cell; the wedge holds exactly h_j dx_j."""
    h = _checked(h, grid)
    dx = grid.cell_widths
    _, grad_eta = _gradients(grid, bed, h)
    left, right = _edges(grid, h, grad_eta)

    partial = (h < 0.5 * np.abs(bed.db_cell)) | (left < 0) | (right < 0)
    low_is_left = bed.b_left <= bed.b_right
    eta = h + bed.b_cell
    eta_prev, eta_next = _neighbours(eta)
    eta_low = np.where(low_is_left, eta_prev, eta_next)
    b_low = np.where(low_is_left, bed.b_left, bed.b_right)
    d = np.where(h > 0, np.maximum(eta_low - b_low, 2.0 * h), 0.0)
    wet = np.divide(2.0 * h * dx, d, out=np.zeros_like(h), where=d > 0)

    left = np.where(partial, np.where(low_is_left, d, 0.0), left)
    right = np.where(partial, np.where(low_is_left, 0.0, d), right)
    wet_length = np.where(partial, wet, dx)
    if np.any(partial):
        logger.debug("[AltRecon] %d partially wet cells", int(partial.sum()))
    return AltRecon(h_left=left, h_right=right, wet_length=wet_length)


def alt_reconstruct(scheme: AltScheme, grid: Grid, bed: BedGeometry, h: ArrayLike) -> AltRecon:
    if scheme.kind == "kurganov_levy":
        return kurganov_levy(grid, bed, h, scheme.depth_threshold)
    if scheme.kind == "chertock":
        return chertock(grid, bed, h)
    return bollermann(grid, bed, h)
