# core/mesh.py
"""
Spatial discretisation: interfaces, cell widths, per-cell scheme parameters,
bed and channel-width geometry.

Everything in this module depends on geometry only, never on the fluid state.
Objects are immutable once built; all derived arrays are computed up front.
Boundary cells see one ghost cell on each side that repeats the adjacent
cell's bed, so bed differences across the domain ends vanish.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from core.exceptions import GridError
from core.limiter import SlopeParams
from schemas import GridParams

logger = logging.getLogger(__name__)

BED_CSV_COLUMNS = ("x", "b_minus", "b_plus")


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


def _pad_edge(values: np.ndarray) -> np.ndarray:
    return np.concatenate(([values[0]], values, [values[-1]]))


# -------------------------
# Grid
# -------------------------
@dataclass(frozen=True)
class Grid:
    interfaces: np.ndarray    # J+1
    cell_widths: np.ndarray   # J
    alpha_minus: np.ndarray   # J+1, α⁻ used by the cell to the left of each interface
    alpha_plus: np.ndarray    # J+1, α⁺ used by the cell to the right
    alpha_center: np.ndarray  # J
    gain: np.ndarray          # J, G_j
    K_minus: np.ndarray       # J+1
    K_plus: np.ndarray        # J+1
    froude_ref: np.ndarray    # J
    gravity: float

    @property
    def num_cells(self) -> int:
        return self.cell_widths.size

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.interfaces[:-1] + self.interfaces[1:])

    @property
    def alpha_left(self) -> np.ndarray:
        """α⁺_{j-1/2} per cell."""
        return self.alpha_plus[:-1]

    @property
    def alpha_right(self) -> np.ndarray:
        """α⁻_{j+1/2} per cell."""
        return self.alpha_minus[1:]

    @property
    def alpha_up(self) -> np.ndarray:
        return np.maximum(self.alpha_left, self.alpha_right)

    @property
    def suppress_left(self) -> np.ndarray:
        return self.K_plus[:-1]

    @property
    def suppress_right(self) -> np.ndarray:
        return self.K_minus[1:]

    @property
    def xi_critical(self) -> np.ndarray:
        return 1.0 + 1.0 / self.gain

    def slope_params(self) -> SlopeParams:
        return SlopeParams(self.alpha_left, self.alpha_center, self.alpha_right, self.cell_widths)

    def reversed(self) -> "Grid":
        """Mirror image under x -> -x."""
        return Grid(
            interfaces=_frozen(-self.interfaces[::-1]),
            cell_widths=_frozen(self.cell_widths[::-1]),
            alpha_minus=_frozen(self.alpha_plus[::-1]),
            alpha_plus=_frozen(self.alpha_minus[::-1]),
            alpha_center=_frozen(self.alpha_center[::-1]),
            gain=_frozen(self.gain[::-1]),
            K_minus=_frozen(self.K_plus[::-1]),
            K_plus=_frozen(self.K_minus[::-1]),
            froude_ref=_frozen(self.froude_ref[::-1]),
            gravity=self.gravity,
        )


def _per(value, n: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(n, float(arr))
    if arr.shape != (n,):
        raise GridError(f"{name} must be a scalar or have length {n}, got {arr.size}")
    return arr.copy()


def build_grid(interfaces: Sequence[float], params: Optional[GridParams] = None) -> Grid:
    """Validate interfaces and parameters and assemble a Grid."""
    params = params or GridParams()
    x = np.asarray(interfaces, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise GridError("at least two interfaces are required")
    if not np.all(np.isfinite(x)):
        raise GridError("interfaces must be finite")
    dx = np.diff(x)
    if np.any(dx <= 0):
        raise GridError("non-increasing interfaces")
    n_cells, n_faces = dx.size, x.size

    alpha_minus = _per(params.alpha_minus, n_faces, "alpha_minus")
    alpha_plus = _per(params.alpha_plus, n_faces, "alpha_plus")
    alpha_center = _per(params.alpha_center, n_cells, "alpha_center")
    # only the values a cell actually uses are constrained
    for name, used in (("alpha_plus", alpha_plus[:-1]), ("alpha_minus", alpha_minus[1:]), ("alpha_center", alpha_center)):
        if np.any((used <= 0) | (used >= 1)):
            raise GridError(f"{name} must lie strictly inside (0, 1)")

    alpha_up = np.maximum(alpha_plus[:-1], alpha_minus[1:])
    if params.gain is None:
        gain = 1.0 - alpha_up
    else:
        gain = _per(params.gain, n_cells, "gain")
        if np.any((gain <= 0) | (gain > 1.0 - alpha_up)):
            raise GridError("gain G must lie in (0, 1 - max edge alpha]")

    K_minus = _per(params.K_minus, n_faces, "K_minus")
    K_plus = _per(params.K_plus, n_faces, "K_plus")
    if np.any(K_minus <= 0) or np.any(K_plus <= 0):
        raise GridError("suppression thresholds K must be positive")

    if params.froude_ref is None:
        froude_ref = (1.0 + 1.0 / gain) ** 1.5
    else:
        froude_ref = _per(params.froude_ref, n_cells, "froude_ref")
        if np.any(froude_ref <= 0):
            raise GridError("reference Froude number must be positive")
    if params.gravity <= 0:
        raise GridError("gravity must be positive")

    logger.debug("[Mesh] built grid: %d cells on [%g, %g]", n_cells, x[0], x[-1])
    return Grid(
        interfaces=_frozen(x),
        cell_widths=_frozen(dx),
        alpha_minus=_frozen(alpha_minus),
        alpha_plus=_frozen(alpha_plus),
        alpha_center=_frozen(alpha_center),
        gain=_frozen(gain),
        K_minus=_frozen(K_minus),
        K_plus=_frozen(K_plus),
        froude_ref=_frozen(froude_ref),
        gravity=float(params.gravity),
    )


def uniform_interfaces(x_left: float, x_right: float, num_cells: int) -> np.ndarray:
    return np.linspace(x_left, x_right, num_cells + 1)


# -------------------------
# Bed
# -------------------------
@dataclass(frozen=True)
class BedGeometry:
    b_left: np.ndarray        # b⁺_{j-1/2} per cell
    b_right: np.ndarray       # b⁻_{j+1/2} per cell
    b_cell: np.ndarray        # b_j
    db_cell: np.ndarray       # Δb_j
    db_interface: np.ndarray  # Δb_{j+1/2}, J+1 entries, zero at the domain ends
    db_up_geo: np.ndarray     # geometric part of Δb_j↑


def bed_stats(b_minus: Sequence[float], b_plus: Sequence[float], grid: Grid) -> BedGeometry:
    """Bed differences and the four-term geometric bed-variation scale.

    b_minus[i] is the bed just left of interface i, b_plus[i] just right of it;
    both have one entry per interface. b_minus[0] and b_plus[-1] lie outside
    the domain and are ignored.
    """
    b_minus = np.asarray(b_minus, dtype=float)
    b_plus = np.asarray(b_plus, dtype=float)
    n_faces = grid.interfaces.size
    if b_minus.shape != (n_faces,) or b_plus.shape != (n_faces,):
        raise GridError(f"bed needs {n_faces} interface values per side")
    if not (np.all(np.isfinite(b_minus[1:])) and np.all(np.isfinite(b_plus[:-1]))):
        raise GridError("bed values must be finite")

    b_left = b_plus[:-1]
    b_right = b_minus[1:]
    b_cell = 0.5 * (b_left + b_right)
    db_cell = b_right - b_left
    padded = _pad_edge(b_cell)
    db_interface = np.diff(padded)
    db_centre = padded[2:] - padded[:-2]

    half = 0.5 * db_cell
    db_up_geo = np.max(np.stack([
        np.abs(half - grid.alpha_left * db_interface[:-1]),
        np.abs(half),
        np.abs(half - grid.alpha_center * db_centre),
        np.abs(half - grid.alpha_right * db_interface[1:]),
    ]), axis=0)
    return BedGeometry(
        b_left=_frozen(b_left),
        b_right=_frozen(b_right),
        b_cell=_frozen(b_cell),
        db_cell=_frozen(db_cell),
        db_interface=_frozen(db_interface),
        db_up_geo=_frozen(db_up_geo),
    )


def bed_from_values(values: Sequence[float], grid: Grid) -> BedGeometry:
    """Continuous bed sampled once per interface."""
    values = np.asarray(values, dtype=float)
    return bed_stats(values, values, grid)


def bed_from_function(func: Callable[[np.ndarray], np.ndarray], grid: Grid) -> BedGeometry:
    return bed_from_values(func(np.asarray(grid.interfaces)), grid)


def flat_bed(grid: Grid) -> BedGeometry:
    return bed_from_values(np.zeros(grid.interfaces.size), grid)


def read_bed_csv(path: Union[str, Path]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Read interfaces and two-sided bed values from a CSV with columns x, b_minus, b_plus."""
    frame = pd.read_csv(path)
    missing = [c for c in BED_CSV_COLUMNS if c not in frame.columns]
    if missing:
        raise GridError(f"bed CSV {path} lacks columns: {', '.join(missing)}")
    return (
        frame["x"].to_numpy(dtype=float),
        frame["b_minus"].to_numpy(dtype=float),
        frame["b_plus"].to_numpy(dtype=float),
    )


# -------------------------
# Channel width
# -------------------------
@dataclass(frozen=True)
class WidthGeometry:
    w_left: np.ndarray      # w⁺_{j-1/2}
    w_right: np.ndarray     # w⁻_{j+1/2}
    w_cell: np.ndarray
    w_gradient: np.ndarray  # [w_x]_j
    w_down: np.ndarray      # w_j↓


def width_stats(w_minus: Sequence[float], w_plus: Sequence[float], grid: Grid) -> WidthGeometry:
    w_minus = np.asarray(w_minus, dtype=float)
    w_plus = np.asarray(w_plus, dtype=float)
    n_faces = grid.interfaces.size
    if w_minus.shape != (n_faces,) or w_plus.shape != (n_faces,):
        raise GridError(f"width needs {n_faces} interface values per side")
    w_left = w_plus[:-1]
    w_right = w_minus[1:]
    if np.any(w_left < 0) or np.any(w_right < 0):
        raise GridError("channel width must be nonnegative")
    return WidthGeometry(
        w_left=_frozen(w_left),
        w_right=_frozen(w_right),
        w_cell=_frozen(0.5 * (w_left + w_right)),
        w_gradient=_frozen((w_right - w_left) / grid.cell_widths),
        w_down=_frozen(np.minimum(w_left, w_right)),
    )


def width_from_values(values: Sequence[float], grid: Grid) -> WidthGeometry:
    values = np.asarray(values, dtype=float)
    return width_stats(values, values, grid)


def constant_width(grid: Grid, width: float = 1.0) -> WidthGeometry:
    return width_from_values(np.full(grid.interfaces.size, float(width)), grid)
