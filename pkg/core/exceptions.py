# core/exceptions.py
"""Exception hierarchy shared by the solver library and the CLI."""
from __future__ import annotations

from typing import Optional


class ShallowWaterError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(ShallowWaterError, ValueError):
    """Bad scenario configuration (unknown key, out-of-range value, missing key)."""


class GridError(ShallowWaterError, ValueError):
    """Invalid grid, bed or width description."""


class ReconstructionError(ShallowWaterError, ValueError):
    """Inadmissible input to a reconstruction (negative depth, zero cell width...)."""


class SolverError(ShallowWaterError, RuntimeError):
    """Failure while advancing a state in time.

    Carries the offending cell index and simulation time so the CLI can
    report where the run broke down.
    """

    def __init__(self, message: str, *, cell: Optional[int] = None, time: Optional[float] = None):
        self.cell = cell
        self.time = time
        where = []
        if cell is not None:
            where.append(f"cell {cell}")
        if time is not None:
            where.append(f"t={time:.6g}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
