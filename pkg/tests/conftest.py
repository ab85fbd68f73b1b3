# tests/conftest.py
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import pytest

from core.mesh import BedGeometry, Grid, WidthGeometry, bed_stats, build_grid, width_from_values
from schemas import GridParams
from utils.config import parse_config

PROPERTY_CASES = 100_000


@dataclass
class RandomCase:
    """One long grid whose cells are independent random stencils."""
    grid: Grid
    bed: BedGeometry
    h: np.ndarray
    q: np.ndarray
    B: np.ndarray
    width: Optional[WidthGeometry] = None


def random_grid(rng: np.random.Generator, n: int) -> Grid:
    dx = rng.uniform(0.5, 2.0, n)
    interfaces = np.concatenate(([0.0], np.cumsum(dx)))
    alpha_minus = rng.uniform(0.05, 0.95, n + 1)
    alpha_plus = rng.uniform(0.05, 0.95, n + 1)
    alpha_up = np.maximum(alpha_plus[:-1], alpha_minus[1:])
    params = GridParams(
        alpha_minus=alpha_minus.tolist(),
        alpha_plus=alpha_plus.tolist(),
        alpha_center=rng.uniform(0.05, 0.5, n).tolist(),
        gain=(rng.uniform(0.1, 1.0, n) * (1.0 - alpha_up)).tolist(),
        K_minus=rng.uniform(1.0, 200.0, n + 1).tolist(),
        K_plus=rng.uniform(1.0, 200.0, n + 1).tolist(),
    )
    return build_grid(interfaces, params)


def random_bed(rng: np.random.Generator, grid: Grid, flat: bool = False) -> BedGeometry:
    n_faces = grid.interfaces.size
    if flat:
        zeros = np.zeros(n_faces)
        return bed_stats(zeros, zeros, grid)
    b_minus = rng.normal(0.0, 1.0, n_faces) * 10.0 ** rng.uniform(-2.0, 0.5, n_faces)
    jumps = np.where(rng.random(n_faces) < 0.3, rng.normal(0.0, 0.5, n_faces), 0.0)
    return bed_stats(b_minus, b_minus + jumps, grid)


def random_case(
    rng: np.random.Generator,
    n: int = PROPERTY_CASES,
    *,
    dry_fraction: float = 0.0,
    min_depth: float = 1e-3,
    flat: bool = False,
    with_width: bool = False,
) -> RandomCase:
    grid = random_grid(rng, n)
    bed = random_bed(rng, grid, flat=flat)
    h = 10.0 ** rng.uniform(np.log10(min_depth), 1.0, n)
    if dry_fraction > 0:
        h = np.where(rng.random(n) < dry_fraction, 0.0, h)
    q = rng.normal(0.0, 1.0, n) * 10.0 ** rng.uniform(-2.0, 1.0, n)
    q = np.where(h > 0, q, 0.0)
    B = np.where(rng.random(n) < 0.5, 0.0, 10.0 ** rng.uniform(-3.0, 0.5, n))
    width = None
    if with_width:
        width = width_from_values(rng.uniform(0.2, 2.0, grid.interfaces.size), grid)
    return RandomCase(grid=grid, bed=bed, h=h, q=q, B=B, width=width)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def make_case(rng):
    def factory(n: int = PROPERTY_CASES, **kwargs) -> RandomCase:
        return random_case(rng, n, **kwargs)
    return factory


@pytest.fixture(scope="session")
def comparison_config():
    return parse_config("scenario = comparison_sweep")
