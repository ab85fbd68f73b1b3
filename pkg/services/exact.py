# services/exact.py
"""Exact solution of the flat-bed dam break (fluid initially at rest on both sides)."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from numpy.typing import ArrayLike
from scipy.optimize import brentq

from core.exceptions import ConfigError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DamBreakWaves:
    """Middle state and wave positions (as speeds x/t) of a left-to-right dam break."""
    h_middle: float
    u_middle: float
    head: float        # leading edge of the rarefaction, -c_L
    tail: float        # trailing edge, u_m - c_m
    shock: float       # shock speed; front speed 2 c_L on a dry bed


def shock_velocity_jump(h_middle: float, h_right: float, g: float) -> float:
    """Velocity behind a shock running into still water of depth h_right."""
    return (h_middle - h_right) * np.sqrt(0.5 * g * (h_middle + h_right) / (h_middle * h_right))


def dam_break_waves(h_left: float, h_right: float, g: float = 9.81) -> DamBreakWaves:
    """Wave structure for h_left > h_right >= 0."""
    if g <= 0:
        raise ConfigError("gravity must be positive")
    if not h_left > h_right >= 0:
        raise ConfigError("dam break needs h_left > h_right >= 0")
    c_left = np.sqrt(g * h_left)
    if h_right == 0:
        return DamBreakWaves(h_middle=0.0, u_middle=2.0 * c_left, head=-c_left, tail=2.0 * c_left, shock=2.0 * c_left)

    def mismatch(h_m: float) -> float:
        return 2.0 * (c_left - np.sqrt(g * h_m)) - shock_velocity_jump(h_m, h_right, g)

    h_m = brentq(mismatch, h_right, h_left, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    u_m = 2.0 * (c_left - np.sqrt(g * h_m))
    shock = h_m * u_m / (h_m - h_right)
    logger.debug("[Exact] dam break h_L=%g h_R=%g: h_m=%.12g, shock speed %.12g", h_left, h_right, h_m, shock)
    return DamBreakWaves(h_middle=h_m, u_middle=u_m, head=-c_left, tail=u_m - np.sqrt(g * h_m), shock=shock)


def dam_break_exact(
    x: ArrayLike, t: float, h_left: float, h_right: float, g: float = 9.81, x0: float = 0.0,
) -> Tuple[np.ndarray, np.ndarray]:
    """(h, u) at positions x and time t for a dam at x0 released at t = 0.

    Handles wet-wet (rarefaction + shock) and dry-bed (rarefaction to a dry
    front) data; h_left < h_right is solved by reflection.
    """
    x = np.asarray(x, dtype=float)
    if h_left < 0 or h_right < 0:
        raise ConfigError("depths must be nonnegative")
    if t < 0:
        raise ConfigError("time must be nonnegative")
    if t == 0 or h_left == h_right:
        return np.where(x <= x0, h_left, h_right).astype(float), np.zeros_like(x)
    if h_left < h_right:
        h, u = dam_break_exact(2.0 * x0 - x, t, h_right, h_left, g, x0)
        return h, -u

    waves = dam_break_waves(h_left, h_right, g)
    c_left = np.sqrt(g * h_left)
    s = (x - x0) / t
    fan = (s > waves.head) & (s <= waves.tail)
    h = np.select(
        [s <= waves.head, fan, s <= waves.shock],
        [h_left, (2.0 * c_left - s) ** 2 / (9.0 * g), waves.h_middle],
        default=h_right,
    )
    u = np.select(
        [s <= waves.head, fan, s <= waves.shock],
        [0.0, 2.0 * (s + c_left) / 3.0, waves.u_middle],
        default=0.0,
    )
    return h.astype(float), u.astype(float)


def cell_averages(func, interfaces: ArrayLike, samples: int = 64) -> np.ndarray:
    """Midpoint-rule cell averages of a vectorised function over each cell."""
    interfaces = np.asarray(interfaces, dtype=float)
    offsets = (np.arange(samples) + 0.5) / samples
    points = interfaces[:-1, None] + np.diff(interfaces)[:, None] * offsets[None, :]
    return np.asarray(func(points), dtype=float).mean(axis=1)
