# core/limiter.py
"""
Minmod slope limiter with per-interface parameters.

All functions are vectorised: scalars, or equal-length numpy arrays holding one
stencil per cell, are accepted everywhere. Besides the limiter itself this
module holds the predicates used by the test suites as oracles: the TVD
envelope, exact branch derivatives of the limiter, and finite-difference
monotonicity probes of arbitrary cell-to-interface maps.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike

EdgeMap = Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]]

# --- Probe configuration ---
DEFAULT_PROBE_STEP = 1e-6
KINK_FACTOR = 10.0


@dataclass(frozen=True)
class SlopeParams:
    """Parameters of the limiter for one cell (or one per cell, as arrays)."""
    alpha_plus_prev: ArrayLike  # α⁺ at the cell's left interface
    alpha_center: ArrayLike
    alpha_minus_next: ArrayLike  # α⁻ at the cell's right interface
    dx: ArrayLike

    def reflected(self) -> "SlopeParams":
        return replace(self, alpha_plus_prev=self.alpha_minus_next, alpha_minus_next=self.alpha_plus_prev)

    @property
    def alpha_up(self):
        return np.maximum(self.alpha_plus_prev, self.alpha_minus_next)


def _scalar_or_array(a: np.ndarray):
    return float(a) if np.ndim(a) == 0 else a


def minmod(values: Sequence[ArrayLike]):
    """Smallest-magnitude argument when all share a sign, else 0."""
    if len(values) == 0:
        raise ValueError("minmod of an empty sequence")
    stack = np.stack(np.broadcast_arrays(*[np.asarray(v, dtype=float) for v in values]))
    lo = stack.min(axis=0)
    hi = stack.max(axis=0)
    return _scalar_or_array(np.where(lo > 0, lo, np.where(hi < 0, hi, 0.0)))


def _arguments(v_prev, v_mid, v_next, p: SlopeParams):
    v_prev, v_mid, v_next = (np.asarray(v, dtype=float) for v in (v_prev, v_mid, v_next))
    left = p.alpha_plus_prev * (v_mid - v_prev)
    centre = p.alpha_center * (v_next - v_prev)
    right = p.alpha_minus_next * (v_next - v_mid)
    return left, centre, right


def slope(v_prev, v_mid, v_next, p: SlopeParams):
    """Limited gradient σ of a field over the cell; exactly 0 at extrema."""
    m = minmod(_arguments(v_prev, v_mid, v_next, p))
    return _scalar_or_array(2.0 * np.asarray(m) / p.dx)


def slope_derivatives(v_prev, v_mid, v_next, p: SlopeParams):
    """Derivatives of slope() with respect to (v_prev, v_mid, v_next).

    One-sided at ties: the first active minmod argument wins.
    """
    left, centre, right = np.broadcast_arrays(*_arguments(v_prev, v_mid, v_next, p))
    stack = np.stack([left, centre, right])
    positive = np.all(stack > 0, axis=0)
    negative = np.all(stack < 0, axis=0)
    branch = np.where(positive, stack.argmin(axis=0), stack.argmax(axis=0))
    active = positive | negative

    a_plus = np.broadcast_to(p.alpha_plus_prev, branch.shape)
    a_c = np.broadcast_to(p.alpha_center, branch.shape)
    a_minus = np.broadcast_to(p.alpha_minus_next, branch.shape)
    scale = np.where(active, 2.0 / np.broadcast_to(p.dx, branch.shape), 0.0)

    d_prev = np.choose(branch, [-a_plus, -a_c, np.zeros_like(a_minus)]) * scale
    d_mid = np.choose(branch, [a_plus, np.zeros_like(a_c), -a_minus]) * scale
    d_next = np.choose(branch, [np.zeros_like(a_plus), a_c, a_minus]) * scale
    return d_prev, d_mid, d_next


def field_extremes(v_prev, v_mid, v_next, p: SlopeParams):
    """(v↓, v↑): least and greatest of the two one-sided extrapolations and v_mid."""
    v_prev, v_mid, v_next = (np.asarray(v, dtype=float) for v in (v_prev, v_mid, v_next))
    cands = np.stack(np.broadcast_arrays(
        v_mid - p.alpha_plus_prev * (v_mid - v_prev),
        v_mid,
        v_mid + p.alpha_minus_next * (v_next - v_mid),
    ))
    return _scalar_or_array(cands.min(axis=0)), _scalar_or_array(cands.max(axis=0))


def field_lower_derivatives(v_prev, v_mid, v_next, p: SlopeParams):
    """Derivatives of v↓ with respect to (v_prev, v_mid, v_next)."""
    v_prev, v_mid, v_next = (np.asarray(v, dtype=float) for v in (v_prev, v_mid, v_next))
    cands = np.stack(np.broadcast_arrays(
        v_mid - p.alpha_plus_prev * (v_mid - v_prev),
        v_mid,
        v_mid + p.alpha_minus_next * (v_next - v_mid),
    ))
    branch = cands.argmin(axis=0)
    a_plus = np.broadcast_to(p.alpha_plus_prev, branch.shape).astype(float)
    a_minus = np.broadcast_to(p.alpha_minus_next, branch.shape).astype(float)
    zero = np.zeros(branch.shape)
    one = np.ones(branch.shape)
    d_prev = np.choose(branch, [a_plus, zero, zero])
    d_mid = np.choose(branch, [1.0 - a_plus, one, 1.0 - a_minus])
    d_next = np.choose(branch, [zero, zero, a_minus])
    return d_prev, d_mid, d_next


def tvd_envelope_holds(sigma, v_prev, v_mid, v_next, p: SlopeParams, atol: float = 0.0) -> bool:
    """True when σ lies between the clipped one-sided differences (scaled by 2/Δx)."""
    left, _, right = _arguments(v_prev, v_mid, v_next, p)
    lower = 2.0 * np.maximum(np.minimum(left, 0.0), np.minimum(right, 0.0)) / p.dx
    upper = 2.0 * np.minimum(np.maximum(left, 0.0), np.maximum(right, 0.0)) / p.dx
    sigma = np.asarray(sigma, dtype=float)
    return bool(np.all((sigma >= lower - atol) & (sigma <= upper + atol)))


# -------------------------
# Monotonicity probes
# -------------------------
@dataclass(frozen=True)
class MonotonicityProbe:
    """Finite-difference derivatives of interface values w.r.t. cell averages.

    self_left / self_right: both edges of the perturbed cell.
    neighbour_left: right edge of the cell to the left (faces the perturbed cell).
    neighbour_right: left edge of the cell to the right.
    Missing neighbours are NaN. kink_* flags mark stencils straddling a
    non-differentiable point.
    """
    self_left: np.ndarray
    self_right: np.ndarray
    neighbour_left: np.ndarray
    neighbour_right: np.ndarray
    kink_self_left: np.ndarray
    kink_self_right: np.ndarray
    kink_neighbour_left: np.ndarray
    kink_neighbour_right: np.ndarray

    def _ok(self, values, kinks, tol: float) -> bool:
        values = np.asarray(values)
        mask = ~np.asarray(kinks) & ~np.isnan(values)
        return bool(np.all(values[mask] >= -tol))

    def is_self_monotone(self, tol: float = 1e-8) -> bool:
        return (self._ok(self.self_left, self.kink_self_left, tol)
                and self._ok(self.self_right, self.kink_self_right, tol))

    def is_neighbour_monotone(self, tol: float = 1e-8) -> bool:
        return (self._ok(self.neighbour_left, self.kink_neighbour_left, tol)
                and self._ok(self.neighbour_right, self.kink_neighbour_right, tol))

    def is_cdp(self, tol: float = 1e-8) -> bool:
        """Characteristic-direction-preserving: self and neighbour gradients nonnegative."""
        return self.is_self_monotone(tol) and self.is_neighbour_monotone(tol)


def _central(plus, minus, eps):
    return (plus - minus) / (2.0 * eps)


def _kink(plus, base, minus, eps):
    return np.abs((plus - base) / eps - (base - minus) / eps) > KINK_FACTOR * eps


def probe_monotonicity(recon: EdgeMap, j: int, base: ArrayLike, eps: float = DEFAULT_PROBE_STEP) -> MonotonicityProbe:
    """Probe a single cell j of `recon` around the cell averages `base`.

    `recon` maps a full array of cell averages to (left_edges, right_edges).
    """
    if eps <= 0:
        raise ValueError("probe step must be positive")
    base = np.array(base, dtype=float)
    step = np.zeros_like(base)
    step[j] = eps
    lp, rp = recon(base + step)
    l0, r0 = recon(base)
    lm, rm = recon(base - step)
    n = base.size

    def pick(arr_p, arr_0, arr_m, k):
        if 0 <= k < n:
            return _central(arr_p[k], arr_m[k], eps), bool(_kink(arr_p[k], arr_0[k], arr_m[k], eps))
        return np.nan, False

    sl, ksl = pick(lp, l0, lm, j)
    sr, ksr = pick(rp, r0, rm, j)
    nl, knl = pick(rp, r0, rm, j - 1)
    nr, knr = pick(lp, l0, lm, j + 1)
    return MonotonicityProbe(
        *(np.asarray(v, dtype=float) for v in (sl, sr, nl, nr)),
        *(np.asarray(k) for k in (ksl, ksr, knl, knr)),
    )


def probe_all_cells(recon: EdgeMap, base: ArrayLike, eps: float = DEFAULT_PROBE_STEP, stride: int = 3) -> MonotonicityProbe:
    """Probe every cell at once by perturbing one residue class mod `stride` at a time.

    With stride ≥ 3 no three-point stencil contains two perturbed cells, so the
    result equals probe_monotonicity applied cell by cell.
    """
    if eps <= 0:
        raise ValueError("probe step must be positive")
    if stride < 3:
        raise ValueError("stride must be at least 3 for three-point stencils")
    base = np.array(base, dtype=float)
    n = base.size
    idx = np.arange(n)
    out = {name: np.full(n, np.nan) for name in ("sl", "sr", "nl", "nr")}
    kinks = {name: np.zeros(n, dtype=bool) for name in ("sl", "sr", "nl", "nr")}
    l0, r0 = recon(base)
    for r in range(stride):
        mask = idx % stride == r
        step = np.where(mask, eps, 0.0)
        lp, rp = recon(base + step)
        lm, rm = recon(base - step)
        cells = idx[mask]
        out["sl"][cells] = _central(lp[cells], lm[cells], eps)
        out["sr"][cells] = _central(rp[cells], rm[cells], eps)
        kinks["sl"][cells] = _kink(lp[cells], l0[cells], lm[cells], eps)
        kinks["sr"][cells] = _kink(rp[cells], r0[cells], rm[cells], eps)
        left_of = cells[cells >= 1]
        out["nl"][left_of] = _central(rp[left_of - 1], rm[left_of - 1], eps)
        kinks["nl"][left_of] = _kink(rp[left_of - 1], r0[left_of - 1], rm[left_of - 1], eps)
        right_of = cells[cells <= n - 2]
        out["nr"][right_of] = _central(lp[right_of + 1], lm[right_of + 1], eps)
        kinks["nr"][right_of] = _kink(lp[right_of + 1], l0[right_of + 1], lm[right_of + 1], eps)
    return MonotonicityProbe(
        out["sl"], out["sr"], out["nl"], out["nr"],
        kinks["sl"], kinks["sr"], kinks["nl"], kinks["nr"],
    )
