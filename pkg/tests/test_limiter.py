# tests/test_limiter.py
import numpy as np
import pytest
from hypothesis import given, seed
from hypothesis import strategies as st

from core.limiter import (
    SlopeParams,
    field_extremes,
    minmod,
    probe_all_cells,
    probe_monotonicity,
    slope,
    slope_derivatives,
    tvd_envelope_holds,
)

DEFAULT = SlopeParams(alpha_plus_prev=0.75, alpha_center=0.25, alpha_minus_next=0.75, dx=1.0)
values = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False)
alphas = st.floats(min_value=0.01, max_value=0.99)


def random_params(rng, n):
    return SlopeParams(
        alpha_plus_prev=rng.uniform(0.01, 0.99, n),
        alpha_center=rng.uniform(0.01, 0.5, n),
        alpha_minus_next=rng.uniform(0.01, 0.99, n),
        dx=rng.uniform(0.1, 3.0, n),
    )


def test_minmod_examples():
    assert minmod([1.0, 2.0, 3.0]) == 1.0
    assert minmod([-1.0, -2.0]) == -1.0
    assert minmod([1.0, -1.0]) == 0.0
    assert minmod([0.0, 2.0]) == 0.0


def test_minmod_empty():
    with pytest.raises(ValueError, match="empty"):
        minmod([])


def test_slope_examples():
    assert slope(0.0, 1.0, 2.0, DEFAULT) == pytest.approx(1.0)
    assert slope(2.0, 1.0, 0.0, DEFAULT) == pytest.approx(-1.0)
    assert slope(0.0, 1.0, 0.0, DEFAULT) == 0.0
    assert slope(1.0, 1.0, 1.0, DEFAULT) == 0.0


def test_slope_scales_with_cell_width():
    wide = SlopeParams(0.75, 0.25, 0.75, 2.0)
    assert slope(0.0, 1.0, 2.0, wide) == pytest.approx(0.5)


@seed(7)
@given(v_prev=values, v_mid=values, v_next=values, a_plus=alphas, a_c=alphas, a_minus=alphas)
def test_slope_reflection(v_prev, v_mid, v_next, a_plus, a_c, a_minus):
    p = SlopeParams(a_plus, a_c, a_minus, 1.0)
    assert slope(v_next, v_mid, v_prev, p.reflected()) == -slope(v_prev, v_mid, v_next, p)


@seed(11)
@given(v_prev=values, v_mid=values, v_next=values)
def test_slope_zero_at_extrema(v_prev, v_mid, v_next):
    if np.sign(v_mid - v_prev) * np.sign(v_next - v_mid) <= 0:
        assert slope(v_prev, v_mid, v_next, DEFAULT) == 0.0


def test_tvd_envelope_random(rng):
    n = 100_000
    p = random_params(rng, n)
    v = rng.normal(0.0, 1.0, (3, n)) * 10.0 ** rng.uniform(-3, 3, (1, n))
    sigma = slope(v[0], v[1], v[2], p)
    assert tvd_envelope_holds(sigma, v[0], v[1], v[2], p)


def test_tvd_envelope_rejects_overshoot():
    assert not tvd_envelope_holds(1.6, 0.0, 1.0, 2.0, DEFAULT)
    assert tvd_envelope_holds(1.5, 0.0, 1.0, 2.0, DEFAULT)


def test_slope_derivatives_match_finite_differences(rng):
    n = 1000
    p = random_params(rng, n)
    v = rng.normal(0.0, 1.0, (3, n))
    exact = slope_derivatives(v[0], v[1], v[2], p)
    eps = 1e-7
    for k in range(3):
        step = np.zeros((3, 1))
        step[k] = eps
        up = slope(*(v + step), p)
        down = slope(*(v - step), p)
        np.testing.assert_allclose((up - down) / (2 * eps), exact[k], atol=1e-5)


def test_slope_derivative_ranges(rng):
    n = 10_000
    p = random_params(rng, n)
    v = rng.normal(0.0, 1.0, (3, n))
    d_prev, d_mid, d_next = slope_derivatives(v[0], v[1], v[2], p)
    assert np.all(d_mid <= 2.0 * p.alpha_plus_prev / p.dx)
    assert np.all(d_mid >= -2.0 * p.alpha_minus_next / p.dx)
    assert np.all(d_prev <= 0.0)
    assert np.all(d_next >= 0.0)


def test_field_extremes_bracket_cell_value(rng):
    p = random_params(rng, 1000)
    v = rng.normal(0.0, 1.0, (3, 1000))
    low, high = field_extremes(v[0], v[1], v[2], p)
    assert np.all(low <= v[1])
    assert np.all(high >= v[1])


def test_probe_all_cells_agrees_with_single_probe(rng):
    base = rng.uniform(0.5, 2.0, 12)

    def recon(cells):
        padded = np.pad(cells, 1, mode="edge")
        sigma = slope(padded[:-2], cells, padded[2:], DEFAULT)
        return cells - 0.5 * sigma, cells + 0.5 * sigma

    everything = probe_all_cells(recon, base)
    for j in (0, 5, 11):
        single = probe_monotonicity(recon, j, base)
        assert everything.self_left[j] == pytest.approx(float(single.self_left), abs=1e-9)
        assert everything.self_right[j] == pytest.approx(float(single.self_right), abs=1e-9)
    assert everything.is_self_monotone()


def test_identity_reconstruction_is_cdp():
    probe = probe_monotonicity(lambda cells: (cells.copy(), cells.copy()), 2, [1.0, 0.5, 2.0, 0.1, 3.0])
    assert float(probe.self_left) == pytest.approx(1.0)
    assert float(probe.self_right) == pytest.approx(1.0)
    assert float(probe.neighbour_left) == 0.0
    assert float(probe.neighbour_right) == 0.0
    assert probe.is_cdp()


def test_depth_minmod_self_gradient_bounds(rng):
    n = 3000
    p = random_params(rng, n)
    base = rng.uniform(0.0, 2.0, n)

    def recon(cells):
        padded = np.pad(cells, 1, mode="edge")
        sigma = slope(padded[:-2], cells, padded[2:], p)
        return cells - 0.5 * p.dx * sigma, cells + 0.5 * p.dx * sigma

    probe = probe_all_cells(recon, base)
    low, high = 1.0 - p.alpha_up - 1e-6, 1.0 + p.alpha_up + 1e-6
    for values, kinks in ((probe.self_left, probe.kink_self_left), (probe.self_right, probe.kink_self_right)):
        smooth = ~kinks
        assert smooth.mean() > 0.5
        assert np.all((values[smooth] >= low[smooth]) & (values[smooth] <= high[smooth]))
    assert probe.is_cdp(tol=1e-8)


def test_probe_rejects_bad_arguments():
    def recon(cells):
        return cells, cells

    with pytest.raises(ValueError):
        probe_monotonicity(recon, 0, [1.0, 2.0], eps=0.0)
    with pytest.raises(ValueError, match="stride"):
        probe_all_cells(recon, [1.0, 2.0], stride=2)
