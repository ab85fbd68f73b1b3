# tests/test_properties.py
"""Randomised checks of the reconstruction bounds over 10^5 independent stencils."""
import numpy as np
import pytest

from core.limiter import probe_all_cells, slope, tvd_envelope_holds
from services.wbrecon import (
    _stencil,
    depth_bounds,
    froude_cutoff,
    proof_diagnostics,
    reconstruct_area_width,
    reconstruct_concentration,
    reconstruct_depth,
    reconstruct_flux,
    reconstruct_width_flux,
    velocity_bound_violations,
)

pytestmark = pytest.mark.slow

G_PARTICLE = 1.0
G_AMBIENT = 0.05


def test_depth_bounds(make_case):
    case = make_case(dry_fraction=0.2)
    depth = reconstruct_depth(case.grid, case.bed, case.h, case.B)
    low, high = depth_bounds(case.grid, depth)
    slack = 1e-12 * (1.0 + high)
    for edge in (depth.h_left, depth.h_right):
        assert np.all(edge >= low - slack)
        assert np.all(edge <= high + slack)
    assert np.all((depth.gamma >= 0.0) & (depth.gamma <= 1.0))


def test_depth_self_and_neighbour_monotone(make_case):
    case = make_case()
    grid = case.grid

    def recon(h):
        depth = reconstruct_depth(grid, case.bed, h, case.B)
        return depth.h_left, depth.h_right

    probe = probe_all_cells(recon, case.h)
    assert probe.is_self_monotone(tol=1e-8)

    bound_left = np.full(grid.num_cells, -np.inf)
    bound_left[1:] = -grid.gain[:-1] * grid.alpha_minus[1:-1]
    bound_right = np.full(grid.num_cells, -np.inf)
    bound_right[:-1] = -grid.gain[1:] * grid.alpha_plus[1:-1]
    for values, kinks, bound in (
        (probe.neighbour_left, probe.kink_neighbour_left, bound_left),
        (probe.neighbour_right, probe.kink_neighbour_right, bound_right),
    ):
        checked = ~kinks & ~np.isnan(values)
        assert np.all(values[checked] >= bound[checked] - 1e-8)
        assert np.all(values[checked] >= -0.25 - 1e-8)


def test_plain_velocity_bound(make_case):
    case = make_case()
    grid = case.grid
    B = froude_cutoff(case.q, grid.gravity, grid.froude_ref)
    depth = reconstruct_depth(grid, case.bed, case.h, B)
    flux = reconstruct_flux(grid, case.q, depth)
    bad = velocity_bound_violations(grid, case.h, case.q, flux.u_left, flux.u_right)
    assert bad.size == 0


def test_plain_velocity_bound_with_dry_cells(make_case):
    case = make_case(dry_fraction=0.3)
    depth = reconstruct_depth(case.grid, case.bed, case.h, case.B)
    flux = reconstruct_flux(case.grid, case.q, depth)
    bad = velocity_bound_violations(case.grid, case.h, case.q, flux.u_left, flux.u_right)
    assert bad.size == 0


def test_width_velocity_bound(make_case):
    case = make_case(with_width=True)
    width = case.width
    A = width.w_cell * case.h
    recon = reconstruct_area_width(case.grid, width, case.bed, A, case.B)
    flux = reconstruct_width_flux(case.grid, case.q, recon, width, A)
    bad = velocity_bound_violations(case.grid, A, case.q, flux.u_left, flux.u_right, width=width)
    assert bad.size == 0


def test_width_depth_bounds(make_case):
    case = make_case(with_width=True, dry_fraction=0.2)
    width = case.width
    recon = reconstruct_area_width(case.grid, width, case.bed, width.w_cell * case.h, case.B)
    low, high = depth_bounds(case.grid, recon.depth)
    slack = 1e-12 * (1.0 + high)
    # A edge >= w_down * (depth edge) >= w_down * low
    assert np.all(recon.A_left >= width.w_down * low - slack * width.w_left)
    assert np.all(recon.A_right >= width.w_down * low - slack * width.w_right)


def _particle_case(make_case, dry_fraction=0.0):
    case = make_case(dry_fraction=dry_fraction)
    rng = np.random.default_rng(5)
    phi = np.where(case.h > 0, rng.uniform(1e-3, 1.0, case.h.size), 0.0)
    return case, phi


def test_concentration_bounds(make_case):
    case, phi = _particle_case(make_case, dry_fraction=0.2)
    grid = case.grid
    B = froude_cutoff(case.q, G_PARTICLE * phi + G_AMBIENT, grid.froude_ref)
    depth = reconstruct_depth(grid, case.bed, case.h, B)
    conc = reconstruct_concentration(grid, phi * case.h, depth)
    wet = case.h > 0
    for edge in (conc.phi_left, conc.phi_right):
        assert np.all(edge[wet] >= conc.phi_down[wet] - 1e-12)
        assert np.all(edge[wet] <= conc.phi_up[wet] + 1e-12)


def test_concentration_monotone(make_case):
    case, phi = _particle_case(make_case)
    grid, h = case.grid, case.h

    def recon(values):
        B = froude_cutoff(case.q, G_PARTICLE * values + G_AMBIENT, grid.froude_ref)
        depth = reconstruct_depth(grid, case.bed, h, B)
        conc = reconstruct_concentration(grid, values * h, depth)
        return conc.phi_left, conc.phi_right

    probe = probe_all_cells(recon, phi)
    assert probe.is_self_monotone(tol=1e-8)
    assert probe.is_neighbour_monotone(tol=1e-8)


def test_lemma_bounds(make_case):
    case = make_case(dry_fraction=0.1)
    record = proof_diagnostics(case.grid, case.bed, case.h, case.B)
    assert np.all(np.abs(record.R) <= 1.0 + 1e-10)
    assert np.all(record.S >= 1.0 - case.grid.alpha_right - 1e-10)


def test_flat_bed_gives_zero_R(make_case):
    case = make_case(flat=True)
    record = proof_diagnostics(case.grid, case.bed, case.h, case.B)
    assert np.all(record.R == 0.0)


def test_flux_gradient_is_tvd(make_case):
    case = make_case()
    grid = case.grid
    depth = reconstruct_depth(grid, case.bed, case.h, case.B)
    flux = reconstruct_flux(grid, case.q, depth)
    q_prev, q_mid, q_next = _stencil(case.q)
    p = grid.slope_params()
    assert np.all((flux.kappa >= 0.0) & (flux.kappa <= 1.0))
    assert tvd_envelope_holds(flux.grad_q, q_prev, q_mid, q_next, p)
    assert tvd_envelope_holds(slope(q_prev, q_mid, q_next, p), q_prev, q_mid, q_next, p)
