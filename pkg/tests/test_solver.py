# tests/test_solver.py
import numpy as np
import pytest

from core.exceptions import ConfigError, ReconstructionError
from core.mesh import bed_from_function, build_grid, flat_bed, uniform_interfaces, width_from_values
from schemas import GridParams
from services.solver import (
    Problem,
    System,
    SystemKind,
    numerical_flux,
    physical_flux,
    point_state,
    rhs,
    settling_sink,
)

PLAIN = System()
PARTICLE = System(kind=SystemKind.PARTICLE, g_particle=1.0, g_ambient=0.05)


def bump_grid(cells=50):
    grid = build_grid(uniform_interfaces(0.0, 10.0, cells))
    bed = bed_from_function(lambda x: 0.5 * np.exp(-((x - 5.0) ** 2)), grid)
    return grid, bed


def test_physical_flux_plain():
    state = point_state(PLAIN, [[2.0], [3.0]])
    flux = physical_flux(PLAIN, state)
    np.testing.assert_allclose(flux[:, 0], [3.0, 3.0 * 1.5 + 0.5 * 9.81 * 4.0])


def test_physical_flux_particle():
    state = point_state(PARTICLE, [[2.0], [1.0], [4.0]])
    flux = physical_flux(PARTICLE, state)
    g = 1.0 * 0.5 + 0.05
    np.testing.assert_allclose(flux[:, 0], [4.0, 2.0, 4.0 * 2.0 + 0.5 * g * 4.0])


def test_physical_flux_width():
    system = System(kind=SystemKind.WIDTH)
    state = point_state(system, [[4.0], [2.0]], width=2.0)
    flux = physical_flux(system, state)
    np.testing.assert_allclose(flux[:, 0], [2.0, 2.0 * 0.5 + 0.5 * 9.81 * 2.0 * 4.0])


def test_numerical_flux_is_consistent(rng):
    values = np.stack([rng.uniform(0.0, 3.0, 200), rng.normal(0.0, 2.0, 200)])
    state = point_state(PLAIN, values)
    flux, _, _ = numerical_flux(PLAIN, state, state)
    np.testing.assert_array_equal(flux, physical_flux(PLAIN, state))


def test_dry_states_have_no_flux():
    dry = point_state(PLAIN, [[0.0], [0.0]])
    flux, a_minus, a_plus = numerical_flux(PLAIN, dry, dry)
    assert np.all(flux == 0.0)
    assert a_minus[0] == 0.0 and a_plus[0] == 0.0


def test_still_water_pair():
    system = System(gravity=1.0)
    left = point_state(system, [[1.0], [0.0]])
    right = point_state(system, [[1.0], [0.0]])
    flux, a_minus, a_plus = numerical_flux(system, left, right)
    np.testing.assert_allclose(flux[:, 0], [0.0, 0.5])
    assert a_minus[0] == -1.0 and a_plus[0] == 1.0


def test_wave_speeds_bracket_zero(rng):
    left = point_state(PLAIN, np.stack([rng.uniform(0, 2, 100), rng.normal(0, 3, 100)]))
    right = point_state(PLAIN, np.stack([rng.uniform(0, 2, 100), rng.normal(0, 3, 100)]))
    _, a_minus, a_plus = numerical_flux(PLAIN, left, right)
    assert np.all(a_minus <= 0.0) and np.all(a_plus >= 0.0)


def test_lake_at_rest_is_stationary():
    grid, bed = bump_grid()
    h = 1.0 - bed.b_cell
    problem = Problem(PLAIN, grid, bed)
    dQdt, _ = rhs(problem, np.stack([h, np.zeros_like(h)]))
    assert np.max(np.abs(dQdt)) <= 1e-13


def test_particle_lake_at_rest_is_stationary():
    grid, bed = bump_grid()
    h = 1.0 - bed.b_cell
    problem = Problem(PARTICLE, grid, bed)
    dQdt, _ = rhs(problem, np.stack([h, 0.3 * h, np.zeros_like(h)]))
    assert np.max(np.abs(dQdt)) <= 1e-13


def test_uniform_flow_on_flat_bed():
    grid = build_grid(uniform_interfaces(0.0, 1.0, 20))
    problem = Problem(PLAIN, grid, flat_bed(grid), boundary="outflow")
    values = np.stack([np.ones(20), np.full(20, 0.5)])
    dQdt, _ = rhs(problem, values)
    assert np.max(np.abs(dQdt)) <= 1e-13


def test_mass_is_conserved_with_walls():
    grid = build_grid(uniform_interfaces(-5.0, 5.0, 80))
    problem = Problem(PLAIN, grid, flat_bed(grid))
    h = 1.0 + 0.5 * np.exp(-grid.centers ** 2)
    dQdt, report = rhs(problem, np.stack([h, np.zeros_like(h)]))
    assert abs(np.sum(dQdt[0] * grid.cell_widths)) <= 1e-13
    assert report.interface_flux[0, 0] == 0.0 and report.interface_flux[0, -1] == 0.0


def test_report_shapes():
    grid, bed = bump_grid(10)
    problem = Problem(PARTICLE, grid, bed)
    h = 1.0 - bed.b_cell
    _, report = rhs(problem, np.stack([h, 0.1 * h, np.zeros_like(h)]))
    assert report.interface_flux.shape == (3, 11)
    assert report.cell_source.shape == (3, 10)
    assert report.hydrostatic.shape == (11,)
    a_minus, a_plus = report.wave_speeds
    assert a_minus.shape == a_plus.shape == (11,)


def test_constant_width_matches_plain_system():
    grid, bed = bump_grid()
    width = width_from_values(np.ones(grid.interfaces.size), grid)
    h = 1.0 + 0.1 * np.sin(grid.centers)
    q = 0.2 * np.cos(grid.centers)
    plain, _ = rhs(Problem(System(froude_cutoff=False), grid, bed), np.stack([h, q]))
    wide, _ = rhs(Problem(System(kind=SystemKind.WIDTH), grid, bed, width=width), np.stack([h, q]))
    np.testing.assert_allclose(wide, plain, atol=1e-12)


def test_settling_sink():
    np.testing.assert_allclose(settling_sink([2.0, 0.0], [1.0, 0.0], 0.1), [-0.05, 0.0])
    with pytest.raises(ConfigError):
        settling_sink([1.0], [1.0], -1.0)


def test_system_validation():
    with pytest.raises(ConfigError, match="gravity"):
        System(gravity=0.0)
    with pytest.raises(ConfigError, match="settling"):
        System(settling_velocity=-1.0)
    grid = build_grid([0.0, 1.0, 2.0])
    with pytest.raises(ConfigError, match="width"):
        Problem(System(kind=SystemKind.WIDTH), grid, flat_bed(grid))


def test_state_shape_checked():
    grid = build_grid([0.0, 1.0, 2.0])
    problem = Problem(PLAIN, grid, flat_bed(grid))
    with pytest.raises(ReconstructionError, match="shape"):
        rhs(problem, np.ones((3, 2)))


def test_negative_depth_rejected():
    grid = build_grid([0.0, 1.0, 2.0], GridParams())
    problem = Problem(PLAIN, grid, flat_bed(grid))
    with pytest.raises(ReconstructionError, match="negative depth"):
        rhs(problem, np.array([[1.0, -1.0], [0.0, 0.0]]))
