"""System assembly, the dense solve, and the representation formula."""

import numpy as np
import pytest

from bdies2d import solver
from bdies2d.coefficient import make_preset
from bdies2d.geometry import DomainSpec, GeometryError, build_curve, build_domain_grid
from bdies2d.potentials import BoundaryDensity, DomainField, delta_near
from bdies2d.solver import (DiameterError, assemble_rhs, assemble_system,
                            evaluate_solution, solve_bvp, solve_dirichlet,
                            third_green_residual)

DISK = DomainSpec("disk", center=(0.0, 0.0), radius=0.4)
A_ONE = make_preset("constant", value=1.0)
A_EXP = make_preset("exponential", direction=(1.0, 1.0))


@pytest.fixture(scope="module")
def geo():
    return build_curve(DISK, 64), build_domain_grid(DISK, 16, 8)


@pytest.fixture(scope="module")
def geo_fine():
    return build_curve(DISK, 128), build_domain_grid(DISK, 32, 12)


def _zero_data(curve, grid):
    return (DomainField(grid, np.zeros(grid.n_nodes)),
            BoundaryDensity(curve, np.zeros(curve.n)))


class TestAssembly:
    def test_constant_coefficient_block_structure(self, geo):
        curve, grid = geo
        sys = assemble_system(curve, grid, A_ONE, "x")
        n_h = grid.n_nodes
        np.testing.assert_allclose(sys.matrix[:n_h, :n_h], np.eye(n_h),
                                   atol=1e-12)
        assert np.abs(sys.matrix[n_h:, :n_h]).max() < 1e-12

    def test_diameter_precondition(self):
        big = DomainSpec("disk", center=(0.0, 0.0), radius=0.6)
        curve = build_curve(big, 32)
        grid = build_domain_grid(big, 16, 8)
        with pytest.raises(DiameterError, match="diameter"):
            assemble_system(curve, grid, A_ONE, "x")

    def test_large_domain_optout_solves(self):
        big = DomainSpec("disk", center=(0.0, 0.0), radius=0.6)
        curve = build_curve(big, 64)
        grid = build_domain_grid(big, 16, 8)
        case_u = lambda p: np.atleast_2d(p)[:, 0]
        f = DomainField(grid, np.zeros(grid.n_nodes))
        phi0 = BoundaryDensity(curve, case_u(curve.points))
        sol = solve_bvp(curve, grid, A_ONE, "x", f, phi0,
                        allow_large_domain=True)
        assert np.abs(sol.u.values - case_u(grid.points)).max() < 1e-6
        assert abs(sol.psi.mean_against_one()) < 1e-10

    def test_condition_diagnostics(self, geo):
        curve, grid = geo
        sys = assemble_system(curve, grid, A_EXP, "x")
        assert np.isfinite(sys.cond)
        assert sys.sigma_min > 1e-8


class TestRhs:
    def test_gauss_identity_rhs(self, geo_fine):
        # f = 0, g = 1, a = 1: F0 = -W1 = +1 inside and on the trace
        curve, grid = geo_fine
        f = DomainField(grid, np.zeros(grid.n_nodes))
        phi0 = BoundaryDensity(curve, np.ones(curve.n))
        f0_grid, f0_trace = assemble_rhs(curve, grid, A_ONE, "x", f, phi0)
        np.testing.assert_allclose(f0_grid, 1.0, atol=1e-10)
        np.testing.assert_allclose(f0_trace, 1.0, atol=1e-10)

    def test_zero_data_zero_rhs(self, geo):
        curve, grid = geo
        f, phi0 = _zero_data(curve, grid)
        f0_grid, f0_trace = assemble_rhs(curve, grid, A_EXP, "x", f, phi0)
        assert np.all(f0_grid == 0.0) and np.all(f0_trace == 0.0)


class TestSolve:
    def test_unit_solution_smoke(self, geo_fine):
        curve, grid = geo_fine
        f = DomainField(grid, np.zeros(grid.n_nodes))
        phi0 = BoundaryDensity(curve, np.ones(curve.n))
        sol = solve_bvp(curve, grid, A_EXP, "x", f, phi0)
        assert np.abs(sol.u.values - 1.0).max() < 1e-8
        assert np.abs(sol.psi.values).max() < 1e-6
        assert sol.residual < 1e-12

    def test_zero_data_gives_exact_zero(self, geo):
        curve, grid = geo
        f, phi0 = _zero_data(curve, grid)
        sol = solve_bvp(curve, grid, A_EXP, "x", f, phi0)
        assert np.all(sol.u.values == 0.0)
        assert np.all(sol.psi.values == 0.0)

    def test_solve_requires_rhs(self, geo):
        curve, grid = geo
        sys = assemble_system(curve, grid, A_ONE, "x")
        with pytest.raises(ValueError, match="right-hand side"):
            solve_dirichlet(sys)

    def test_uniqueness_surrogate(self, geo):
        curve, grid = geo
        f, phi0 = _zero_data(curve, grid)
        sys = assemble_system(curve, grid, A_EXP, "x").with_data(f, phi0)
        eps = 1e-8
        base = sys.rhs.copy()
        sols = []
        for sign in (+1.0, -1.0):
            sys.rhs = base + sign * eps
            sols.append(solve_dirichlet(sys))
        gap = np.abs(sols[0].u.values - sols[1].u.values).max()
        assert gap <= 2 * eps * sys.cond


@pytest.fixture(scope="module")
def unit_sol(geo_fine):
    curve, grid = geo_fine
    f = DomainField(grid, np.zeros(grid.n_nodes))
    phi0 = BoundaryDensity(curve, np.ones(curve.n))
    return solve_bvp(curve, grid, A_EXP, "x", f, phi0)


class TestEvaluator:
    def test_unit_case_interior_value(self, unit_sol):
        assert abs(evaluate_solution(unit_sol, [0.1, 0.05]) - 1.0) < 1e-6

    def test_reproduces_nodal_values(self, unit_sol):
        grid = unit_sol.system.grid
        vals = unit_sol.evaluate(grid.points, allow_near=True)
        assert np.abs(vals - unit_sol.u.values).max() < 1e-9

    def test_near_boundary_target_rejected(self, unit_sol):
        curve = unit_sol.system.curve
        y = [0.4 - 0.1 * delta_near(curve), 0.0]
        with pytest.raises(GeometryError, match="distance"):
            evaluate_solution(unit_sol, y)

    def test_exterior_target_rejected(self, unit_sol):
        with pytest.raises(GeometryError, match="outside"):
            evaluate_solution(unit_sol, [0.5, 0.0])


@pytest.fixture(scope="module")
def exp_sol(geo_fine):
    from bdies2d.verification import manufactured_case
    curve, grid = geo_fine
    case = manufactured_case("exp_saddle")
    sol = solve_bvp(curve, grid, case.coeff, "x",
                    case.f_field_on(grid), case.phi0_on(curve))
    return case, sol


class TestManufacturedEvaluation:
    def test_nodal_error(self, exp_sol):
        case, sol = exp_sol
        err = np.abs(sol.u.values - case.u(sol.system.grid.points)).max()
        assert err < 1e-4 * 0.16

    def test_center_value_by_symmetry(self, exp_sol):
        _, sol = exp_sol
        assert abs(evaluate_solution(sol, [0.0, 0.0])) < 1e-5

    def test_interior_point_closed_form(self, exp_sol):
        # u(0.2, 0.1) = 0.04 - 0.01 = 0.03
        _, sol = exp_sol
        assert abs(evaluate_solution(sol, [0.2, 0.1]) - 0.03) < 1e-4


class TestThirdGreenIdentity:
    def test_unit_case_interior_and_boundary(self, geo_fine):
        curve, grid = geo_fine
        u = DomainField(grid, np.ones(grid.n_nodes))
        psi = BoundaryDensity(curve, np.zeros(curve.n))
        f = DomainField(grid, np.zeros(grid.n_nodes))
        phi0 = BoundaryDensity(curve, np.ones(curve.n))
        r_in = third_green_residual(u, psi, f, phi0, curve, grid, A_ONE, "x",
                                    targets=[[0.1, 0.0], [0.0, 0.2]])
        assert np.abs(r_in).max() < 1e-10
        r_bd = third_green_residual(u, psi, f, phi0, curve, grid, A_ONE, "x",
                                    on_boundary=True)
        assert np.abs(r_bd).max() < 1e-10

    def test_manufactured_exact_data(self, geo_fine):
        from bdies2d.verification import manufactured_case
        curve, grid = geo_fine
        case = manufactured_case("exp_saddle")
        u = case.u_field_on(grid)
        psi = BoundaryDensity(curve, case.psi_on(curve))
        f = case.f_field_on(grid)
        phi0 = case.phi0_on(curve)
        rng = np.random.default_rng(11)
        ang = rng.uniform(0, 2 * np.pi, 12)
        rad = rng.uniform(0.0, 0.32, 12)
        targets = np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=1)
        r = third_green_residual(u, psi, f, phi0, curve, grid, case.coeff,
                                 "x", targets=targets)
        assert np.abs(r).max() < 1e-5
