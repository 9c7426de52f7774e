import math

import numpy as np
import pytest

from diracspec.asymptotics import (
    borderline_trajectory,
    compare_asymptotics,
    defect_convergence,
    first_order_check,
    second_order_check,
    wkb_reference,
)
from diracspec.coefficients import (
    CoefficientModel,
    ConstantChannel,
    constant,
    power,
)
from diracspec.solver import SolveConfig, Trajectory, integrate_cartesian

EQUAL = CoefficientModel(q=power(1, 1), m=power(1, 1))


class TestReference:
    def test_closed_form_phase(self):
        grid = np.linspace(1.0, 100.0, 4000)
        ref = wkb_reference(EQUAL, -1.0, grid)
        exact = ((1.0 + 2.0 * grid) ** 1.5 - 3.0 ** 1.5) / 3.0
        assert np.max(np.abs(ref.phase - exact)) < 1e-8

    def test_amplitudes(self):
        grid = np.linspace(1.0, 10.0, 50)
        ref = wkb_reference(EQUAL, -1.0, grid)
        amp1 = np.hypot(ref.col_cos[0], ref.col_sin[0])
        amp2 = np.hypot(ref.col_cos[1], ref.col_sin[1])
        assert np.allclose(amp1, grid ** -0.25, rtol=1e-12)
        assert np.allclose(amp2, math.sqrt(2.0) * grid ** 0.25, rtol=1e-12)

    def test_constant_potential_linear_phase(self):
        model = CoefficientModel(q=constant(4), m=constant(4))
        grid = np.linspace(1.0, 20.0, 400)
        ref = wkb_reference(model, -2.0, grid)
        slope = math.sqrt(4.0 + 16.0)
        assert np.allclose(ref.phase, slope * (grid - 1.0), rtol=1e-10)

    def test_phase_strictly_increasing(self):
        grid = np.geomspace(0.5, 300.0, 777)
        ref = wkb_reference(EQUAL, -0.5, grid)
        assert np.all(np.diff(ref.phase) > 0.0)

    def test_nonnegative_lambda_rejected(self):
        with pytest.raises(ValueError):
            wkb_reference(EQUAL, 0.5, np.linspace(1, 2, 10))


class TestProjection:
    def test_constant_potential_solution_in_span(self):
        # with constant coefficients and no angular term the numeric solution
        # lies in the reference span up to the asymptotic amplitude error
        # O(lambda/q), pushed below tolerance by a tiny spectral parameter
        c, lam = 100.0, -1e-4
        ch = ConstantChannel(c - lam, c, 0.0)
        cfg = SolveConfig(r_start=1.0, r_end=200.0, rtol=1e-12, atol=1e-14)
        traj = integrate_cartesian(ch, [c ** -0.25, 0.0], cfg)
        model = CoefficientModel(q=constant(c), m=constant(c))
        ref = wkb_reference(model, lam, traj.grid)
        res = compare_asymptotics(traj, ref, windows=[(1.0, 200.0)])
        assert res[0]["residual"] < 1e-6

    def test_residual_decreases_along_radius(self):
        cfg = SolveConfig(r_start=5.0, r_end=210.0, rtol=1e-11, atol=1e-13,
                          stride=0.02)
        traj = borderline_trajectory(EQUAL, 1, -1.0, cfg)
        ref = wkb_reference(EQUAL, -1.0, traj.grid)
        res = compare_asymptotics(traj, ref, windows=[(10, 20), (100, 200)])
        assert res[1]["residual"] < res[0]["residual"]

    def test_reference_column_has_zero_residual(self):
        grid = np.linspace(2.0, 40.0, 2000)
        ref = wkb_reference(EQUAL, -1.0, grid)
        traj = Trajectory(grid=grid, u1=ref.col_cos[0], u2=ref.col_cos[1],
                          rho=np.hypot(*ref.col_cos), theta=None,
                          mode="synthetic", channel=None)
        res = compare_asymptotics(traj, ref)
        assert all(w["residual"] < 1e-12 for w in res)

    def test_rescaling_invariance(self):
        cfg = SolveConfig(r_start=5.0, r_end=60.0, rtol=1e-10, atol=1e-12)
        traj = borderline_trajectory(EQUAL, 1, -1.0, cfg)
        ref = wkb_reference(EQUAL, -1.0, traj.grid)
        res1 = compare_asymptotics(traj, ref, windows=[(10, 50)])
        scaled = Trajectory(grid=traj.grid, u1=137.0 * traj.u1,
                            u2=137.0 * traj.u2, rho=137.0 * traj.rho,
                            theta=None, mode="synthetic", channel=None)
        res2 = compare_asymptotics(scaled, ref, windows=[(10, 50)])
        assert res1[0]["residual"] == pytest.approx(res2[0]["residual"],
                                                    rel=1e-9)

    def test_grid_mismatch_rejected(self):
        grid = np.linspace(2.0, 40.0, 100)
        ref = wkb_reference(EQUAL, -1.0, grid)
        traj = Trajectory(grid=grid[:-1], u1=grid[:-1], u2=grid[:-1],
                          rho=grid[:-1], theta=None, mode="synthetic",
                          channel=None)
        with pytest.raises(ValueError):
            compare_asymptotics(traj, ref)


class TestDefects:
    def test_second_order_convergence(self):
        conv = defect_convergence(EQUAL, 1, -1.0, 10.0, 50.0)
        assert all(1.8 <= o <= 2.2 for o in conv["orders"])
        assert conv["defects"][0] > conv["defects"][-1]

    def test_zero_solution_zero_defect(self):
        grid = np.linspace(1.0, 5.0, 401)
        traj = Trajectory(grid=grid, u1=np.zeros_like(grid),
                          u2=np.zeros_like(grid), rho=np.zeros_like(grid),
                          theta=None, mode="synthetic", channel=None)
        assert second_order_check(traj, EQUAL, 1, -1.0)["max_defect"] == 0.0
        assert first_order_check(traj, EQUAL, 1, -1.0)["max_defect"] == 0.0

    def test_first_order_relation_small_and_converging(self):
        defects = []
        for h in (0.01, 0.005):
            cfg = SolveConfig(r_start=5.0, r_end=30.0, rtol=1e-12, atol=1e-14,
                              stride=h)
            traj = borderline_trajectory(EQUAL, 1, -1.0, cfg)
            defects.append(first_order_check(traj, EQUAL, 1, -1.0)["max_defect"])
        assert defects[0] < 2e-3
        assert defects[1] < defects[0] / 3.0

    def test_requires_equal_coefficients(self):
        model = CoefficientModel(q=power(1, 1), m=constant(1))
        grid = np.linspace(1.0, 5.0, 101)
        traj = Trajectory(grid=grid, u1=np.sin(grid), u2=np.cos(grid),
                          rho=np.ones_like(grid), theta=None,
                          mode="synthetic", channel=None)
        with pytest.raises(ValueError):
            second_order_check(traj, model, 1, -1.0)

    def test_nonuniform_grid_rejected(self):
        grid = np.geomspace(1.0, 5.0, 101)
        traj = Trajectory(grid=grid, u1=np.sin(grid), u2=np.cos(grid),
                          rho=np.ones_like(grid), theta=None,
                          mode="synthetic", channel=None)
        with pytest.raises(ValueError):
            second_order_check(traj, EQUAL, 1, -1.0)
