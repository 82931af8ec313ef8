"""
Time stepping and Howard policy iteration tests

Functions:
    run_hjb_solver_test: Run the HJB solver tests
"""
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from config.settings import CONFIG
from core.assembly import assemble
from core.errors import DomainError, HowardConvergenceError, ValidationError
from core.hjb_solver import howard_select, solve_fixed, solve_hjb
from core.model import ControlInterval
from core.payoff import Payoff

SMALL_STEPS = 20


@pytest.fixture(scope='module')
def sup(butterfly_op, control):
    return solve_hjb(butterfly_op, control, SMALL_STEPS, 'sup')


@pytest.fixture(scope='module')
def inf(butterfly_op, control):
    return solve_hjb(butterfly_op, control, SMALL_STEPS, 'inf')


def test_select_examples():
    increasing = np.array([[1.0, 2.0], [5.0, 7.0]])
    assert howard_select(increasing, 'sup').tolist() == [1, 1]
    assert howard_select(increasing, 'inf').tolist() == [0, 0]
    flat = np.array([[3.0, 3.0, 3.0]])
    assert howard_select(flat, 'sup').tolist() == [0]
    assert howard_select(flat, 'inf').tolist() == [0]


def test_select_rejects_bad_input():
    with pytest.raises(ValidationError):
        howard_select(np.ones((3, 2)), 'max')
    with pytest.raises(ValidationError):
        howard_select(np.ones((3, 0)), 'sup')


@given(arrays(np.float64, (6, 4), elements=st.floats(-1e6, 1e6)))
def test_inf_selection_mirrors_sup(residuals):
    assert np.array_equal(howard_select(residuals, 'inf'), howard_select(-residuals, 'sup'))


def test_time_grid(sup, params):
    assert sup.steps == SMALL_STEPS
    assert sup.times[0] == params.T and sup.times[-1] == 0.0
    assert np.all(np.diff(sup.times) < 0)
    assert sup.dt == pytest.approx(params.T / SMALL_STEPS)
    with pytest.raises(DomainError):
        sup.index_of(1.0)


def test_singleton_matches_linear_solve(small_mesh, params, butterfly, cmap):
    single = ControlInterval.singleton(-2.4)
    op = assemble(small_mesh, params, butterfly, cmap, single)
    linear = solve_fixed(op, -2.4, SMALL_STEPS)
    for mode in ('sup', 'inf'):
        hjb = solve_hjb(op, single, SMALL_STEPS, mode)
        assert np.abs(hjb.values - linear.values).max() <= 1e-12


def test_controls_are_bang_bang(sup, inf):
    for surface in (sup, inf):
        assert set(np.unique(surface.controls)) <= {-2.4, -1.6}
    np.testing.assert_array_equal(sup.controls[0], sup.controls[1])


def test_finer_control_grid_gives_same_values(butterfly_op, sup, inf):
    five = ControlInterval(-2.4, -1.6, n_points=5)
    assert np.abs(solve_hjb(butterfly_op, five, SMALL_STEPS, 'sup').values - sup.values).max() <= 1e-10
    assert np.abs(solve_hjb(butterfly_op, five, SMALL_STEPS, 'inf').values - inf.values).max() <= 1e-10


@pytest.mark.parametrize('lam', [-2.4, -2.0, -1.6])
def test_fixed_control_lies_between_bounds(butterfly_op, sup, inf, lam):
    fixed = solve_fixed(butterfly_op, lam, SMALL_STEPS)
    assert np.all(inf.values <= fixed.values + 1e-10)
    assert np.all(fixed.values <= sup.values + 1e-10)


def test_maximum_principle(sup, inf):
    for surface in (sup, inf):
        assert surface.values.min() >= -1e-12
        assert surface.values.max() <= 20 + 1e-12


def test_terminal_row_is_payoff(sup, butterfly_op):
    np.testing.assert_array_equal(sup.values[0], butterfly_op.terminal)


def test_howard_converges_quickly(sup, inf):
    for surface in (sup, inf):
        assert surface.howard_iterations[0] == 0
        assert 1 <= surface.howard_iterations[1:].min()
        assert surface.howard_iterations.max() <= 20


def test_constant_is_preserved_without_discounting(small_mesh, params, butterfly, cmap, control):
    flat = replace(params, r=0.0)
    op = assemble(small_mesh, flat, butterfly, cmap, control)
    c = 7.0
    rhs = np.where(np.array(op.row_kind) == 'dirichlet', c, 0.0)
    op = replace(op, terminal=np.full(op.size, c), rhs=rhs)
    for mode in ('sup', 'inf'):
        surface = solve_hjb(op, control, SMALL_STEPS, mode)
        np.testing.assert_allclose(surface.values, c, rtol=1e-10)


def test_constant_is_discounted_with_interest(small_mesh, params, butterfly, cmap, control):
    op = assemble(small_mesh, params, butterfly, cmap, control)
    c = 7.0
    rhs = np.where(np.array(op.row_kind) == 'dirichlet', c, 0.0)
    op = replace(op, terminal=np.full(op.size, c), rhs=rhs)
    surface = solve_fixed(op, -2.0, SMALL_STEPS)
    assert surface.values.max() <= c + 1e-10
    assert surface.values[-1].min() >= c * np.exp(-params.r * params.T) * (1 - 1e-3)


def test_nested_intervals_widen_the_band(small_mesh, params, butterfly, cmap, sup, inf):
    wide = ControlInterval(-2.5, 0.0)
    op = assemble(small_mesh, params, butterfly, cmap, wide)
    assert np.all(solve_hjb(op, wide, SMALL_STEPS, 'sup').values >= sup.values - 1e-10)
    assert np.all(solve_hjb(op, wide, SMALL_STEPS, 'inf').values <= inf.values + 1e-10)


def test_straddling_interval_widens_the_band(small_mesh, params, butterfly, cmap, butterfly_op, sup, inf):
    wide = ControlInterval(-2.5, 0.5)
    op = assemble(small_mesh, params, butterfly, cmap, wide)
    np.testing.assert_array_equal(solve_fixed(op, -2.0, SMALL_STEPS).values,
                                  solve_fixed(butterfly_op, -2.0, SMALL_STEPS).values)
    assert np.all(solve_hjb(op, wide, SMALL_STEPS, 'sup').values >= sup.values - 1e-10)
    assert np.all(solve_hjb(op, wide, SMALL_STEPS, 'inf').values <= inf.values + 1e-10)


def test_spread_grows_with_diameter(small_mesh, params, butterfly, cmap):
    spreads = []
    for diameter in (0.0, 0.5, 1.0, 2.5):
        interval = ControlInterval.symmetric(-1.25, diameter)
        op = assemble(small_mesh, params, butterfly, cmap, interval)
        hi = solve_hjb(op, interval, SMALL_STEPS, 'sup').values[-1]
        lo = solve_hjb(op, interval, SMALL_STEPS, 'inf').values[-1]
        spreads.append((hi - lo).max())
    assert spreads[0] <= 1e-10
    assert np.all(np.diff(spreads) >= -1e-10)


def test_larger_payoff_gives_larger_value(small_mesh, params, butterfly, cmap, butterfly_op):
    call_op = assemble(small_mesh, params, Payoff.call(30), cmap, ControlInterval(-2.4, -1.6))
    low = solve_fixed(butterfly_op, -2.0, SMALL_STEPS).values
    high = solve_fixed(call_op, -2.0, SMALL_STEPS).values
    assert np.all(high >= low - 1e-10)


def test_iteration_limit(butterfly_op, control, monkeypatch):
    monkeypatch.setitem(CONFIG, 'HOWARD_MAX_ITERATIONS', 0)
    with pytest.raises(HowardConvergenceError) as info:
        solve_hjb(butterfly_op, control, SMALL_STEPS, 'sup')
    assert info.value.step == 1


def test_invalid_requests(butterfly_op, control):
    with pytest.raises(ValidationError):
        solve_hjb(butterfly_op, control, SMALL_STEPS, 'best')
    with pytest.raises(ValidationError):
        solve_fixed(butterfly_op, 0.5, SMALL_STEPS)
    with pytest.raises(ValidationError):
        solve_fixed(butterfly_op, -2.0, 0)


def run_hjb_solver_test():
    """Run the time stepping and Howard iteration tests"""
    from test import run_module
    return run_module(__file__)
