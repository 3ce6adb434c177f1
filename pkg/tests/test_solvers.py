from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracsde.brownian import BrownianPath, sample_path
from fracsde.catalog import get_problem
from fracsde.core import ProblemSpec, make_grid, validate_orders
from fracsde.errors import (
    GridMismatch,
    InvalidProblem,
    NonFiniteState,
    SoeMismatch,
    SoeWindowTooNarrow,
)
from fracsde.soe import build_soe
from fracsde.solvers import SolverConfig, solve, solve_direct, solve_fast, update_history

from conftest import (
    brute_force_direct,
    linear_drift,
    py_sin_ty,
    py_sin_y,
    sine_diffusion_2d,
    zero_rhs,
)

# values of the deterministic single-order problem y0 = 1, alpha = 1/2,
# f = g = 0 on four steps, evaluated by hand in 30-digit arithmetic
HAND_VALUE_1 = 0.71790520822612185652
HAND_VALUE_2 = 0.59801153957135318544


def _relaxation(T=1.0):
    return ProblemSpec(y0=1.0, drift=zero_rhs, diffusion=zero_rhs, T=T)


def _zero_path(N, T=1.0):
    return BrownianPath(make_grid(T, N), np.zeros(N), seed=0)


# {{{ direct


def test_direct_hand_values():
    traj = solve_direct(_relaxation(), validate_orders([0.5]), make_grid(1.0, 4), _zero_path(4))
    assert traj.values[0, 0] == 1.0
    assert traj.values[1, 0] == pytest.approx(HAND_VALUE_1, rel=1e-14)
    assert traj.values[2, 0] == pytest.approx(HAND_VALUE_2, rel=1e-14)
    assert traj.method == "direct"
    np.testing.assert_array_equal(traj.times, make_grid(1.0, 4).nodes)
    assert traj.final[0] == traj.values[-1, 0]


def test_plumbing_mode_is_constant():
    problem = ProblemSpec(y0=np.array([0.3, -2.0]), drift=zero_rhs, diffusion=zero_rhs)
    grid = make_grid(1.0, 16)
    path = sample_path(1, grid)
    for method in ("direct", "fast"):
        traj = solve(method, problem, validate_orders([0.2, 0.7]), grid, path, memory=False)
        np.testing.assert_array_equal(traj.values, np.tile([0.3, -2.0], (17, 1)))


def test_no_memory_is_euler_maruyama():
    problem = get_problem("example1")
    grid = make_grid(1.0, 32)
    path = sample_path(5, grid)
    traj = solve_direct(problem, validate_orders([0.5]), grid, path, memory=False)

    y = 0.1
    expected = [y]
    for j, dw in enumerate(path.increments):
        y = y + math.sin(j * grid.h * y) * grid.h + math.sin(y) * dw
        expected.append(y)
    np.testing.assert_allclose(traj.values[:, 0], expected, rtol=1e-13)


@pytest.mark.parametrize("N", [1, 3, 8, 16])
def test_direct_matches_brute_force_system(N):
    problem = ProblemSpec(
        y0=np.array([0.5, -0.25]), drift=linear_drift, diffusion=sine_diffusion_2d, T=2.0
    )
    orders = validate_orders([0.15, 0.45, 0.9])
    grid = make_grid(2.0, N)
    path = sample_path(11, grid)

    def f(t, y):
        return [-0.5 * v + t for v in y]

    def g(t, y):
        return [0.3 * math.sin(y[1]), 0.2 * math.cos(y[0])]

    expected = brute_force_direct(problem.y0, orders.alphas, grid.h, path.increments, f, g)
    traj = solve_direct(problem, orders, grid, path)
    np.testing.assert_allclose(traj.values, expected, rtol=1e-12, atol=1e-15)


def test_returned_values_read_only():
    traj = solve_direct(_relaxation(), validate_orders([0.5]), make_grid(1.0, 4), _zero_path(4))
    with pytest.raises(ValueError):
        traj.values[0, 0] = 2.0


def test_non_finite_state():
    # finite at y0, overflows after the first step
    problem = ProblemSpec(y0=1.0, drift=lambda t, y: 1e200 * y * y, diffusion=zero_rhs)
    for method in ("direct", "fast"):
        with pytest.raises(NonFiniteState) as info:
            solve(method, problem, validate_orders([0.5]), make_grid(1.0, 4), _zero_path(4))
        assert info.value.step == 2


def test_problem_spec_rejects_non_finite_initial_rhs():
    with pytest.raises(InvalidProblem):
        ProblemSpec(y0=1.0, drift=lambda t, y: y / (1.0 - y), diffusion=zero_rhs)


def test_grid_mismatch():
    orders = validate_orders([0.5])
    with pytest.raises(GridMismatch):
        solve_direct(_relaxation(), orders, make_grid(1.0, 8), _zero_path(4))
    with pytest.raises(GridMismatch):
        solve_direct(_relaxation(T=2.0), orders, make_grid(1.0, 4), _zero_path(4))


def test_solver_config():
    config = SolverConfig("direct", validate_orders([0.5]))
    assert config.gamma_values == (math.gamma(0.5),)
    with pytest.raises(ValueError):
        SolverConfig("implicit", validate_orders([0.5]))
    with pytest.raises(ValueError):
        SolverConfig("fast", validate_orders([0.5]), soe_epsilon=0.0)
    with pytest.raises(ValueError):
        solve("implicit", _relaxation(), validate_orders([0.5]), make_grid(1.0, 4), _zero_path(4))


# }}}

# {{{ fast


def test_fast_first_step_matches_direct():
    problem = get_problem("example2")
    orders = validate_orders([0.1, 0.5, 0.85])
    grid = make_grid(1.0, 8)
    path = sample_path(3, grid)
    direct = solve_direct(problem, orders, grid, path)
    fast = solve_fast(problem, orders, grid, path)
    assert fast.values[1, 0] == direct.values[1, 0]


def test_fast_matches_direct_on_relaxation():
    N = 1024
    orders = validate_orders([0.5])
    grid = make_grid(1.0, N)
    direct = solve_direct(_relaxation(), orders, grid, _zero_path(N))
    fast = solve_fast(_relaxation(), orders, grid, _zero_path(N), soe_epsilon=1e-10)
    assert np.max(np.abs(fast.values - direct.values)) <= 1e-7


def test_fast_matches_direct_system():
    problem = ProblemSpec(
        y0=np.array([0.5, -0.25]), drift=linear_drift, diffusion=sine_diffusion_2d
    )
    orders = validate_orders([0.3, 0.6])
    grid = make_grid(1.0, 256)
    path = sample_path(2, grid)
    direct = solve_direct(problem, orders, grid, path)
    fast = solve_fast(problem, orders, grid, path)
    assert np.max(np.abs(fast.values - direct.values)) <= 1e-8


def test_fast_accepts_wider_soe():
    orders = validate_orders([0.4])
    grid = make_grid(1.0, 64)
    path = sample_path(0, grid)
    problem = get_problem("example1")
    soes = [build_soe(0.4, 1e-10, 1e-4, 2.0)]
    a = solve_fast(problem, orders, grid, path, soes)
    b = solve_direct(problem, orders, grid, path)
    assert np.max(np.abs(a.values - b.values)) <= 1e-8


def test_fast_rejects_bad_soes():
    orders = validate_orders([0.4, 0.6])
    grid = make_grid(1.0, 64)
    path = _zero_path(64)
    problem = _relaxation()
    good = [build_soe(a, 1e-8, grid.h, 1.0) for a in orders]
    with pytest.raises(SoeMismatch):
        solve_fast(problem, orders, grid, path, good[:1])
    with pytest.raises(SoeMismatch):
        solve_fast(problem, orders, grid, path, good[::-1])
    with pytest.raises(SoeWindowTooNarrow):
        solve_fast(problem, orders, grid, path, [build_soe(a, 1e-8, 0.1, 1.0) for a in orders])
    with pytest.raises(SoeWindowTooNarrow):
        solve_fast(problem, orders, grid, path, [build_soe(a, 1e-8, 1e-3, 0.5) for a in orders])


# }}}

# {{{ history recurrence


@pytest.mark.parametrize(
    ("U", "x_prev", "h", "s", "expected"),
    [
        (0.0, 1.0, 0.5, 1e-300, 0.5),
        (1.0, 0.0, 1.0, math.log(2.0), 0.5),
        (0.3, 2.0, 0.1, 5.0, 0.25553508614807848875),
    ],
)
def test_update_history_values(U, x_prev, h, s, expected):
    assert update_history(U, x_prev, h, s) == pytest.approx(expected, rel=1e-15)


def literal_history(X, h, s, n):
    """Accumulator at t_n from its defining sum over x_0, ..., x_{n-2}."""
    return sum(math.exp(-s * (n - k) * h) * X[k] * h for k in range(n - 1))


@settings(max_examples=100, deadline=None)
@given(
    st.integers(min_value=2, max_value=64),
    st.floats(min_value=1e-4, max_value=0.5),
    st.floats(min_value=1e-3, max_value=1e4),
    st.integers(min_value=0, max_value=2**32 - 1),
)
def test_update_history_matches_literal_sum(N, h, s, seed):
    X = np.random.default_rng(seed).uniform(0.5, 1.5, N + 1)
    U = 0.0
    for n in range(2, N + 1):
        U = update_history(U, X[n - 2], h, s)
        assert U == pytest.approx(literal_history(X, h, s, n), rel=1e-12, abs=1e-300)


def test_recorded_history_matches_literal_sum():
    problem = get_problem("example2")
    orders = validate_orders([0.1, 0.5, 0.85])
    grid = make_grid(1.0, 32)
    path = sample_path(17, grid)
    traj = solve_fast(problem, orders, grid, path, record_history=True)
    hist = traj.history

    assert hist.accumulators.shape == (33, hist.exponents.size, 1)
    np.testing.assert_array_equal(hist.accumulators[:2], 0.0)
    np.testing.assert_array_equal(
        np.bincount(hist.order_index), [build_soe(a, 1e-10, grid.h, 1.0).n_exp for a in orders]
    )

    X = traj.values[:, 0]
    for n in range(2, 33):
        for j in range(0, hist.exponents.size, 7):
            s = hist.exponents[j]
            expected = literal_history(X, grid.h, s, n)
            scale = literal_history(np.abs(X), grid.h, s, n)
            assert abs(hist.accumulators[n, j, 0] - expected) <= 1e-12 * max(scale, 1e-300)


# }}}

# {{{ oracle


@pytest.mark.parametrize("N", [2, 4, 8, 16])
@pytest.mark.parametrize(
    ("problem_id", "alphas"), [("example1", (0.6, 0.8)), ("example2", (0.1, 0.5, 0.85))]
)
def test_catalog_direct_matches_brute_force(problem_id, alphas, N):
    problem = get_problem(problem_id)
    grid = make_grid(1.0, N)
    path = sample_path(2024, grid)
    expected = brute_force_direct(problem.y0, alphas, grid.h, path.increments, py_sin_ty, py_sin_y)
    traj = solve_direct(problem, validate_orders(alphas), grid, path)
    np.testing.assert_allclose(traj.values, expected, rtol=1e-12, atol=0)


# }}}
