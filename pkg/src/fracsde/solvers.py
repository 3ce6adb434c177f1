r"""Modified Euler-Maruyama scheme and its sum-of-exponentials fast variant.

Both schemes discretize the Volterra form of the model equation

.. math::

    y(t) = y_0 - \sum_{i = 1}^m \frac{1}{\Gamma(1 - \alpha_i)}
        \int_0^t (t - s)^{-\alpha_i} y(s) \,\mathrm{d}s
        + \int_0^t f(s, y(s)) \,\mathrm{d}s
        + \int_0^t g(s, y(s)) \,\mathrm{d}W_s

on a uniform grid. The direct scheme evaluates the full history sum at every
step, which costs :math:`\mathcal{O}(N^2)` in total. The fast scheme replaces
the kernel on all but the most recent cell by a sum of exponentials, whose
history accumulators obey a two-term recurrence, for a total cost of
:math:`\mathcal{O}(N N_{exp})`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from fracsde import _kernels
from fracsde.brownian import BrownianPath
from fracsde.core import Array, FractionalOrders, ProblemSpec, TimeGrid, Trajectory
from fracsde.errors import (
    GridMismatch,
    NonFiniteState,
    SoeMismatch,
    SoeWindowTooNarrow,
)
from fracsde.soe import DEFAULT_EPSILON, SoeApproximation, build_soe

Method = Literal["direct", "fast"]
METHODS: tuple[str, ...] = ("direct", "fast")

# {{{ configuration


@dataclass(frozen=True)
class SolverConfig:
    """Scheme selection and the cached :math:`1 / \\Gamma(1 - \\alpha_i)` factors."""

    method: str
    orders: FractionalOrders
    soe_epsilon: float = DEFAULT_EPSILON
    gamma_values: tuple[float, ...] = field(init=False)

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}, expected one of {METHODS}")
        if self.method == "fast" and not 0.0 < self.soe_epsilon < 1.0:
            raise ValueError(f"SOE tolerance must be in (0, 1), got {self.soe_epsilon!r}")

        object.__setattr__(
            self, "gamma_values", tuple(math.gamma(1.0 - a) for a in self.orders)
        )

    @property
    def inverse_gammas(self) -> Array:
        return 1.0 / np.array(self.gamma_values)


@dataclass(frozen=True, eq=False)
class HistoryState:
    """Recorded SOE history accumulators of a fast solve.

    ``accumulators[n, j]`` holds :math:`U_j(t_n)` (one column per state
    component) for the term with exponent ``exponents[j]``, which belongs to
    the order ``orders[order_index[j]]``. The accumulators at ``t_0`` and
    ``t_1`` are zero.
    """

    exponents: Array
    order_index: Array
    accumulators: Array


def update_history(U: float | Array, x_prev: float | Array, h: float, s: float | Array):
    """One step of the accumulator recurrence
    :math:`U \\leftarrow e^{-h s} U + e^{-2 h s} x_{prev} h`.
    """
    return np.exp(-h * s) * U + np.exp(-2.0 * h * s) * x_prev * h


# }}}

# {{{ helpers


def _check_inputs(
    problem: ProblemSpec, grid: TimeGrid, path: BrownianPath
) -> None:
    if path.grid != grid:
        raise GridMismatch(
            f"Brownian path lives on {path.grid}, but the solver grid is {grid}"
        )
    if problem.T != grid.T:
        raise GridMismatch(
            f"problem horizon T={problem.T} does not match grid horizon T={grid.T}"
        )


def _trajectory(
    values: Array, bad_step: int, grid: TimeGrid, method: str, history=None
) -> Trajectory:
    if bad_step:
        raise NonFiniteState(bad_step, method)

    values.setflags(write=False)
    return Trajectory(grid=grid, values=values, method=method, history=history)


def default_soes(
    orders: FractionalOrders, grid: TimeGrid, epsilon: float = DEFAULT_EPSILON
) -> list[SoeApproximation]:
    """SOE approximations valid on :math:`[h, T]` for every order."""
    return [build_soe(alpha, epsilon, grid.h, grid.T) for alpha in orders]


def _check_soes(
    orders: FractionalOrders, grid: TimeGrid, soes: Sequence[SoeApproximation]
) -> None:
    if len(soes) != orders.m:
        raise SoeMismatch(f"expected {orders.m} SOE approximations, got {len(soes)}")

    for alpha, soe in zip(orders, soes):
        if soe.alpha != alpha:
            raise SoeMismatch(f"SOE built for alpha={soe.alpha}, expected {alpha}")
        # arguments t_{n+1} - t_j range over [2h, T]
        if soe.delta > grid.h * (1.0 + 1.0e-12):
            raise SoeWindowTooNarrow(
                f"SOE for alpha={alpha} starts at delta={soe.delta} > h={grid.h}"
            )
        if soe.T < grid.T * (1.0 - 1.0e-12):
            raise SoeWindowTooNarrow(
                f"SOE for alpha={alpha} ends at T={soe.T} < {grid.T}"
            )


# }}}

# {{{ solvers


def solve_direct(
    problem: ProblemSpec,
    orders: FractionalOrders,
    grid: TimeGrid,
    path: BrownianPath,
    *,
    memory: bool = True,
) -> Trajectory:
    """Solve with the modified Euler-Maruyama scheme

    .. math::

        Y_n = y_0 - \\sum_{i = 1}^m \\frac{h}{\\Gamma(1 - \\alpha_i)}
            \\sum_{j = 0}^{n - 1} (t_n - t_j)^{-\\alpha_i} Y_j
            + \\sum_{j = 0}^{n - 1} f(t_j, Y_j) h
            + \\sum_{j = 0}^{n - 1} g(t_j, Y_j) \\Delta W_j.

    :arg memory: if *False*, the fractional history term is dropped, which
        leaves a plain Euler-Maruyama scheme. Only meant for testing.
    """
    _check_inputs(problem, grid, path)
    config = SolverConfig("direct", orders)

    values, bad_step = _kernels.direct_kernel(
        problem.drift,
        problem.diffusion,
        np.array(problem.y0),
        np.array(orders.alphas),
        config.inverse_gammas,
        grid.h,
        np.array(path.increments),
        memory,
    )

    return _trajectory(values, bad_step, grid, "direct")


def solve_fast(
    problem: ProblemSpec,
    orders: FractionalOrders,
    grid: TimeGrid,
    path: BrownianPath,
    soes: Sequence[SoeApproximation] | None = None,
    *,
    soe_epsilon: float = DEFAULT_EPSILON,
    memory: bool = True,
    record_history: bool = False,
) -> Trajectory:
    """Solve with the fast Euler-Maruyama scheme.

    The first step is the direct scheme. For :math:`n \\ge 1`

    .. math::

        X_{n + 1} = y_0 - \\sum_{i = 1}^m \\frac{1}{\\Gamma(1 - \\alpha_i)}
            \\Big[\\sum_j \\omega^{(\\alpha_i)}_j U^{(\\alpha_i)}_j(t_{n + 1})
                + h^{1 - \\alpha_i} X_n\\Big]
            + \\sum_{j = 0}^{n} f(t_j, X_j) h
            + \\sum_{j = 0}^{n} g(t_j, X_j) \\Delta W_j,

    where the accumulators are advanced with :func:`update_history`.

    :arg soes: one approximation per order, valid on at least
        :math:`[h, T]`. If not given, they are built with *soe_epsilon* and
        :math:`\\delta = h`.
    :arg record_history: if *True*, the returned trajectory carries a
        :class:`HistoryState` with the accumulators at every step.
    """
    _check_inputs(problem, grid, path)
    config = SolverConfig("fast", orders, soe_epsilon)
    if soes is None:
        soes = default_soes(orders, grid, soe_epsilon)
    _check_soes(orders, grid, soes)

    weights = np.concatenate([soe.weights for soe in soes])
    exponents = np.concatenate([soe.exponents for soe in soes])
    offsets = np.cumsum([0] + [soe.n_exp for soe in soes]).astype(np.int64)

    if record_history:
        trace = np.zeros((grid.N + 1, exponents.size, problem.dim))
    else:
        trace = np.zeros((0, exponents.size, problem.dim))

    values, bad_step = _kernels.fast_kernel(
        problem.drift,
        problem.diffusion,
        np.array(problem.y0),
        np.array(orders.alphas),
        config.inverse_gammas,
        grid.h,
        np.array(path.increments),
        weights,
        exponents,
        offsets,
        memory,
        trace,
    )

    history = None
    if record_history:
        order_index = np.repeat(np.arange(orders.m), [soe.n_exp for soe in soes])
        history = HistoryState(
            exponents=exponents, order_index=order_index, accumulators=trace
        )

    return _trajectory(values, bad_step, grid, "fast", history)


def solve(
    method: str,
    problem: ProblemSpec,
    orders: FractionalOrders,
    grid: TimeGrid,
    path: BrownianPath,
    *,
    soes: Sequence[SoeApproximation] | None = None,
    soe_epsilon: float = DEFAULT_EPSILON,
    memory: bool = True,
) -> Trajectory:
    if method == "direct":
        return solve_direct(problem, orders, grid, path, memory=memory)
    if method == "fast":
        return solve_fast(
            problem, orders, grid, path, soes, soe_epsilon=soe_epsilon, memory=memory
        )

    raise ValueError(f"unknown method {method!r}, expected one of {METHODS}")


# }}}
