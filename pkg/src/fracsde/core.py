"""Domain types: fractional orders, uniform time grids, problems and trajectories."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from fracsde.errors import (
    EmptyOrders,
    InvalidProblem,
    NonPositiveHorizon,
    OrderOutOfRange,
    OrdersNotStrictlyIncreasing,
    OutOfDomain,
    ZeroSteps,
)

Array = np.ndarray

# {{{ fractional orders


@dataclass(frozen=True)
class FractionalOrders:
    """Orders :math:`0 < \\alpha_1 < \\cdots < \\alpha_m < 1` of the
    Riemann-Liouville derivatives in the model equation.

    Construct through :func:`validate_orders`; the constructor checks the
    same invariants.
    """

    alphas: tuple[float, ...]

    def __post_init__(self) -> None:
        _check_orders(self.alphas)

    @property
    def m(self) -> int:
        return len(self.alphas)

    def max_order(self) -> float:
        return self.alphas[-1]

    def strong_order(self) -> float:
        """Theoretical strong convergence order ``min(1 - alpha_m, 0.5)``."""
        return min(1.0 - self.max_order(), 0.5)

    def __iter__(self):
        return iter(self.alphas)

    def __len__(self) -> int:
        return len(self.alphas)


def _check_orders(alphas: Sequence[float]) -> None:
    if len(alphas) == 0:
        raise EmptyOrders("at least one fractional order is required")

    for a in alphas:
        if not (math.isfinite(a) and 0.0 < a < 1.0):
            raise OrderOutOfRange(f"order {a!r} is not in the open interval (0, 1)")

    for a, b in zip(alphas[:-1], alphas[1:]):
        if not a < b:
            raise OrdersNotStrictlyIncreasing(
                f"orders must be strictly increasing, got {a!r} before {b!r}"
            )


def validate_orders(raw: Sequence[float] | FractionalOrders) -> FractionalOrders:
    if isinstance(raw, FractionalOrders):
        return raw

    return FractionalOrders(tuple(float(a) for a in raw))


# }}}

# {{{ time grid


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid :math:`t_n = n h` on :math:`[0, T]` with :math:`h = T / N`."""

    T: float
    N: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.T) and self.T > 0):
            raise NonPositiveHorizon(f"horizon must be positive, got T={self.T!r}")
        if isinstance(self.N, bool) or not isinstance(self.N, (int, np.integer)):
            raise ZeroSteps(f"number of steps must be an integer, got {self.N!r}")
        if self.N < 1:
            raise ZeroSteps(f"number of steps must be positive, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))

    @property
    def h(self) -> float:
        return self.T / self.N

    def t(self, n: int) -> float:
        if not 0 <= n <= self.N:
            raise OutOfDomain(f"node index {n} outside 0..{self.N}")
        return n * self.h

    @property
    def nodes(self) -> Array:
        return np.arange(self.N + 1, dtype=np.float64) * self.h


def make_grid(T: float, N: int) -> TimeGrid:
    return TimeGrid(float(T), N)


def left_node(grid: TimeGrid, s: float) -> float:
    """Left endpoint of the grid cell containing *s*.

    Cells are left-open and right-closed, :math:`(t_n, t_{n + 1}]`, so that
    ``left_node(grid, t_{n+1}) == t_n`` and ``left_node(grid, 0) == 0``.
    """
    if not (0.0 <= s <= grid.T):
        raise OutOfDomain(f"s={s!r} is outside [0, {grid.T}]")

    h = grid.h
    n = max(math.ceil(s / h) - 1, 0)
    # s / h may round across an integer; repair so that n h < s <= (n + 1) h
    if n > 0 and n * h >= s:
        n -= 1
    elif n < grid.N - 1 and (n + 1) * h < s:
        n += 1

    return n * h


# }}}

# {{{ problem


def compile_rhs(func: Callable[..., Any]) -> Any:
    """Compile *func* for the ``float64[::1](float64, float64[::1])`` signature
    that the solver kernels call through.
    """
    import numba
    from numba.core.registry import CPUDispatcher

    from fracsde._kernels import RHS_SIGNATURE

    if isinstance(func, CPUDispatcher):
        if RHS_SIGNATURE.args in func.signatures and len(func.signatures) == 1:
            return func
        func = func.py_func

    try:
        return numba.njit(RHS_SIGNATURE, nogil=True)(func)
    except Exception as exc:
        raise InvalidProblem(
            f"could not compile {getattr(func, '__name__', func)!r} as "
            f"(t: float, y: (d,) array) -> (d,) array: {exc}"
        ) from exc


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    r"""Multi-term stochastic fractional differential equation

    .. math::

        y'(t) + \sum_{i = 1}^m D^{\alpha_i} y(t)
            = f(t, y) + g(t, y) \frac{\mathrm{d} W_t}{\mathrm{d} t},
        \qquad y(0) = y_0,

    driven by a single scalar Brownian motion.

    *drift* and *diffusion* map ``(t: float, y: (d,) array)`` to a new
    contiguous ``(d,)`` array. They are compiled with :func:`numba.njit` for
    that signature (see :func:`compile_rhs`), so they must be written in the
    numba-supported subset of Python and NumPy and must not modify *y*. They are evaluated once at construction to check the
    output shape, which also rejects matrix-valued (multi-factor) diffusions.
    """

    y0: Array
    drift: Callable[[float, Array], Array]
    diffusion: Callable[[float, Array], Array]
    T: float = 1.0
    name: str = ""
    params: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        y0 = np.array(self.y0, dtype=np.float64).reshape(-1)
        y0.setflags(write=False)
        if y0.size == 0:
            raise InvalidProblem("initial value must have dimension d >= 1")
        if not np.all(np.isfinite(y0)):
            raise InvalidProblem("initial value must be finite")
        if not (math.isfinite(self.T) and self.T > 0):
            raise NonPositiveHorizon(f"horizon must be positive, got T={self.T!r}")

        object.__setattr__(self, "y0", y0)
        object.__setattr__(self, "drift", compile_rhs(self.drift))
        object.__setattr__(self, "diffusion", compile_rhs(self.diffusion))

        for label, func in (("drift", self.drift), ("diffusion", self.diffusion)):
            try:
                value = np.asarray(func(0.0, y0.copy()))
            except Exception as exc:
                raise InvalidProblem(
                    f"{label} could not be evaluated at (0, y0): {exc}"
                ) from exc

            if value.shape != y0.shape:
                raise InvalidProblem(
                    f"{label} must return an array of shape {y0.shape} "
                    f"(single Brownian factor), got shape {value.shape}"
                )
            if not np.all(np.isfinite(value)):
                raise InvalidProblem(f"{label} is not finite at (0, y0)")

    @property
    def dim(self) -> int:
        return self.y0.size


# }}}

# {{{ trajectory


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Numerical solution on a grid: ``values[n]`` approximates :math:`y(t_n)`."""

    grid: TimeGrid
    values: Array
    method: str = ""
    history: Any = None

    @property
    def times(self) -> Array:
        return self.grid.nodes

    @property
    def final(self) -> Array:
        return self.values[-1]


# }}}
