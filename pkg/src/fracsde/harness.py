"""Coupled-path Monte Carlo error measurement, order estimation and timing.

The strong error at resolution ``n`` is measured against the solution at
``2 n`` driven by the same Brownian path,

.. math::

    e_n = \\max_{1 \\le k \\le n} \\Big(\\frac{1}{P} \\sum_{i = 1}^P
        \\|Y^{(n)}(t_k, \\omega_i) - Y^{(2n)}(t_k, \\omega_i)\\|^2\\Big)^{1/2},

so that no reference solution is needed. Sample path ``i`` always uses the
seed ``base_seed + i`` and is drawn on the finest grid of a study, then
summed down to each coarser grid. Per-path results therefore do not depend
on how paths are distributed over workers, and the reduction over paths runs
in ascending path order after all workers are done.
"""

from __future__ import annotations

import contextlib
import datetime
import logging
import math
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Iterator, Sequence

import numpy as np

from fracsde.brownian import RNG_DESCRIPTION, coarsen, path_seed, sample_path
from fracsde.catalog import get_problem
from fracsde.core import Array, FractionalOrders, ProblemSpec, make_grid, validate_orders
from fracsde.errors import (
    FracSDEError,
    NonPositiveError,
    PathFailure,
    StudyConfigError,
    StudyError,
)
from fracsde.soe import DEFAULT_EPSILON, SoeApproximation
from fracsde.solvers import METHODS, default_soes, solve

log = logging.getLogger(__name__)

# paths per work item; fixed so that the work split never depends on the pool
_CHUNK_SIZE = 16

# {{{ configuration


@dataclass(frozen=True)
class StudyConfig:
    problem: str
    orders: FractionalOrders
    resolutions: tuple[int, ...]
    path_count: int = 1000
    base_seed: int = 42
    soe_epsilon: float = DEFAULT_EPSILON
    methods: tuple[str, ...] = METHODS
    workers: int = 1
    #: timing repetitions per resolution; ``0`` disables timing
    repeat: int = 1
    problem_params: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "orders", validate_orders(self.orders))
        object.__setattr__(self, "resolutions", tuple(int(n) for n in self.resolutions))
        object.__setattr__(self, "methods", tuple(self.methods))

        if not self.methods:
            raise StudyConfigError("at least one method must be selected")
        for method in self.methods:
            if method not in METHODS:
                raise StudyConfigError(
                    f"unknown method {method!r}, expected one of {METHODS}"
                )
        if len(set(self.methods)) != len(self.methods):
            raise StudyConfigError(f"duplicate methods in {self.methods}")

        if not self.resolutions:
            raise StudyConfigError("at least one resolution is required")
        if any(n < 1 for n in self.resolutions):
            raise StudyConfigError(f"resolutions must be positive: {self.resolutions}")
        for a, b in zip(self.resolutions[:-1], self.resolutions[1:]):
            if not (b > a and b % a == 0):
                raise StudyConfigError(
                    f"each resolution must divide the next larger one, got {a} and {b}"
                )

        if self.path_count < 2:
            raise StudyConfigError(f"at least 2 paths are required, got {self.path_count}")
        if self.workers < 1:
            raise StudyConfigError(f"workers must be positive, got {self.workers}")
        if self.repeat < 0:
            raise StudyConfigError(f"repeat must be non-negative, got {self.repeat}")
        if "fast" in self.methods and not 0.0 < self.soe_epsilon < 1.0:
            raise StudyConfigError(
                f"SOE tolerance must be in (0, 1), got {self.soe_epsilon!r}"
            )

    @property
    def levels(self) -> tuple[int, ...]:
        """All grid sizes that are solved: the resolutions and twice the last."""
        return (*self.resolutions, 2 * self.resolutions[-1])

    def make_problem(self) -> ProblemSpec:
        return get_problem(self.problem, **self.problem_params)


# }}}

# {{{ per-path simulation


@dataclass(frozen=True)
class _Context:
    problem: ProblemSpec
    orders: FractionalOrders
    resolutions: tuple[int, ...]
    levels: tuple[int, ...]
    methods: tuple[str, ...]
    base_seed: int
    soes: dict[int, list[SoeApproximation]]
    soe_epsilon: float
    memory: bool


@dataclass
class _PathResult:
    # squared differences ||Y^(n)(t_k) - Y^(2n)(t_k)||^2, k = 1..n
    sqdiff: dict[str, list[Array]]
    # ||Y(T)||^2 for every level
    terminal: dict[str, list[float]]
    # solver wall-clock seconds for every level
    seconds: dict[str, list[float]]
    # max_n |X(t_n) - Y(t_n)| over all levels, if both methods ran
    fast_direct_diff: float


def _simulate_path(ctx: _Context, index: int) -> _PathResult:
    seed = path_seed(ctx.base_seed, index)
    fine_grid = make_grid(ctx.problem.T, ctx.levels[-1])
    fine = sample_path(seed, fine_grid)

    values: dict[str, dict[int, Array]] = {m: {} for m in ctx.methods}
    seconds: dict[str, list[float]] = {m: [] for m in ctx.methods}
    for N in ctx.levels:
        path = coarsen(fine, fine_grid.N // N)
        for method in ctx.methods:
            t_start = time.perf_counter()
            try:
                traj = solve(
                    method,
                    ctx.problem,
                    ctx.orders,
                    path.grid,
                    path,
                    soes=ctx.soes.get(N),
                    soe_epsilon=ctx.soe_epsilon,
                    memory=ctx.memory,
                )
            except FracSDEError as exc:
                raise PathFailure(index, seed, exc) from exc
            seconds[method].append(time.perf_counter() - t_start)
            values[method][N] = traj.values

    sqdiff = {}
    for method in ctx.methods:
        sqdiff[method] = [
            np.sum((values[method][N][1:] - values[method][2 * N][2::2]) ** 2, axis=1)
            for N in ctx.resolutions
        ]

    diff = 0.0
    if "direct" in ctx.methods and "fast" in ctx.methods:
        diff = max(
            float(np.max(np.abs(values["fast"][N] - values["direct"][N])))
            for N in ctx.levels
        )

    return _PathResult(
        sqdiff=sqdiff,
        terminal={
            m: [float(np.sum(values[m][N][-1] ** 2)) for N in ctx.levels]
            for m in ctx.methods
        },
        seconds=seconds,
        fast_direct_diff=diff,
    )


def _simulate_chunk(ctx: _Context, indices: range) -> list[_PathResult]:
    return [_simulate_path(ctx, i) for i in indices]


def _simulate(ctx: _Context, path_count: int, workers: int) -> list[_PathResult]:
    chunks = [
        range(start, min(start + _CHUNK_SIZE, path_count))
        for start in range(0, path_count, _CHUNK_SIZE)
    ]

    if workers == 1:
        results = [_simulate_chunk(ctx, chunk) for chunk in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            # map preserves submission order, i.e. ascending path index
            results = list(pool.map(lambda c: _simulate_chunk(ctx, c), chunks))

    return [r for chunk in results for r in chunk]


def _make_context(
    problem: ProblemSpec,
    orders: FractionalOrders,
    resolutions: Sequence[int],
    methods: Sequence[str],
    base_seed: int,
    soe_epsilon: float,
    memory: bool,
) -> _Context:
    levels = (*resolutions, 2 * resolutions[-1])
    soes = {}
    if "fast" in methods:
        for N in levels:
            soes[N] = default_soes(orders, make_grid(problem.T, N), soe_epsilon)

    return _Context(
        problem=problem,
        orders=orders,
        resolutions=tuple(resolutions),
        levels=levels,
        methods=tuple(methods),
        base_seed=base_seed,
        soes=soes,
        soe_epsilon=soe_epsilon,
        memory=memory,
    )


# }}}

# {{{ error statistics


@dataclass(frozen=True)
class CoupledError:
    """Coupled-path error :math:`e_n` with its Monte Carlo standard error.

    The standard error is the delta-method estimate at the maximizing node,
    ``std(sq[:, k]) / sqrt(P) / (2 e_n)``.
    """

    value: float
    stderr: float
    node: int


def _coupled_error(sqdiff: Array) -> CoupledError:
    """*sqdiff* has shape ``(path_count, n)``, rows in path order."""
    P = sqdiff.shape[0]
    mean = np.sum(sqdiff, axis=0) / P
    k = int(np.argmax(mean))
    value = math.sqrt(mean[k])
    if value > 0:
        stderr = float(np.std(sqdiff[:, k], ddof=1)) / math.sqrt(P) / (2.0 * value)
    else:
        stderr = 0.0

    return CoupledError(value=value, stderr=stderr, node=k + 1)


def coupled_error(
    problem: ProblemSpec,
    orders: FractionalOrders,
    N: int,
    path_count: int,
    base_seed: int,
    method: str,
    *,
    soe_epsilon: float = DEFAULT_EPSILON,
    workers: int = 1,
    memory: bool = True,
    with_stderr: bool = False,
) -> float | CoupledError:
    """Mean-square difference between the solutions on ``N`` and ``2 N``
    steps, maximized over the coarse nodes.

    Paths are drawn on ``2 N`` steps. Returns a :class:`CoupledError` instead
    of a float when *with_stderr* is set.
    """
    orders = validate_orders(orders)
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}, expected one of {METHODS}")
    if path_count < 1:
        raise ValueError(f"path_count must be positive, got {path_count}")

    ctx = _make_context(problem, orders, [N], [method], base_seed, soe_epsilon, memory)
    results = _simulate(ctx, path_count, workers)
    err = _coupled_error(np.stack([r.sqdiff[method][0] for r in results]))

    return err if with_stderr else err.value


def estimate_orders(errors: Sequence[float]) -> list[float]:
    """Observed orders ``log2(e_k / e_{k+1})`` for errors on doubling grids."""
    if len(errors) < 2:
        raise ValueError(f"at least 2 errors are required, got {len(errors)}")
    if any(not (e > 0) for e in errors):
        raise NonPositiveError(f"errors must be positive to estimate orders: {errors}")

    return [math.log2(a / b) for a, b in zip(errors[:-1], errors[1:])]


# }}}

# {{{ timing


def _time_batch(
    problem: ProblemSpec,
    orders: FractionalOrders,
    method: str,
    paths: Sequence[Any],
    soes: list[SoeApproximation] | None,
    soe_epsilon: float,
) -> float:
    t_start = time.perf_counter()
    for path in paths:
        solve(method, problem, orders, path.grid, path, soes=soes, soe_epsilon=soe_epsilon)

    return time.perf_counter() - t_start


def _batch_paths(problem: ProblemSpec, N: int, path_count: int, base_seed: int, fine_N: int):
    fine_grid = make_grid(problem.T, fine_N)
    return [
        coarsen(sample_path(path_seed(base_seed, i), fine_grid), fine_N // N)
        for i in range(path_count)
    ]


def benchmark(
    problem: ProblemSpec,
    orders: FractionalOrders,
    N: int,
    path_count: int,
    base_seed: int,
    *,
    repeat: int = 3,
    soe_epsilon: float = DEFAULT_EPSILON,
) -> tuple[float, float]:
    """Median wall-clock seconds of solving the same batch of paths with the
    direct and the fast method.

    Path generation and SOE construction happen before timing starts. Both
    methods are run once untimed first, so that kernel loading is excluded.
    """
    orders = validate_orders(orders)
    if repeat < 1:
        raise ValueError(f"repeat must be positive, got {repeat}")

    paths = _batch_paths(problem, N, path_count, base_seed, N)
    soes = default_soes(orders, paths[0].grid, soe_epsilon)
    for method in METHODS:
        _time_batch(problem, orders, method, paths[:1], soes, soe_epsilon)

    timings = []
    for method in METHODS:
        samples = [
            _time_batch(problem, orders, method, paths, soes, soe_epsilon)
            for _ in range(repeat)
        ]
        timings.append(statistics.median(samples))

    return timings[0], timings[1]


# }}}

# {{{ study


@dataclass
class ConvergenceReport:
    """Result of :func:`run_study`.

    ``errors[method][k]`` and ``seconds[method][k]`` belong to
    ``resolutions[k]``; ``orders[method][k]`` is estimated from resolutions
    ``k`` and ``k + 1``. ``terminal_second_moment[method][k]`` is the sample
    mean of :math:`\\|Y(T)\\|^2` on ``levels[k]``.
    """

    resolutions: list[int]
    levels: list[int]
    methods: list[str]
    errors: dict[str, list[float]]
    error_stderr: dict[str, list[float]]
    orders: dict[str, list[float]]
    seconds: dict[str, list[float | None]]
    terminal_second_moment: dict[str, list[float]]
    fast_direct_max_diff: float | None
    n_exp: dict[int, list[int]]
    metadata: dict[str, Any]

    @property
    def primary_method(self) -> str:
        return "direct" if "direct" in self.methods else self.methods[0]

    def average_order(self, method: str | None = None) -> float:
        """Order fitted between the coarsest and finest resolution."""
        errors = self.errors[method or self.primary_method]
        return math.log2(errors[0] / errors[-1]) / (len(errors) - 1)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def csv_rows(self) -> list[dict[str, Any]]:
        method = self.primary_method
        rows = []
        for k, n in enumerate(self.resolutions):
            rows.append(
                {
                    "n": n,
                    "error": self.errors[method][k],
                    "order": self.orders[method][k - 1] if k > 0 else None,
                    "cpu_direct_s": self.seconds.get("direct", [None] * (k + 1))[k],
                    "cpu_fast_s": self.seconds.get("fast", [None] * (k + 1))[k],
                }
            )
        return rows


@contextlib.contextmanager
def _stage(name: str) -> Iterator[None]:
    try:
        yield
    except StudyError:
        raise
    except Exception as exc:
        raise StudyError(name, exc) from exc


def run_study(config: StudyConfig, *, memory: bool = True) -> ConvergenceReport:
    """Measure coupled errors, observed orders and solver timings for every
    resolution and method of *config*.
    """
    with _stage("setup"):
        problem = config.make_problem()
        ctx = _make_context(
            problem,
            config.orders,
            config.resolutions,
            config.methods,
            config.base_seed,
            config.soe_epsilon,
            memory,
        )

    log.info(
        "study %s alphas=%s n=%s paths=%d methods=%s",
        config.problem,
        config.orders.alphas,
        config.resolutions,
        config.path_count,
        ",".join(config.methods),
    )

    with _stage("simulation"):
        results = _simulate(ctx, config.path_count, config.workers)

    errors: dict[str, list[float]] = {}
    stderr: dict[str, list[float]] = {}
    orders: dict[str, list[float]] = {}
    with _stage("error estimation"):
        for method in config.methods:
            stats = [
                _coupled_error(np.stack([r.sqdiff[method][k] for r in results]))
                for k in range(len(config.resolutions))
            ]
            errors[method] = [s.value for s in stats]
            stderr[method] = [s.stderr for s in stats]
            orders[method] = (
                estimate_orders(errors[method]) if len(stats) > 1 else []
            )

    seconds: dict[str, list[float | None]] = {}
    with _stage("timing"):
        nres = len(config.resolutions)
        for method in config.methods:
            if config.repeat == 0:
                seconds[method] = [None] * nres
                continue

            samples = [[sum(r.seconds[method][k] for r in results)] for k in range(nres)]
            for k, N in enumerate(config.resolutions):
                if config.repeat > 1:
                    paths = _batch_paths(
                        problem, N, config.path_count, config.base_seed, ctx.levels[-1]
                    )
                    samples[k].extend(
                        _time_batch(
                            problem, config.orders, method, paths,
                            ctx.soes.get(N), config.soe_epsilon,
                        )
                        for _ in range(config.repeat - 1)
                    )
            seconds[method] = [statistics.median(s) for s in samples]

    terminal = {
        method: [
            float(np.mean([r.terminal[method][k] for r in results]))
            for k in range(len(ctx.levels))
        ]
        for method in config.methods
    }

    both = "direct" in config.methods and "fast" in config.methods
    return ConvergenceReport(
        resolutions=list(config.resolutions),
        levels=list(ctx.levels),
        methods=list(config.methods),
        errors=errors,
        error_stderr=stderr,
        orders=orders,
        seconds=seconds,
        terminal_second_moment=terminal,
        fast_direct_max_diff=(
            max(r.fast_direct_diff for r in results) if both else None
        ),
        n_exp={N: [soe.n_exp for soe in soes] for N, soes in ctx.soes.items()},
        metadata={
            "problem": config.problem,
            "problem_params": dict(problem.params),
            "alphas": list(config.orders.alphas),
            "base_seed": config.base_seed,
            "path_count": config.path_count,
            "soe_epsilon": config.soe_epsilon,
            "workers": config.workers,
            "repeat": config.repeat,
            "rng": RNG_DESCRIPTION,
            "seed_rule": "path i uses (base_seed + i) mod 2**64",
            "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        },
    )


# }}}
