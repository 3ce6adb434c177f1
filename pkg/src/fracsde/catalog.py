"""Registered test problems addressable by id from the command line.

Every entry has globally Lipschitz, linearly bounded drift and diffusion
that are also Lipschitz in time on bounded sets, so the convergence theory of
the schemes applies.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

import numba
import numpy as np

from fracsde._kernels import RHS_SIGNATURE
from fracsde.core import FractionalOrders, ProblemSpec, validate_orders


@numba.njit(RHS_SIGNATURE, nogil=True, cache=True)
def sin_ty(t, y):
    return np.sin(t * y)


@numba.njit(RHS_SIGNATURE, nogil=True, cache=True)
def sin_y(t, y):
    return np.sin(y)


@dataclass(frozen=True)
class ProblemCatalogEntry:
    id: str
    description: str
    constructor: Callable[..., ProblemSpec]
    default_orders: tuple[float, ...]

    def make(self, **params: Any) -> ProblemSpec:
        return self.constructor(**params)

    def orders(self) -> FractionalOrders:
        return validate_orders(self.default_orders)


def _sine_problem(name: str, y0: float = 0.1, T: float = 1.0) -> ProblemSpec:
    return ProblemSpec(
        y0=np.array([y0]),
        drift=sin_ty,
        diffusion=sin_y,
        T=T,
        name=name,
        params={"y0": y0, "T": T},
    )


def make_example1(y0: float = 0.1, T: float = 1.0) -> ProblemSpec:
    return _sine_problem("example1", y0=y0, T=T)


def make_example2(y0: float = 0.1, T: float = 1.0) -> ProblemSpec:
    return _sine_problem("example2", y0=y0, T=T)


CATALOG: dict[str, ProblemCatalogEntry] = {
    entry.id: entry
    for entry in (
        ProblemCatalogEntry(
            id="example1",
            description=(
                "two-term equation y' + D^a1 y + D^a2 y = sin(t y) + sin(y) dW/dt "
                "on (0, 1] with y(0) = 0.1"
            ),
            constructor=make_example1,
            default_orders=(0.6, 0.8),
        ),
        ProblemCatalogEntry(
            id="example2",
            description=(
                "three-term equation y' + D^a1 y + D^a2 y + D^a3 y "
                "= sin(t y) + sin(y) dW/dt on (0, 1] with y(0) = 0.1; the first "
                "derivative term is kept, i.e. this is the general model with "
                "m = 3 and the same f, g and y0 as example1"
            ),
            constructor=make_example2,
            default_orders=(0.1, 0.5, 0.85),
        ),
    )
}


def get_problem(problem_id: str, **params: Any) -> ProblemSpec:
    try:
        entry = CATALOG[problem_id]
    except KeyError:
        raise KeyError(
            f"unknown problem {problem_id!r}; available: {', '.join(sorted(CATALOG))}"
        ) from None

    return entry.make(**params)
