"""Seeded, grid-aligned Brownian increments with exact coarse/fine coupling."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from fracsde.core import Array, TimeGrid, make_grid
from fracsde.errors import FactorDoesNotDivideN

#: Description of the random number generator, echoed into study reports.
RNG_DESCRIPTION = (
    f"numpy {np.__version__} Generator(Philox(seed)).standard_normal * sqrt(h)"
)

_SEED_MASK = (1 << 64) - 1


def path_seed(base_seed: int, path_index: int) -> int:
    """Seed of the *path_index*-th sample path (64-bit wraparound)."""
    return (int(base_seed) + int(path_index)) & _SEED_MASK


@dataclass(frozen=True, eq=False)
class BrownianPath:
    """Increments ``increments[j] = W(t_{j+1}) - W(t_j)`` on *grid*."""

    grid: TimeGrid
    increments: Array
    seed: int

    def __post_init__(self) -> None:
        increments = np.array(self.increments, dtype=np.float64).reshape(-1)
        if increments.size != self.grid.N:
            raise ValueError(
                f"expected {self.grid.N} increments, got {increments.size}"
            )
        if not np.all(np.isfinite(increments)):
            raise ValueError("Brownian increments must be finite")

        increments.setflags(write=False)
        object.__setattr__(self, "increments", increments)

    @property
    def values(self) -> Array:
        """Path values :math:`W(t_n)` for ``n = 0, ..., N`` with ``W(0) = 0``."""
        w = np.zeros(self.grid.N + 1)
        np.cumsum(self.increments, out=w[1:])
        return w


def sample_path(seed: int, grid: TimeGrid) -> BrownianPath:
    """Draw ``N`` i.i.d. :math:`\\mathcal{N}(0, h)` increments.

    The output depends only on ``(seed, grid)``: the same inputs always give
    bit-identical increments.
    """
    seed = int(seed) & _SEED_MASK
    rng = np.random.Generator(np.random.Philox(seed))
    increments = rng.standard_normal(grid.N) * np.sqrt(grid.h)

    return BrownianPath(grid=grid, increments=increments, seed=seed)


def coarsen(path: BrownianPath, factor: int) -> BrownianPath:
    """Sum consecutive blocks of *factor* increments onto a grid with
    ``N / factor`` steps on the same interval.
    """
    N = path.grid.N
    if factor < 1 or N % factor != 0:
        raise FactorDoesNotDivideN(f"factor {factor} does not divide N={N}")

    if factor == 1:
        return path

    # NOTE: explicit left-to-right accumulation so every block sum is exact
    # to the same rounding sequence regardless of numpy's reduction strategy
    blocks = path.increments.reshape(N // factor, factor)
    coarse = blocks[:, 0].copy()
    for k in range(1, factor):
        coarse += blocks[:, k]

    return BrownianPath(
        grid=make_grid(path.grid.T, N // factor),
        increments=coarse,
        seed=path.seed,
    )


# {{{ dump


def save_increments(path: BrownianPath, filename: str | os.PathLike[str]) -> None:
    """Write the increments as ``.npy`` (binary) or CSV, depending on suffix.

    The CSV variant has a header line with ``T``, ``N`` and ``seed`` and one
    increment per line, printed with 17 significant digits so that it
    round-trips exactly.
    """
    filename = os.fspath(filename)
    if filename.endswith(".npy"):
        np.save(filename, path.increments)
        return

    with open(filename, "w", encoding="utf-8") as outf:
        outf.write(f"# T={path.grid.T!r} N={path.grid.N} seed={path.seed}\n")
        for dw in path.increments:
            outf.write(f"{dw:.17e}\n")


def load_increments(
    filename: str | os.PathLike[str], T: float = 1.0, seed: int = 0
) -> BrownianPath:
    filename = os.fspath(filename)
    if filename.endswith(".npy"):
        increments = np.load(filename)
    else:
        with open(filename, encoding="utf-8") as inf:
            header = inf.readline()
            if header.startswith("#"):
                fields = dict(item.split("=") for item in header[1:].split())
                T = float(fields.get("T", T))
                seed = int(fields.get("seed", seed))
            else:
                inf.seek(0)
            increments = np.loadtxt(inf, ndmin=1)

    return BrownianPath(
        grid=make_grid(T, increments.size), increments=increments, seed=seed
    )


# }}}
