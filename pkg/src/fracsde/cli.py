"""Command-line front end.

Subcommands
-----------

``study`` (default)
    Run a coupled-path convergence study and write ``report.json``,
    ``report.csv`` and ``errors_<method>.dat`` into ``--out-dir``.
``soe-validate``
    Build SOE approximations and print ``alpha,epsilon,delta,n_exp,max_error``
    as CSV.
``trajectory``
    Solve a single sample path (path index 0, drawn on the finest ``--n`` and
    summed down to the coarser ones) on every ``--n`` and write the
    solution and the Brownian increments as CSV, for debugging and for
    comparison with other implementations.

Configuration
-------------

Every option is a key of a flat JSON object. Values are taken, in order of
decreasing precedence, from command-line flags, environment variables
``FRACSDE_<KEY>`` (for example ``FRACSDE_PATHS=1000``), the file given with
``--config`` and finally the built-in defaults in :data:`DEFAULTS`. Unknown
keys are rejected everywhere. The ``config`` entry of ``report.json`` is the
effective configuration and can be passed back with ``--config``.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass
from typing import Any, Callable, Mapping, Sequence

from fracsde.catalog import CATALOG
from fracsde.errors import (
    ConfigError,
    ConflictingOptions,
    FracSDEError,
    MalformedValue,
    UnknownFlag,
)

log = logging.getLogger("fracsde")

ENV_PREFIX = "FRACSDE_"
COMMANDS = ("study", "soe-validate", "trajectory")

# {{{ configuration


@dataclass(frozen=True)
class RunConfiguration:
    command: str = "study"
    #: catalog problem id
    problem: str = "example1"
    #: fractional orders, strictly increasing in (0, 1)
    alphas: tuple[float, ...] = (0.1, 0.2)
    #: resolutions (number of steps), each dividing the next
    n: tuple[int, ...] = (128, 256)
    #: number of Monte Carlo sample paths
    paths: int = 200
    #: base seed; path i uses seed + i
    seed: int = 42
    #: direct, fast or both
    method: str = "both"
    #: SOE tolerance of the fast method
    soe_eps: float = 1.0e-10
    #: output directory
    out_dir: str = "results"
    #: worker threads for the path loop
    workers: int = 1
    #: timing repetitions per resolution, 0 disables timing
    repeat: int = 1
    #: initial value of the catalog problem
    y0: float = 0.1
    #: final time
    T: float = 1.0
    #: soe-validate: orders to approximate
    alpha: tuple[float, ...] = (0.5,)
    #: soe-validate: tolerance
    eps: float = 1.0e-9
    #: soe-validate: cutoff time
    delta: float = 1.0e-4
    #: soe-validate: number of log-spaced check points
    samples: int = 10_000

    @property
    def methods(self) -> tuple[str, ...]:
        return ("direct", "fast") if self.method == "both" else (self.method,)

    def to_dict(self) -> dict[str, Any]:
        return {
            k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()
        }

    def to_study_config(self):
        from fracsde.harness import StudyConfig

        return StudyConfig(
            problem=self.problem,
            orders=self.alphas,
            resolutions=self.n,
            path_count=self.paths,
            base_seed=self.seed,
            soe_epsilon=self.soe_eps,
            methods=self.methods,
            workers=self.workers,
            repeat=self.repeat,
            problem_params={"y0": self.y0, "T": self.T},
        )


DEFAULTS: dict[str, Any] = RunConfiguration().to_dict()


def _split(value: Any) -> list[Any]:
    if isinstance(value, (list, tuple)):
        return list(value)
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return [value]


def _as_int(value: Any) -> int:
    if isinstance(value, bool):
        raise ValueError("expected an integer")
    if isinstance(value, float):
        if not value.is_integer():
            raise ValueError(f"expected an integer, got {value!r}")
        return int(value)
    return int(value)


def _as_float(value: Any) -> float:
    if isinstance(value, bool):
        raise ValueError("expected a number")
    return float(value)


def _command(value: Any) -> str:
    if value not in COMMANDS:
        raise ValueError(f"expected one of {', '.join(COMMANDS)}")
    return value


def _problem(value: Any) -> str:
    if value not in CATALOG:
        raise ValueError(f"unknown problem; available: {', '.join(sorted(CATALOG))}")
    return value


def _orders(value: Any) -> tuple[float, ...]:
    from fracsde.core import validate_orders

    return validate_orders([_as_float(v) for v in _split(value)]).alphas


def _order_list(value: Any) -> tuple[float, ...]:
    alphas = tuple(_as_float(v) for v in _split(value))
    if not alphas or not all(0.0 < a < 1.0 for a in alphas):
        raise ValueError("every order must be in (0, 1)")
    return alphas


def _resolutions(value: Any) -> tuple[int, ...]:
    ns = tuple(_as_int(v) for v in _split(value))
    if not ns or any(n < 1 for n in ns):
        raise ValueError("resolutions must be positive integers")
    for a, b in zip(ns[:-1], ns[1:]):
        if not (b > a and b % a == 0):
            raise ValueError(f"each resolution must divide the next larger one ({a}, {b})")
    return ns


def _bounded_int(lower: int) -> Callable[[Any], int]:
    def convert(value: Any) -> int:
        result = _as_int(value)
        if result < lower:
            raise ValueError(f"must be at least {lower}")
        return result

    return convert


def _seed(value: Any) -> int:
    result = _as_int(value)
    if not 0 <= result < 2**64:
        raise ValueError("must be in [0, 2**64)")
    return result


def _method(value: Any) -> str:
    if value not in ("direct", "fast", "both"):
        raise ValueError("expected direct, fast or both")
    return value


def _positive(value: Any) -> float:
    result = _as_float(value)
    if not result > 0:
        raise ValueError("must be positive")
    return result


def _string(value: Any) -> str:
    if not isinstance(value, str) or not value:
        raise ValueError("expected a non-empty string")
    return value


CONVERTERS: dict[str, Callable[[Any], Any]] = {
    "command": _command,
    "problem": _problem,
    "alphas": _orders,
    "n": _resolutions,
    "paths": _bounded_int(2),
    "seed": _seed,
    "method": _method,
    "soe_eps": _as_float,
    "out_dir": _string,
    "workers": _bounded_int(1),
    "repeat": _bounded_int(0),
    "y0": _as_float,
    "T": _positive,
    "alpha": _order_list,
    "eps": _as_float,
    "delta": _positive,
    "samples": _bounded_int(2),
}

assert set(CONVERTERS) == set(DEFAULTS)


def _flag(key: str) -> str:
    return "--" + key.replace("_", "-")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UnknownFlag(message)


def _make_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="fracsde",
        description=(
            "Euler-Maruyama and fast sum-of-exponentials solvers for multi-term "
            "Riemann-Liouville stochastic fractional differential equations."
        ),
        epilog=(
            "Problems: "
            + "; ".join(f"{e.id}: {e.description}" for e in CATALOG.values())
            + f". Environment overrides use the prefix {ENV_PREFIX}, e.g. "
            f"{ENV_PREFIX}PATHS=1000."
        ),
        allow_abbrev=False,
    )
    parser.add_argument(
        "command", nargs="?", choices=COMMANDS, help="subcommand (default: study)"
    )
    parser.add_argument("--config", metavar="FILE", help="flat JSON configuration file")
    for key, default in DEFAULTS.items():
        if key == "command":
            continue
        shown = ",".join(map(str, default)) if isinstance(default, list) else default
        parser.add_argument(
            _flag(key), dest=key, metavar=key.upper(), help=f"(default: {shown})"
        )

    return parser


def _convert(key: str, value: Any, source: str) -> Any:
    try:
        return CONVERTERS[key](value)
    except (ValueError, TypeError, FracSDEError) as exc:
        raise MalformedValue(f"{source}: invalid value {value!r}: {exc}") from exc


def load_config_file(filename: str) -> dict[str, Any]:
    try:
        with open(filename, encoding="utf-8") as inf:
            data = json.load(inf)
    except OSError as exc:
        raise MalformedValue(f"--config: cannot read {filename!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise MalformedValue(f"--config: {filename!r} is not valid JSON: {exc}") from exc

    if not isinstance(data, dict):
        raise MalformedValue(f"--config: {filename!r} must contain a JSON object")
    # the echoed configuration of a report is accepted as a config file as is
    if "config" in data and isinstance(data["config"], dict) and "errors" in data:
        data = data["config"]

    unknown = sorted(set(data) - set(DEFAULTS))
    if unknown:
        raise UnknownFlag(f"--config: unknown keys {', '.join(unknown)}")

    return data


def parse_config(
    argv: Sequence[str] | None = None,
    config_file: str | None = None,
    env: Mapping[str, str] | None = None,
) -> RunConfiguration:
    """Merge flags, environment, config file and defaults into a
    :class:`RunConfiguration`.
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    env = os.environ if env is None else env

    parser = _make_parser()
    args, extra = parser.parse_known_args(argv)
    if extra:
        raise UnknownFlag(f"unknown arguments: {' '.join(extra)}")

    values: dict[str, Any] = {}
    sources: dict[str, str] = {}

    config_file = args.config or config_file
    if config_file:
        for key, value in load_config_file(config_file).items():
            values[key], sources[key] = value, f"{config_file}: {key}"

    for name, value in env.items():
        if not name.startswith(ENV_PREFIX):
            continue
        key = name[len(ENV_PREFIX):].lower()
        key = "T" if key == "t" else key
        if key not in DEFAULTS:
            raise UnknownFlag(f"unknown environment variable {name}")
        values[key], sources[key] = value, name

    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            values[key], sources[key] = value, _flag(key)
    if args.command is not None:
        values["command"], sources["command"] = args.command, "command"

    merged = dict(DEFAULTS)
    for key, value in values.items():
        merged[key] = _convert(key, value, sources[key])
    for key in ("alphas", "n", "alpha"):
        merged[key] = tuple(merged[key])

    config = RunConfiguration(**merged)
    if config.command != "soe-validate" and "fast" in config.methods:
        if not 0.0 < config.soe_eps < 1.0:
            raise ConflictingOptions(
                f"--method {config.method} needs --soe-eps in (0, 1), "
                f"got {config.soe_eps!r}"
            )
    if config.command == "soe-validate":
        if not 0.0 < config.eps < 1.0:
            raise ConflictingOptions(f"--eps must be in (0, 1), got {config.eps!r}")
        if not config.delta < config.T:
            raise ConflictingOptions(
                f"--delta {config.delta!r} must be smaller than --T {config.T!r}"
            )

    return config


# }}}

# {{{ commands


def _banner(config: RunConfiguration) -> str:
    return "effective configuration: " + json.dumps(config.to_dict(), sort_keys=True)


def _run_study(config: RunConfiguration) -> int:
    from fracsde.harness import run_study
    from fracsde.report import write_report

    report = run_study(config.to_study_config())
    paths = write_report(report, config.out_dir, config.to_dict())

    method = report.primary_method
    print(f"{'n':>6} {'error':>12} {'order':>8}  ({method})")
    for row in report.csv_rows():
        order = "" if row["order"] is None else f"{row['order']:.3f}"
        print(f"{row['n']:>6} {row['error']:>12.4e} {order:>8}")
    print(f"wrote {paths['csv']} and {paths['json']}")
    return 0


def _run_soe_validate(config: RunConfiguration) -> int:
    from fracsde.soe import build_soe, validate_soe

    ok = True
    print("alpha,epsilon,delta,n_exp,max_error")
    for alpha in config.alpha:
        soe = build_soe(alpha, config.eps, config.delta, config.T)
        error = validate_soe(soe, config.samples)
        ok = ok and error <= config.eps
        print(f"{alpha!r},{config.eps!r},{config.delta!r},{soe.n_exp},{error!r}")

    return 0 if ok else 1


def _run_trajectory(config: RunConfiguration) -> int:
    from fracsde.brownian import coarsen, sample_path
    from fracsde.catalog import get_problem
    from fracsde.core import make_grid, validate_orders
    from fracsde.report import atomic_write_many
    from fracsde.solvers import solve

    problem = get_problem(config.problem, y0=config.y0, T=config.T)
    orders = validate_orders(config.alphas)
    fine_grid = make_grid(problem.T, config.n[-1])
    fine = sample_path(config.seed, fine_grid)

    files = {}
    for N in config.n:
        path = coarsen(fine, fine_grid.N // N)
        lines = ["j,dW"] + [f"{j},{float(dw)!r}" for j, dw in enumerate(path.increments)]
        files[os.path.join(config.out_dir, f"increments_n{N}.csv")] = "\n".join(lines) + "\n"

        for method in config.methods:
            traj = solve(
                method, problem, orders, path.grid, path, soe_epsilon=config.soe_eps
            )
            header = "t," + ",".join(f"y{k + 1}" for k in range(problem.dim))
            lines = [header] + [
                f"{float(t)!r}," + ",".join(repr(float(v)) for v in y)
                for t, y in zip(traj.times, traj.values)
            ]
            name = f"trajectory_{method}_n{N}.csv"
            files[os.path.join(config.out_dir, name)] = "\n".join(lines) + "\n"

    os.makedirs(config.out_dir, exist_ok=True)
    atomic_write_many(files)
    for name in sorted(files):
        print(f"wrote {name}")
    return 0


def run(config: RunConfiguration) -> int:
    """Execute the configured subcommand; returns the process exit code."""
    commands = {
        "study": _run_study,
        "soe-validate": _run_soe_validate,
        "trajectory": _run_trajectory,
    }

    try:
        return commands[config.command](config)
    except OSError as exc:
        print(f"fracsde: error: cannot write output: {exc}", file=sys.stderr)
        return 1
    except FracSDEError as exc:
        print(f"fracsde: error: {exc}", file=sys.stderr)
        return 1


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(message)s")

    try:
        config = parse_config(argv)
    except ConfigError as exc:
        print(f"fracsde: error: {exc}", file=sys.stderr)
        return 2

    print(_banner(config), file=sys.stderr)
    return run(config)


# }}}


if __name__ == "__main__":
    sys.exit(main())
