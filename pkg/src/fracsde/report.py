"""Writers for study reports: JSON, CSV and gnuplot-ready error tables.

All files are written atomically: the content goes to a temporary file in
the target directory which is then renamed over the destination, so an
interrupted run never leaves a truncated report behind.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from typing import Any, Mapping

from fracsde.harness import ConvergenceReport

CSV_COLUMNS = ("n", "error", "order", "cpu_direct_s", "cpu_fast_s")


def _format(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else ""
    return str(value)


def _format_seconds(value: float | None) -> str:
    return "" if value is None else f"{value:.6f}"


def render_csv(report: ConvergenceReport) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in report.csv_rows():
        writer.writerow(
            [
                _format(row["n"]),
                _format(row["error"]),
                _format(row["order"]),
                _format_seconds(row["cpu_direct_s"]),
                _format_seconds(row["cpu_fast_s"]),
            ]
        )

    return buffer.getvalue()


def render_json(report: ConvergenceReport, config: Mapping[str, Any] | None = None) -> str:
    data = report.to_dict()
    # JSON object keys must be strings
    data["n_exp"] = {str(k): v for k, v in data["n_exp"].items()}
    if config is not None:
        data["config"] = dict(config)

    return json.dumps(data, indent=2, sort_keys=False) + "\n"


def render_gnuplot(report: ConvergenceReport, method: str) -> str:
    lines = [f"# h e_n ({method}); plot with logscale xy", "# h error"]
    T = float(report.metadata.get("problem_params", {}).get("T", 1.0))
    for n, err in zip(report.resolutions, report.errors[method]):
        lines.append(f"{T / n!r} {err!r}")

    return "\n".join(lines) + "\n"


def atomic_write_many(files: Mapping[str | os.PathLike[str], str]) -> None:
    """Write several text files so that either all or none of them appear.

    Every file is first written to a temporary sibling; only when all of them
    are complete are they renamed into place.
    """
    staged: list[tuple[str, str]] = []
    try:
        for target, content in files.items():
            target = os.fspath(target)
            dirname = os.path.dirname(os.path.abspath(target))
            fd, tmp = tempfile.mkstemp(
                dir=dirname, prefix=f".{os.path.basename(target)}.", suffix=".tmp"
            )
            staged.append((tmp, target))
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as outf:
                outf.write(content)
                outf.flush()
                os.fsync(outf.fileno())

        for tmp, target in staged:
            os.replace(tmp, target)
    finally:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)


def write_report(
    report: ConvergenceReport,
    out_dir: str | os.PathLike[str],
    config: Mapping[str, Any] | None = None,
) -> dict[str, str]:
    """Write ``report.json``, ``report.csv`` and ``errors_<method>.dat`` into
    *out_dir* (created if missing). Returns the written paths by kind.
    """
    out_dir = os.fspath(out_dir)
    os.makedirs(out_dir, exist_ok=True)

    paths = {
        "json": os.path.join(out_dir, "report.json"),
        "csv": os.path.join(out_dir, "report.csv"),
    }
    files = {
        paths["json"]: render_json(report, config),
        paths["csv"]: render_csv(report),
    }
    for method in report.methods:
        paths[f"gnuplot_{method}"] = os.path.join(out_dir, f"errors_{method}.dat")
        files[paths[f"gnuplot_{method}"]] = render_gnuplot(report, method)

    atomic_write_many(files)
    return paths
