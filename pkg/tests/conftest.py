from __future__ import annotations

import math

import numba
import numpy as np

from fracsde._kernels import RHS_SIGNATURE


@numba.njit(RHS_SIGNATURE, cache=True)
def zero_rhs(t, y):
    return np.zeros_like(y)


@numba.njit(RHS_SIGNATURE, cache=True)
def linear_drift(t, y):
    return -0.5 * y + t


@numba.njit(RHS_SIGNATURE, cache=True)
def sine_diffusion_2d(t, y):
    out = np.empty_like(y)
    out[0] = 0.3 * math.sin(y[1])
    out[1] = 0.2 * math.cos(y[0])
    return out


def brute_force_direct(y0, alphas, h, dW, f, g):
    """Plain-Python evaluation of the modified Euler-Maruyama scheme.

    One nested loop per sum, every kernel value recomputed from scratch with
    the ``**`` operator, :func:`math.gamma` and Python callables *f* and *g*
    acting on lists. Shares no code with the package.
    """
    d = len(y0)
    N = len(dW)
    Y = [list(map(float, y0))]
    for n in range(1, N + 1):
        tn = n * h
        y = list(map(float, y0))
        for a in alphas:
            c = h / math.gamma(1.0 - a)
            for j in range(n):
                w = c * (tn - j * h) ** (-a)
                for k in range(d):
                    y[k] -= w * Y[j][k]
        for j in range(n):
            fj = f(j * h, Y[j])
            gj = g(j * h, Y[j])
            for k in range(d):
                y[k] += fj[k] * h + gj[k] * dW[j]
        Y.append(y)

    return np.array(Y)


def py_sin_ty(t, y):
    return [math.sin(t * v) for v in y]


def py_sin_y(t, y):
    return [math.sin(v) for v in y]


# {{{ acceptance summary

ACCEPTANCE: dict[int, list[tuple[bool, str]]] = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE.setdefault(number, []).append((bool(passed), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return

    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        checks = ACCEPTANCE[number]
        status = "PASS" if all(ok for ok, _ in checks) else "FAIL"
        details = "; ".join(detail for _, detail in checks)
        terminalreporter.write_line(f"criterion {number}: {status} | {details}")


# }}}
