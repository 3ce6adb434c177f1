"""Compiled time-stepping loops behind :mod:`fracsde.solvers`.

Each kernel returns ``(values, bad_step)`` where ``bad_step`` is ``0`` on
success and otherwise the first step index whose state is not finite; the
trajectory is only filled up to that step.
"""

from __future__ import annotations

import math

import numba
import numpy as np
from numba import types

_vec = types.float64[::1]

#: Signature that drift and diffusion callables are compiled for.
RHS_SIGNATURE = _vec(types.float64, _vec)
_rhs = types.FunctionType(RHS_SIGNATURE)
_result = types.Tuple((types.float64[:, ::1], types.int64))


@numba.njit(nogil=True, cache=True)
def _is_finite(x):
    for k in range(x.shape[0]):
        if not math.isfinite(x[k]):
            return False
    return True


@numba.njit(nogil=True, cache=True)
def _advance_forcing(f, g, t, y, h, dw, forcing):
    """Accumulate ``f(t, y) h + g(t, y) dW`` into *forcing*."""
    fy = f(t, y)
    gy = g(t, y)
    for k in range(forcing.shape[0]):
        forcing[k] += fy[k] * h + gy[k] * dw


@numba.njit(nogil=True, cache=True)
def _direct_memory(Y, n, h, alphas, inv_gammas, out):
    """Rectangle-rule history ``sum_i c_i sum_{j<n} (t_n - t_j)^(-alpha_i) Y_j h``."""
    d = out.shape[0]
    for k in range(d):
        out[k] = 0.0

    tn = n * h
    for j in range(n):
        lg = math.log(tn - j * h)
        w = 0.0
        for i in range(alphas.shape[0]):
            w += inv_gammas[i] * math.exp(-alphas[i] * lg)
        for k in range(d):
            out[k] += w * Y[j, k]

    for k in range(d):
        out[k] *= h


@numba.njit(
    _result(_rhs, _rhs, _vec, _vec, _vec, types.float64, _vec, types.boolean),
    nogil=True,
    cache=True,
)
def direct_kernel(f, g, y0, alphas, inv_gammas, h, dW, memory):
    N = dW.shape[0]
    d = y0.shape[0]

    Y = np.empty((N + 1, d))
    Y[0] = y0
    forcing = np.zeros(d)
    mem = np.zeros(d)

    for n in range(1, N + 1):
        _advance_forcing(f, g, (n - 1) * h, Y[n - 1], h, dW[n - 1], forcing)
        if memory:
            _direct_memory(Y, n, h, alphas, inv_gammas, mem)

        for k in range(d):
            Y[n, k] = y0[k] - mem[k] + forcing[k]

        if not _is_finite(Y[n]):
            return Y, n

    return Y, 0


@numba.njit(
    _result(
        _rhs,
        _rhs,
        _vec,
        _vec,
        _vec,
        types.float64,
        _vec,
        _vec,
        _vec,
        types.int64[::1],
        types.boolean,
        types.float64[:, :, ::1],
    ),
    nogil=True,
    cache=True,
)
def fast_kernel(
    f, g, y0, alphas, inv_gammas, h, dW, weights, exponents, offsets, memory, trace
):
    """Fast stepping with the exponential history recurrence.

    Terms of order ``i`` occupy ``offsets[i]:offsets[i + 1]`` of *weights* and
    *exponents*. When ``trace.shape[0] > 0`` the accumulators ``U(t_n)`` are
    stored in ``trace[n]``.
    """
    N = dW.shape[0]
    d = y0.shape[0]
    K = exponents.shape[0]
    m = alphas.shape[0]
    record = trace.shape[0] > 0

    decay = np.empty(K)
    inflow = np.empty(K)
    for j in range(K):
        decay[j] = math.exp(-h * exponents[j])
        inflow[j] = math.exp(-2.0 * h * exponents[j]) * h

    # weight of the most recent cell, same arithmetic as the direct kernel
    local = np.empty(m)
    lg = math.log(h)
    for i in range(m):
        local[i] = inv_gammas[i] * math.exp(-alphas[i] * lg)

    Y = np.empty((N + 1, d))
    Y[0] = y0
    U = np.zeros((K, d))
    forcing = np.zeros(d)
    mem = np.zeros(d)

    for n in range(1, N + 1):
        _advance_forcing(f, g, (n - 1) * h, Y[n - 1], h, dW[n - 1], forcing)

        if memory and n == 1:
            _direct_memory(Y, 1, h, alphas, inv_gammas, mem)
        elif memory:
            for k in range(d):
                x_prev = Y[n - 2, k]
                soe_part = 0.0
                for i in range(m):
                    acc = 0.0
                    for j in range(offsets[i], offsets[i + 1]):
                        u = decay[j] * U[j, k] + inflow[j] * x_prev
                        U[j, k] = u
                        acc += weights[j] * u
                    soe_part += inv_gammas[i] * acc

                w_local = 0.0
                for i in range(m):
                    w_local += local[i]
                mem[k] = soe_part + w_local * Y[n - 1, k] * h

        if record:
            trace[n] = U

        for k in range(d):
            Y[n, k] = y0[k] - mem[k] + forcing[k]

        if not _is_finite(Y[n]):
            return Y, n

    return Y, 0
