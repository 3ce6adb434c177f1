r"""Sum-of-exponentials approximation of the power-law kernel :math:`t^{-\alpha}`.

The approximation discretizes the Laplace-type representation

.. math::

    t^{-\alpha} = \frac{1}{\Gamma(\alpha)}
        \int_0^\infty e^{-s t} s^{\alpha - 1} \,\mathrm{d}s

with Gauss-Jacobi quadrature (weight :math:`s^{\alpha - 1}`) on a
low-frequency panel :math:`[0, 2^{k_0}]` and composite Gauss-Legendre
quadrature on the dyadic panels :math:`[2^k, 2^{k + 1}]`, up to a frequency
beyond which the remaining tail is below tolerance for every
:math:`t \ge \delta`. Each quadrature node :math:`s_j` with weight :math:`w_j`
gives a term :math:`\omega_j e^{-s_j t}`.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincc, roots_jacobi, roots_legendre

from fracsde.core import Array
from fracsde.errors import InvalidWindow, NonPositiveTime, ToleranceNotMet

#: Tolerance used by the fast solver when none is given.
DEFAULT_EPSILON = 1.0e-10

# number of log-spaced points used when choosing the panel node counts
_ADAPT_SAMPLES = 400
# number of log-spaced points in the final accuracy check
_VALIDATION_SAMPLES = 10_000
# per-panel node count limit; reaching it means the tolerance is unattainable
_MAX_PANEL_NODES = 64


@dataclass(frozen=True, eq=False)
class SoeApproximation:
    r"""Terms :math:`(\omega_j, s_j)` such that
    :math:`|t^{-\alpha} - \sum_j \omega_j e^{-s_j t}| \le \epsilon` for
    :math:`t \in [\delta, T]`.
    """

    alpha: float
    weights: Array
    exponents: Array
    epsilon: float
    delta: float
    T: float

    def __post_init__(self) -> None:
        weights = np.array(self.weights, dtype=np.float64).reshape(-1)
        exponents = np.array(self.exponents, dtype=np.float64).reshape(-1)
        if weights.shape != exponents.shape:
            raise ValueError("weights and exponents must have the same length")

        weights.setflags(write=False)
        exponents.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "exponents", exponents)

    @property
    def n_exp(self) -> int:
        return self.weights.size

    @property
    def terms(self) -> list[tuple[float, float]]:
        return [(float(w), float(s)) for w, s in zip(self.weights, self.exponents)]


def eval_soe(soe: SoeApproximation, t: float | Array) -> float | Array:
    """Evaluate :math:`\\sum_j \\omega_j e^{-s_j t}` at one or more times."""
    tt = np.asarray(t, dtype=np.float64)
    if np.any(~(tt > 0)):
        raise NonPositiveTime(f"SOE evaluation requires t > 0, got {t!r}")

    result = np.exp(-np.multiply.outer(tt, soe.exponents)) @ soe.weights
    return float(result) if tt.ndim == 0 else result


def validate_soe(soe: SoeApproximation, samples: int = _VALIDATION_SAMPLES) -> float:
    """Maximum absolute kernel error over *samples* log-spaced points in
    :math:`[\\delta, T]` (both endpoints included).
    """
    if samples < 2:
        raise ValueError(f"at least 2 samples are required, got {samples}")

    t = np.geomspace(soe.delta, soe.T, samples)
    return float(np.max(np.abs(t ** (-soe.alpha) - eval_soe(soe, t))))


# {{{ construction


def _gauss_jacobi_panel(alpha: float, upper: float, n: int) -> tuple[Array, Array]:
    # s = upper (1 + x) / 2 turns s^(alpha - 1) ds into (1 + x)^(alpha - 1) dx
    x, w = roots_jacobi(n, 0.0, alpha - 1.0)
    s = 0.5 * upper * (1.0 + x)
    omega = (0.5 * upper) ** alpha * w / math.gamma(alpha)
    return omega, s


def _gauss_legendre_panel(alpha: float, a: float, n: int) -> tuple[Array, Array]:
    # panel [a, 2a]
    x, w = roots_legendre(n)
    s = a + 0.5 * a * (1.0 + x)
    omega = 0.5 * a * w * s ** (alpha - 1.0) / math.gamma(alpha)
    return omega, s


def _panel_nodes(panel, t: Array, tol: float, n_start: int) -> tuple[Array, Array]:
    """Smallest rule whose difference to the next (two nodes larger) rule is
    below *tol*, used as an estimate of its own error.
    """

    def evaluate(rule: tuple[Array, Array]) -> Array:
        omega, s = rule
        return np.exp(-np.multiply.outer(t, s)) @ omega

    n = n_start
    rule = panel(n)
    value = evaluate(rule)
    while n < _MAX_PANEL_NODES:
        next_rule = panel(n + 2)
        next_value = evaluate(next_rule)
        if np.max(np.abs(next_value - value)) <= tol:
            return rule

        n, rule, value = n + 2, next_rule, next_value

    return rule


def _tail_cutoff(alpha: float, epsilon: float, delta: float, k: int) -> int:
    # smallest k with (1 / Gamma(alpha)) int_{2^k}^inf s^(alpha-1) e^(-s delta) ds
    # = Q(alpha, 2^k delta) delta^(-alpha) below the tolerance share
    while gammaincc(alpha, 2.0**k * delta) * delta ** (-alpha) > epsilon:
        k += 1

    return k


def _build(
    alpha: float, epsilon: float, delta: float, T: float, refinement: float
) -> SoeApproximation:
    t = np.geomspace(delta, T, _ADAPT_SAMPLES)

    k_low = math.floor(math.log2(1.0 / T))
    k_high = _tail_cutoff(alpha, 0.25 * epsilon, delta, k_low + 1)
    tol = 0.25 * epsilon / refinement

    rules = [
        _panel_nodes(
            functools.partial(_gauss_jacobi_panel, alpha, 2.0**k_low), t, tol, 4
        )
    ]
    rules.extend(
        _panel_nodes(functools.partial(_gauss_legendre_panel, alpha, 2.0**k), t, tol, 2)
        for k in range(k_low, k_high)
    )

    return SoeApproximation(
        alpha=alpha,
        weights=np.concatenate([omega for omega, _ in rules]),
        exponents=np.concatenate([s for _, s in rules]),
        epsilon=epsilon,
        delta=delta,
        T=T,
    )


@functools.lru_cache(maxsize=256)
def build_soe(
    alpha: float, epsilon: float = DEFAULT_EPSILON, delta: float = 1.0e-3, T: float = 1.0
) -> SoeApproximation:
    """Construct an SOE approximation of :math:`t^{-\\alpha}` on
    :math:`[\\delta, T]` with absolute accuracy *epsilon*.

    The node count of every panel is increased until successive Gauss rules
    agree to a share of *epsilon*. The result is then checked with
    :func:`validate_soe`; on failure the panels are refined once more before
    giving up with :class:`~fracsde.errors.ToleranceNotMet`.
    """
    alpha, epsilon, delta, T = float(alpha), float(epsilon), float(delta), float(T)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha!r}")
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must be in (0, 1), got {epsilon!r}")
    if not (delta > 0 and T > 0):
        raise InvalidWindow(f"window [{delta!r}, {T!r}] must be positive")
    if not delta < T:
        raise InvalidWindow(f"cutoff delta={delta!r} must be smaller than T={T!r}")

    for refinement in (1.0, 100.0):
        soe = _build(alpha, epsilon, delta, T, refinement)
        if validate_soe(soe) <= epsilon:
            return soe

    raise ToleranceNotMet(
        f"SOE for alpha={alpha} reached max error {validate_soe(soe):.3e} "
        f"> epsilon={epsilon:.3e} on [{delta}, {T}]"
    )


# }}}
