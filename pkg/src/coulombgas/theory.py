"""Closed-form conditional mean/variance predictions for every force regime.

For the spacing vector conditioned on total length 1, the per-spacing mean and
variance have explicit limits in each force regime (right-indexed: spacing 1
is adjacent to the pinned particle at 1, so it is the *least* force-penalized
gap and the macroscopic one in the collapsed phase):

sub-linear (F = o(N)):
    mean_k = (1/N) (1 - F/(2 beta N) (k/N - 1/2)),   var_k = 1/(2 beta N^3)

linear subcritical (F = f0 N, f0 < 4 beta):
    mean_k = a_k / N,   var_k = a_k^3 / (2 beta N^3),
    a_k = 1 / sqrt(1 + (k/N - 1/2) f0/beta + f0^2/(16 beta^2))

critical (F = 4 beta N):
    mean_k = sqrt(beta / (4 beta k N + lambda)),  var_k = O(N^{-3/2})

linear supercritical (F = f0 N, f0 > 4 beta):
    mean_1 = 1 - sqrt(4 beta / f0)                (macroscopic gap),
    mean_k = sqrt(beta / ((k-1) f0 N + lambda0))  for k >= 2,
    var_1 = O(N^{-3/4}),  var_k = O((k N)^{-3/2})

super-linear (F >> N):
    mean_1 = 1 - sqrt(4 beta N / F),  var_1 = O(F^{-3/2});
    no per-k closed form is available for k >= 2 in this regime.

The subcritical coefficient a_k interpolates the spacing profile across the
interval; it multiplies 1/N in the mean (spacings shrink where the force
weight is largest, i.e. a_k decreases in k), and its endpoint value is
a_N = 1/(1 + f0/(4 beta)) exactly.

Variances in the critical and supercritical regimes are known only up to
order of magnitude; those predictions carry ``variance_is_bound=True`` and the
stated order value, to be read as "bounded by a small multiple of this".
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .calibration import ModelParams, Regime, RegimeLabel
from .errors import DomainError, RegimeError

__all__ = [
    "SpacingPrediction",
    "a_coefficient",
    "predict_spacing",
    "gaussian_sum_density",
    "mean_error_scale",
]


@dataclass(frozen=True)
class SpacingPrediction:
    """Predicted conditional moments for one spacing index.

    ``variance_is_bound`` marks order-of-magnitude variances (critical and
    supercritical regimes), where ``variance`` holds the order value itself.
    ``mean`` and ``variance`` are None for indices the theory does not cover
    (k >= 2 in the super-linear regime).
    """

    k: int
    mean: float | None
    variance: float | None
    variance_is_bound: bool
    mean_error_order: str
    regime: RegimeLabel


def a_coefficient(k: int, n: int, f0: float, beta: float) -> float:
    """Subcritical spacing-profile coefficient.

    a_k = 1 / sqrt(1 + (k/n - 1/2) f0/beta + f0^2/(16 beta^2)); decreasing in
    k from a_1 ~ 1/(1 - f0/(4 beta)) down to a_n = 1/(1 + f0/(4 beta)).
    """
    if not 1 <= k <= n:
        raise DomainError(f"k must lie in [1, {n}], got {k}")
    if not beta > 0.0:
        raise DomainError(f"beta must be positive, got {beta}")
    if not 0.0 <= f0 < 4.0 * beta:
        raise RegimeError(
            f"a_k is defined for 0 <= f0 < 4*beta = {4.0 * beta}, got {f0}"
        )
    inner = 1.0 + (k / n - 0.5) * f0 / beta + f0 * f0 / (16.0 * beta * beta)
    return 1.0 / math.sqrt(inner)


def predict_spacing(params: ModelParams, k: int, regime: RegimeLabel,
                    lambda0: float | None = None,
                    lambda_cal: float | None = None) -> SpacingPrediction:
    """Closed-form prediction for spacing k in the given regime.

    ``lambda0`` (the supercritical gap tilt) is required in the linear
    supercritical regime; ``lambda_cal`` (the calibrated tilt) sharpens the
    critical-regime mean and defaults to its 0.5*beta*N seed scale otherwise.
    """
    n, beta, force = params.n, params.beta, params.force
    if not 1 <= k <= n:
        raise DomainError(f"k must lie in [1, {n}], got {k}")
    kind = regime.regime

    if kind is Regime.SUB_LINEAR:
        mean = (1.0 / n) * (1.0 - force / (2.0 * beta * n) * (k / n - 0.5))
        var = 1.0 / (2.0 * beta * n**3)
        return SpacingPrediction(k, mean, var, False, "log(N)/sqrt(N) + (F/N)^2", regime)

    if kind is Regime.LINEAR_SUB:
        f0 = regime.f0 if regime.f0 is not None else force / n
        ak = a_coefficient(k, n, f0, beta)
        mean = ak / n
        var = ak**3 / (2.0 * beta * n**3)
        return SpacingPrediction(k, mean, var, False, "log(N)/sqrt(N)", regime)

    if kind is Regime.CRITICAL:
        lam = lambda_cal if lambda_cal is not None else 0.5 * beta * n
        mean = math.sqrt(beta / (4.0 * beta * k * n + lam))
        var_order = n**-1.5
        return SpacingPrediction(k, mean, var_order, True, "N^(-2/3)", regime)

    if kind is Regime.LINEAR_SUPER:
        if lambda0 is None:
            raise DomainError("lambda0 is required in the linear supercritical regime")
        f0 = regime.f0 if regime.f0 is not None else force / n
        if k == 1:
            mean = 1.0 - math.sqrt(4.0 * beta / f0)
            return SpacingPrediction(k, mean, n**-0.75, True, "1/sqrt(N)", regime)
        mean = math.sqrt(beta / ((k - 1) * f0 * n + lambda0))
        return SpacingPrediction(
            k, mean, (k * n) ** -1.5, True, "log(N)/(kN)^(3/4)", regime
        )

    # super-linear: only the macroscopic gap has a closed form
    if k == 1:
        mean = 1.0 - math.sqrt(4.0 * beta * n / force)
        return SpacingPrediction(k, mean, force**-1.5, True, "F^(-2/3)", regime)
    return SpacingPrediction(k, None, None, True, "n/a", regime)


def mean_error_scale(prediction: SpacingPrediction, params: ModelParams) -> float | None:
    """Numeric value of the stated mean error order, in units of the mean.

    Used to build the combined uncertainty for empirical-vs-theory z-scores;
    the orders carry no constants, so callers scale this by a calibrated
    prefactor.
    """
    n, force = params.n, params.force
    kind = prediction.regime.regime
    if prediction.mean is None:
        return None
    if kind is Regime.SUB_LINEAR:
        rel = math.log(n) / math.sqrt(n) + (force / n) ** 2
        return prediction.mean * rel
    if kind is Regime.LINEAR_SUB:
        return prediction.mean * math.log(n) / math.sqrt(n)
    if kind is Regime.CRITICAL:
        return n ** (-2.0 / 3.0)
    if kind is Regime.LINEAR_SUPER:
        if prediction.k == 1:
            return 1.0 / math.sqrt(n)
        return math.log(n) / (prediction.k * n) ** 0.75
    return force ** (-2.0 / 3.0)


def gaussian_sum_density(x: float, sigma2: float, shift: float = 0.0) -> float:
    """Normal density with variance sigma2 peaked at 1 - shift.

    The local-CLT approximation to the density of the total tilted length
    (shift = 0) and of the leave-one-out total (shift = the omitted mean).
    """
    if not sigma2 > 0.0:
        raise DomainError(f"sigma2 must be positive, got {sigma2}")
    z = x - 1.0 + shift
    return math.exp(-z * z / (2.0 * sigma2)) / math.sqrt(2.0 * math.pi * sigma2)
