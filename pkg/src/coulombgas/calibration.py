"""Tilt calibration: solve sum_k E X_{k,lambda} = 1 and classify force regimes.

The ensemble of N spacings with repulsion beta and external force F assigns
spacing k the tilt ``theta_k = lambda + k F``.  The free parameter lambda is
fixed by requiring the *unconditioned* mean total length to equal the interval
length:

    mean_sum(lambda) = sum_{k=1..N} E X_{k,lambda} = 1.

Each per-spacing mean is strictly decreasing in lambda with limits N (at
-inf) and 0 (at +inf), so the root exists and is unique; it is found by
bracket expansion plus Brent's method on exact quadrature means (the closed
form expansions break for the supercritical k = 1 term, whose tilt stays
bounded).

The module also solves the supercritical gap equation for ``lambda0``: the
limiting tilt of the k = 1 spacing, defined by

    E[X | density ~ exp(-beta/x - lambda0 x)] = 1 - sqrt(4 beta / f0),

and aggregates the variance and Lyapunov diagnostics used by the
normal-approximation checks.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import CalibrationError, DomainError
from .special import DEFAULT_SETTINGS, QuadratureSettings
from .tilted import TiltedSpacingDist

__all__ = [
    "ModelParams",
    "Regime",
    "RegimeLabel",
    "CalibrationResult",
    "classify_regime",
    "critical_force",
    "mean_sum",
    "solve_lambda",
    "lambda_asymptotic",
    "solve_lambda0",
    "sigma2_total",
    "lyapunov_ratio",
]


@dataclass(frozen=True)
class ModelParams:
    """Ensemble description: N spacings (N+1 particles), repulsion, force."""

    n: int
    beta: float
    force: float = 0.0

    def __post_init__(self):
        if self.n < 2:
            raise DomainError(f"n must be >= 2, got {self.n}")
        if not self.beta > 0.0:
            raise DomainError(f"beta must be positive, got {self.beta}")
        if self.force < 0.0:
            raise DomainError(f"force must be >= 0, got {self.force}")


def critical_force(params: ModelParams) -> float:
    """The phase boundary 4 * beta * N separating dense and collapsed phases."""
    return 4.0 * params.beta * params.n


class Regime(enum.Enum):
    """Force-growth classes, in order of increasing force."""

    SUB_LINEAR = "sub_linear"      # F = o(N)
    LINEAR_SUB = "linear_sub"      # F = f0 N, f0 < 4 beta
    CRITICAL = "critical"          # F = 4 beta N
    LINEAR_SUPER = "linear_super"  # F = f0 N, f0 > 4 beta
    SUPER_LINEAR = "super_linear"  # F >> N


@dataclass(frozen=True)
class RegimeLabel:
    """Classified regime plus the dimensionless ratio f0 = F/N when meaningful."""

    regime: Regime
    f0: float | None = None


def classify_regime(params: ModelParams, growth_hint: float | None = None) -> RegimeLabel:
    """Label the force regime of a finite ensemble.

    A single finite (N, F) cannot distinguish growth classes, so the split is
    heuristic in the ratio F / (4 beta N): < 0.1 -> sub-linear, [0.1, 1) ->
    linear subcritical, == 1 (to 1e-12 relative) -> critical, (1, 25] ->
    linear supercritical, > 25 -> super-linear.  ``growth_hint`` (the exponent
    p in F ~ N^p) is authoritative when provided.
    """
    f_cr = critical_force(params)
    ratio = params.force / f_cr
    f0 = params.force / params.n

    if growth_hint is not None:
        if growth_hint < 1.0:
            return RegimeLabel(Regime.SUB_LINEAR, None)
        if growth_hint > 1.0:
            return RegimeLabel(Regime.SUPER_LINEAR, f0)
        # linear growth: decide by f0 against 4 beta
        if abs(ratio - 1.0) <= 1e-12:
            return RegimeLabel(Regime.CRITICAL, f0)
        if ratio < 1.0:
            return RegimeLabel(Regime.LINEAR_SUB, f0)
        return RegimeLabel(Regime.LINEAR_SUPER, f0)

    if abs(ratio - 1.0) <= 1e-12:
        return RegimeLabel(Regime.CRITICAL, f0)
    if ratio < 0.1:
        return RegimeLabel(Regime.SUB_LINEAR, None)
    if ratio < 1.0:
        return RegimeLabel(Regime.LINEAR_SUB, f0)
    if ratio <= 25.0:
        return RegimeLabel(Regime.LINEAR_SUPER, f0)
    return RegimeLabel(Regime.SUPER_LINEAR, f0)


@dataclass(frozen=True)
class CalibrationResult:
    """Calibrated tilt with solver and dispersion diagnostics."""

    lambda_: float
    residual: float
    iterations: int
    sigma2_total: float
    lyapunov: float


def _unique_tilts(lam: float, params: ModelParams):
    """Unique theta values and multiplicities over k = 1..N (force 0 collapses)."""
    thetas = lam + params.force * np.arange(1, params.n + 1, dtype=float)
    return np.unique(thetas, return_counts=True)


def mean_sum(lam: float, params: ModelParams,
             settings: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    """sum_{k=1..N} E X_{k,lambda}; strictly decreasing in lambda."""
    uniq, counts = _unique_tilts(lam, params)
    total = 0.0
    for theta, count in zip(uniq, counts):
        total += count * TiltedSpacingDist(params.beta, theta, settings).mean_exact()
    return total


def _variance_third_sums(lam: float, params: ModelParams,
                         settings: QuadratureSettings, with_third: bool):
    uniq, counts = _unique_tilts(lam, params)
    var_total = 0.0
    third_total = 0.0
    for theta, count in zip(uniq, counts):
        dist = TiltedSpacingDist(params.beta, theta, settings)
        var_total += count * dist.var_exact()
        if with_third:
            third_total += count * dist.abs_central_third_exact()
    return var_total, third_total


def sigma2_total(lam: float, params: ModelParams,
                 settings: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    """sum_k Var(X_{k,lambda})."""
    var_total, _ = _variance_third_sums(lam, params, settings, with_third=False)
    return var_total


def lyapunov_ratio(lam: float, params: ModelParams,
                   settings: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    """sum_k E|X_k - m_k|^3 / sigma^3: small values certify the CLT regime."""
    var_total, third_total = _variance_third_sums(lam, params, settings, with_third=True)
    return third_total / var_total**1.5


def lambda_asymptotic(params: ModelParams, regime: RegimeLabel) -> float:
    """Closed-form seed for the calibrated tilt in each regime.

    Sub-linear: beta N^2 (1 - F/(4 beta N))^2 (1 + 1/N); linear subcritical
    drops the 1/N factor; critical returns the 0.5 beta N scale (a bracket
    seed only -- the constant at criticality is not universal); supercritical
    regimes return -F + lambda0, with the large-f0 boundary-layer estimate
    -sqrt(f0/(4 beta)) replacing the solve above f0 = 1e4 beta.
    """
    n, beta, force = params.n, params.beta, params.force
    kind = regime.regime
    if kind is Regime.SUB_LINEAR:
        return beta * n * n * (1.0 - force / (4.0 * beta * n)) ** 2 * (1.0 + 1.0 / n)
    if kind is Regime.LINEAR_SUB:
        return beta * n * n * (1.0 - force / (4.0 * beta * n)) ** 2
    if kind is Regime.CRITICAL:
        return 0.5 * beta * n
    f0 = force / n
    if f0 > 1e4 * beta:
        lam0 = -math.sqrt(f0 / (4.0 * beta))
    else:
        lam0 = solve_lambda0(beta, f0)
    return -force + lam0


def solve_lambda0(beta: float, f0: float,
                  settings: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    """Limiting tilt of the macroscopic spacing in the supercritical phase.

    Solves for lambda0 such that the law with density ~ exp(-beta/x - lambda0 x)
    on [0, 1] has mean 1 - sqrt(4 beta / f0).  Requires f0 > 4 beta (below the
    phase boundary there is no macroscopic gap).  The root is positive for
    moderately supercritical forces and decreases with f0 (the gap mean grows
    toward 1, which demands a stronger pull to the right endpoint).
    """
    if not beta > 0.0:
        raise DomainError(f"beta must be positive, got {beta}")
    if not f0 > 4.0 * beta:
        raise DomainError(
            f"f0 must exceed 4*beta = {4.0 * beta} (critical or subcritical "
            f"force has no macroscopic-gap tilt), got {f0}"
        )
    target = 1.0 - math.sqrt(4.0 * beta / f0)

    def residual(lam0):
        return TiltedSpacingDist(beta, lam0, settings).mean_exact() - target

    lo, hi = _expand_bracket(residual, guess=0.0, step=1.0, decreasing=True)
    root = brentq(residual, lo, hi, xtol=1e-13, rtol=8.9e-16, maxiter=200)
    res = residual(root)
    if abs(res) > 1e-10:
        raise CalibrationError(f"lambda0 residual {res:.3e} above 1e-10")
    return float(root)


def _expand_bracket(fn, guess: float, step: float, decreasing: bool,
                    max_doublings: int = 200):
    """Grow an interval around ``guess`` until ``fn`` changes sign.

    ``decreasing`` states the known monotonicity of ``fn``, which picks the
    expansion direction from the sign at the starting point.
    """
    f_guess = fn(guess)
    if f_guess == 0.0:
        return guess, guess
    # for a decreasing fn: positive value -> root to the right
    go_right = (f_guess > 0.0) == decreasing
    a, fa = guess, f_guess
    for _ in range(max_doublings):
        b = a + step if go_right else a - step
        fb = fn(b)
        if fa * fb <= 0.0:
            return (a, b) if a < b else (b, a)
        a, fa = b, fb
        step *= 2.0
    raise CalibrationError(
        f"no sign change after {max_doublings} bracket doublings from {guess}"
    )


def solve_lambda(params: ModelParams,
                 settings: QuadratureSettings = DEFAULT_SETTINGS,
                 growth_hint: float | None = None) -> CalibrationResult:
    """Solve mean_sum(lambda) = 1 for the calibrated tilt.

    The initial bracket comes from :func:`lambda_asymptotic` and is expanded by
    doubling until the root is enclosed (monotonicity makes this safe); Brent's
    method then drives the residual well below 1e-9.
    """
    evals = 0

    def residual(lam):
        nonlocal evals
        evals += 1
        return mean_sum(lam, params, settings) - 1.0

    regime = classify_regime(params, growth_hint)
    guess = lambda_asymptotic(params, regime)
    step = max(1.0, 0.05 * abs(guess))
    lo, hi = _expand_bracket(residual, guess, step, decreasing=True)
    if lo == hi:
        root = lo
    else:
        xtol = max(1e-12, 1e-12 * abs(guess))
        root = brentq(residual, lo, hi, xtol=xtol, rtol=8.9e-16, maxiter=200)
    res = abs(residual(root))
    if res > 1e-9:
        raise CalibrationError(f"calibration residual {res:.3e} above 1e-9")
    var_total, third_total = _variance_third_sums(root, params, settings, with_third=True)
    return CalibrationResult(
        lambda_=float(root),
        residual=float(res),
        iterations=evals,
        sigma2_total=float(var_total),
        lyapunov=float(third_total / var_total**1.5),
    )
