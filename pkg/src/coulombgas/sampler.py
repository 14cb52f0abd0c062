"""Samplers for the conditioned spacing law, two independent ways.

* :func:`mcmc_run` -- Metropolis on particle positions: each sweep visits the
  interior particles in random order and proposes a uniform move inside a
  sub-interval of the neighbour slot.  The proposal half-width is
  ``proposal_width * (slot half-width)``, which depends only on the two
  neighbours (not on the moving coordinate), so the kernel is exactly
  symmetric and the plain min(1, exp(-dU)) acceptance is correct; moves that
  would cross a neighbour hit the infinite-potential wall and are rejected.

* :func:`rejection_conditional_run` -- draws the N spacings independently from
  their tilted laws, accepts when the total lands within ``epsilon`` of 1, and
  rescales the accepted vector onto the exact simplex.  The accepted law does
  not depend on the tilt used, so any lambda works; the calibrated one
  maximizes throughput.

Spacings are right-indexed throughout: ``x[k-1] = y[N-k+1] - y[N-k]``, so
index 1 is the gap touching the pinned particle at 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .calibration import ModelParams
from .errors import DomainError, InfeasibleAcceptanceError, InsufficientDataError
from .special import DEFAULT_SETTINGS
from .tilted import TiltedSpacingDist

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap

__all__ = [
    "Configuration",
    "McmcSettings",
    "ChainResult",
    "SpacingStats",
    "potential_energy",
    "potential_energy_spacings",
    "spacings_from_positions",
    "positions_from_spacings",
    "mcmc_run",
    "rejection_conditional_run",
    "spacing_statistics",
    "BATCH_COUNT",
]

BATCH_COUNT = 20


@dataclass
class Configuration:
    """Ordered particle positions 0 = y_0 < ... < y_N = 1."""

    positions: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.positions, dtype=float)
        if y.ndim != 1 or y.size < 3:
            raise DomainError("need at least N+1 = 3 ordered positions")
        if y[0] != 0.0 or y[-1] != 1.0:
            raise DomainError("endpoints must be pinned at 0 and 1 exactly")
        if not np.all(np.diff(y) > 0.0):
            raise DomainError("positions must be strictly increasing")
        self.positions = y

    @classmethod
    def equally_spaced(cls, n: int) -> "Configuration":
        return cls(np.linspace(0.0, 1.0, n + 1))

    @property
    def n(self) -> int:
        return self.positions.size - 1

    def spacings(self) -> np.ndarray:
        return spacings_from_positions(self.positions)


def spacings_from_positions(positions: np.ndarray) -> np.ndarray:
    """Right-indexed spacing vector of an ordered position vector."""
    return np.diff(positions)[::-1].copy()


def positions_from_spacings(x: np.ndarray) -> np.ndarray:
    """Inverse of :func:`spacings_from_positions` (endpoints 0 and 1)."""
    y = np.concatenate([[0.0], np.cumsum(x[::-1])])
    y[-1] = 1.0
    return y


def potential_energy(positions: np.ndarray, params: ModelParams) -> float:
    """beta * sum 1/gap + F * sum (N-k+1) * gap over left-indexed gaps.

    Returns inf when any gap is closed (the proposal must then be rejected).
    """
    gaps = np.diff(np.asarray(positions, dtype=float))
    if np.any(gaps <= 0.0):
        return math.inf
    n = gaps.size
    weights = np.arange(n, 0, -1, dtype=float)  # N-k+1 for k = 1..N
    return params.beta * np.sum(1.0 / gaps) + params.force * np.dot(weights, gaps)


def potential_energy_spacings(x: np.ndarray, params: ModelParams) -> float:
    """Same potential in right-indexed spacings: sum beta/x_k + F k x_k."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        return math.inf
    k = np.arange(1, x.size + 1, dtype=float)
    return params.beta * np.sum(1.0 / x) + params.force * np.dot(k, x)


@dataclass(frozen=True)
class McmcSettings:
    """Chain length, burn-in, proposal width fraction, seed, thinning."""

    n_sweeps: int
    burn_in: int
    proposal_width: float = 0.5
    seed: int = 0
    thinning: int = 1

    def __post_init__(self):
        if not 0.0 < self.proposal_width < 1.0:
            raise DomainError("proposal_width must lie in (0, 1)")
        if not 0 <= self.burn_in < self.n_sweeps:
            raise DomainError("need 0 <= burn_in < n_sweeps")
        if self.thinning < 1:
            raise DomainError("thinning must be >= 1")


@dataclass
class ChainResult:
    """Thinned post-burn-in spacing vectors plus acceptance diagnostics."""

    samples: np.ndarray  # (n_kept, N), right-indexed spacings
    acceptance_rate: float
    attempts: int = 0  # rejection sampler only: proposal vectors drawn

    def __iter__(self):
        return iter(self.samples)


@njit(cache=True, nogil=True)
def _mcmc_kernel(y, n_sweeps, burn_in, thinning, prop_width, beta, force, seed, out):
    np.random.seed(seed)
    n = y.shape[0] - 1
    n_interior = n - 1
    order = np.empty(n_interior, dtype=np.int64)
    for i in range(n_interior):
        order[i] = i + 1
    kept = 0
    accepted = 0
    proposed = 0
    for sweep in range(n_sweeps):
        # Fisher-Yates shuffle of the site visit order
        for i in range(n_interior - 1, 0, -1):
            j = np.random.randint(0, i + 1)
            tmp = order[i]
            order[i] = order[j]
            order[j] = tmp
        for idx in range(n_interior):
            k = order[idx]
            lo = y[k - 1]
            hi = y[k + 1]
            cur = y[k]
            half = prop_width * 0.5 * (hi - lo)
            prop = cur + (2.0 * np.random.random() - 1.0) * half
            proposed += 1
            if prop <= lo or prop >= hi:
                continue  # infinite-potential wall
            d_u = beta * (
                1.0 / (prop - lo) + 1.0 / (hi - prop)
                - 1.0 / (cur - lo) - 1.0 / (hi - cur)
            ) + force * (prop - cur)
            if d_u <= 0.0 or np.random.random() < math.exp(-d_u):
                y[k] = prop
                accepted += 1
        if sweep >= burn_in and (sweep - burn_in) % thinning == 0:
            for j in range(n):
                out[kept, j] = y[n - j] - y[n - j - 1]
            kept += 1
    return kept, accepted, proposed


def mcmc_run(params: ModelParams, settings: McmcSettings) -> ChainResult:
    """Run one Metropolis chain from the equally spaced configuration.

    Emits one right-indexed spacing vector per ``thinning`` sweeps after
    burn-in.  Reproducible for a fixed seed.
    """
    y = np.linspace(0.0, 1.0, params.n + 1)
    n_kept = (settings.n_sweeps - settings.burn_in + settings.thinning - 1) // settings.thinning
    out = np.empty((n_kept, params.n), dtype=np.float64)
    kept, accepted, proposed = _mcmc_kernel(
        y,
        settings.n_sweeps,
        settings.burn_in,
        settings.thinning,
        settings.proposal_width,
        params.beta,
        params.force,
        settings.seed & 0xFFFFFFFF,
        out,
    )
    rate = accepted / proposed if proposed else 0.0
    return ChainResult(samples=out[:kept], acceptance_rate=rate)


def _tilted_family(params: ModelParams, lam: float):
    """Per-index tilted laws, deduplicated over equal tilts."""
    thetas = lam + params.force * np.arange(1, params.n + 1, dtype=float)
    uniq, inverse = np.unique(thetas, return_inverse=True)
    dists = [TiltedSpacingDist(params.beta, float(t), DEFAULT_SETTINGS) for t in uniq]
    return dists, inverse


def rejection_conditional_run(params: ModelParams, lam: float,
                              epsilon: float | None = None,
                              n_samples: int = 1000,
                              seed: int = 0,
                              batch: int = 65536,
                              max_attempts: int = 50_000_000) -> ChainResult:
    """Independent tilted draws conditioned on the total by rejection.

    Accepts vectors with |sum - 1| <= epsilon (default 1e-3/N) and rescales
    them onto the exact simplex; the O(epsilon) rescaling bias is controlled
    by the default.  Raises :class:`InfeasibleAcceptanceError` when the
    acceptance rate is below 1e-8 after 1e7 attempts, which signals a
    mis-calibrated lambda.
    """
    if epsilon is None:
        epsilon = 1e-3 / params.n
    if not epsilon > 0.0:
        raise DomainError("epsilon must be positive")
    dists, inverse = _tilted_family(params, lam)
    rng = np.random.default_rng(seed)
    taken = []
    n_accepted = 0
    attempts = 0
    while n_accepted < n_samples:
        if attempts >= 10_000_000 and n_accepted < 1e-8 * attempts:
            raise InfeasibleAcceptanceError(
                f"acceptance rate {n_accepted/attempts:.2e} after {attempts} "
                "attempts; recalibrate lambda toward the mean-sum root"
            )
        if attempts >= max_attempts:
            raise InfeasibleAcceptanceError(
                f"exceeded {max_attempts} attempts with {n_accepted} accepted"
            )
        m = min(batch, max_attempts - attempts)
        block = np.empty((m, params.n), dtype=np.float64)
        for j, dist in enumerate(dists):
            cols = np.flatnonzero(inverse == j)
            block[:, cols] = dist.sample(rng, size=(m, cols.size))
        sums = block.sum(axis=1)
        mask = np.abs(sums - 1.0) <= epsilon
        if np.any(mask):
            good = block[mask] / sums[mask, None]
            taken.append(good)
            n_accepted += good.shape[0]
        attempts += m
    samples = np.concatenate(taken, axis=0)[:n_samples]
    return ChainResult(
        samples=samples,
        acceptance_rate=n_accepted / attempts,
        attempts=attempts,
    )


@dataclass
class SpacingStats:
    """Per-index summary of a spacing-vector stream."""

    ks: np.ndarray
    mean: np.ndarray
    var: np.ndarray
    se: np.ndarray
    ess: np.ndarray
    n_samples: int


def _ess_initial_positive(series: np.ndarray) -> float:
    """Effective sample size via the initial-positive-sequence truncation.

    Sums autocorrelation pairs rho_{2m} + rho_{2m+1} while they stay positive;
    tau = 2 * (pair sum) - 1 and ESS = M / tau, capped at M.
    """
    m = series.size
    x = series - series.mean()
    var0 = np.dot(x, x) / m
    if var0 == 0.0:
        return float(BATCH_COUNT)
    nfft = 1 << (2 * m - 1).bit_length()
    f = np.fft.rfft(x, nfft)
    acov = np.fft.irfft(f * np.conj(f), nfft)[:m].real / m
    rho = acov / acov[0]
    n_pairs = m // 2
    tau = 0.0
    for p in range(n_pairs):
        pair = rho[2 * p] + rho[2 * p + 1]
        if pair <= 0.0:
            break
        tau += pair
    tau = max(2.0 * tau - 1.0, 1.0)
    return float(min(m / tau, m))


def spacing_statistics(stream, k_list) -> SpacingStats:
    """Batch-means summary (20 batches) of selected spacing indices.

    ``stream`` is an array of spacing vectors (rows) or any iterable of them;
    ``k_list`` holds 1-based right-indexed spacing indices.
    """
    if isinstance(stream, ChainResult):
        samples = stream.samples
    else:
        samples = np.asarray(list(stream) if not isinstance(stream, np.ndarray) else stream,
                             dtype=float)
    if samples.ndim != 2:
        raise DomainError("stream must yield equal-length spacing vectors")
    m = samples.shape[0]
    if m < 100:
        raise InsufficientDataError(f"need at least 100 vectors, got {m}")
    ks = np.asarray(sorted(set(int(k) for k in k_list)), dtype=int)
    if ks.size == 0 or ks[0] < 1 or ks[-1] > samples.shape[1]:
        raise DomainError(f"k_list must be a nonempty subset of [1, {samples.shape[1]}]")
    cols = samples[:, ks - 1]
    mean = cols.mean(axis=0)
    var = cols.var(axis=0, ddof=1)
    # batch means over 20 equal batches (tail remainder dropped)
    per = m // BATCH_COUNT
    trimmed = cols[: per * BATCH_COUNT]
    bmeans = trimmed.reshape(BATCH_COUNT, per, ks.size).mean(axis=1)
    se = bmeans.std(axis=0, ddof=1) / math.sqrt(BATCH_COUNT)
    ess = np.array([_ess_initial_positive(cols[:, j]) for j in range(ks.size)])
    return SpacingStats(ks=ks, mean=mean, var=var, se=se, ess=ess, n_samples=m)
