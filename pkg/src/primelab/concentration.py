"""Deviation windows for sums of independent Bernoulli variables.

For a sum S with mean m, the window (m - M(m)*sqrt(m), m + M(m)*sqrt(m)) is
expected to capture S with probability tending to 1 for any diverging scale
function M. This module measures that three ways: Monte Carlo over arbitrary probability
vectors, exact binomial summation in the equal-probability case, and the
Gaussian limit via the normal CDF.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.special import gammaln

from .errors import DomainError, SizeLimitError
from .pbin import PBParams, project_capped_simplex
from .rng import block_sizes, philox_stream
from .thresholds import ThresholdFunction

# Exact binomial summation guard.
SUM_GUARD = 10**7


@dataclass(frozen=True)
class ConcentrationResult:
    """One window experiment: parameters, window, hit counts, exact value.

    exact_prob is present whenever the vector is equal-probability and the
    exact binomial summation is feasible. flagged marks a vector whose
    empirical probability fell more than three Monte Carlo standard errors
    below the equal-probability exact value (recorded, never asserted).
    """

    params: PBParams
    threshold: ThresholdFunction
    trials: int
    hits: int
    window: tuple[float, float]
    exact_prob: float | None
    flagged: bool | None = None
    prefix_hits: int | None = None

    @property
    def empirical_prob(self) -> float:
        return self.hits / self.trials


def window_bounds(m: float, threshold: ThresholdFunction) -> tuple[float, float]:
    """The open interval (m - M(m)*sqrt(m), m + M(m)*sqrt(m))."""
    half = threshold(m) * math.sqrt(m)
    return m - half, m + half


def draw_sums(
    params: PBParams,
    trials: int,
    seed: int,
    substream: int = 0,
    jobs: int = 1,
    record_prefix_dev: bool = False,
) -> np.ndarray | tuple[np.ndarray, np.ndarray]:
    """Realizations of S = sum of Bernoulli(p_i), deterministic per seed.

    Trials are generated in fixed blocks with one counter-based stream per
    (seed, substream, block) cell, so the concatenated output is identical
    for every jobs value. Equal-probability vectors draw S directly from the
    binomial distribution (the distribution of the sum itself); heterogeneous
    vectors draw the underlying Bernoulli matrix. With record_prefix_dev the
    per-trial maximum absolute deviation of partial sums from their means is
    returned alongside (matrix path always).
    """
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    probs = np.asarray(params.probs)
    means = np.cumsum(probs)
    equal = params.is_equal() and not record_prefix_dev
    sizes = block_sizes(int(trials))

    def one_block(args: tuple[int, int]) -> tuple[np.ndarray, np.ndarray | None]:
        index, size = args
        gen = philox_stream(seed, substream, index)
        if equal:
            return gen.binomial(params.k, params.probs[0], size=size).astype(np.int64), None
        draws = gen.random((size, params.k)) < probs
        sums = draws.sum(axis=1).astype(np.int64)
        if record_prefix_dev:
            dev = np.abs(np.cumsum(draws, axis=1) - means).max(axis=1)
            return sums, dev
        return sums, None

    tasks = list(enumerate(sizes))
    if jobs > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=int(jobs)) as pool:
            parts = list(pool.map(one_block, tasks))
    else:
        parts = [one_block(t) for t in tasks]

    sums = np.concatenate([s for s, _ in parts])
    if record_prefix_dev:
        devs = np.concatenate([d for _, d in parts])
        return sums, devs
    return sums


def simulate_sum(
    params: PBParams,
    trials: int,
    seed: int,
    threshold: ThresholdFunction,
    jobs: int = 1,
    substream: int = 0,
    record_prefix: bool = False,
) -> ConcentrationResult:
    """Monte Carlo hit count for the open window around the exact mean.

    The window argument of the threshold is the exact mean m = sum(p_i), not
    any realized sum. With record_prefix, prefix_hits counts the trials whose
    every partial sum also stays within M(m)*sqrt(m) of its own mean.
    """
    m = params.m
    lo, hi = window_bounds(m, threshold)
    prefix_hits = None
    if record_prefix:
        sums, devs = draw_sums(params, trials, seed, substream, jobs, record_prefix_dev=True)
        half = threshold(m) * math.sqrt(m)
        prefix_hits = int(np.count_nonzero(devs < half))
    else:
        sums = draw_sums(params, trials, seed, substream, jobs)
    hits = int(np.count_nonzero((sums > lo) & (sums < hi)))

    exact = None
    if params.is_equal() and params.k <= SUM_GUARD:
        exact = exact_window_probability(params.k, params.probs[0], threshold)
    return ConcentrationResult(params, threshold, int(trials), hits, (lo, hi), exact, None, prefix_hits)


def exact_window_probability(n: int, p: float, threshold: ThresholdFunction) -> float:
    """Exact binomial mass inside the open window, via log-space summation."""
    n = int(n)
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    if n > SUM_GUARD:
        raise SizeLimitError(f"exact summation is limited to n <= {SUM_GUARD}, got {n}")
    m = n * p
    lo, hi = window_bounds(m, threshold)
    if lo < 0 and hi > n:
        return 1.0
    q_lo = max(0, math.floor(lo) + 1)
    q_hi = min(n, math.ceil(hi) - 1)
    if q_lo > q_hi:
        return 0.0
    if p == 0.0:
        return 1.0 if q_lo == 0 else 0.0
    if p == 1.0:
        return 1.0 if q_hi == n else 0.0
    qs = np.arange(q_lo, q_hi + 1)
    log_pmf = (
        gammaln(n + 1)
        - gammaln(qs + 1)
        - gammaln(n - qs + 1)
        + qs * math.log(p)
        + (n - qs) * math.log1p(-p)
    )
    return float(min(1.0, np.exp(log_pmf).sum()))


def gaussian_window_approx(n: int, p: float, threshold: ThresholdFunction) -> float:
    """Normal-limit value of the window probability.

    Standardizing S by sqrt(np(1-p)) turns |S - np| < M(np)*sqrt(np) into the
    symmetric bound M(np)/sqrt(1-p) on the standard normal, whose probability
    is erf(b/sqrt(2)).
    """
    n = int(n)
    if not 0.0 < p < 1.0:
        raise DomainError(f"gaussian approximation needs 0 < p < 1, got {p}")
    if n * p * (1.0 - p) < 10.0:
        raise DomainError(f"gaussian approximation needs n*p*(1-p) >= 10, got {n * p * (1.0 - p):g}")
    b = threshold(n * p) / math.sqrt(1.0 - p)
    if b <= 0.0:
        return 0.0
    return math.erf(b / math.sqrt(2.0))


def fixed_mean_sweep(
    n: int,
    m: float,
    vectors: Iterable[Sequence[float]],
    threshold: ThresholdFunction,
    trials: int,
    seed: int,
    jobs: int = 1,
    record_prefix: bool = False,
) -> list[ConcentrationResult]:
    """Window probabilities across fixed-mean probability vectors.

    Every vector must carry the same mean m (to 1e-9). Vector index i uses
    substream i+1, so the sweep is reproducible and the results stay aligned
    with their inputs. Each result is flagged when its empirical probability
    is more than three Monte Carlo standard errors below the exact
    equal-probability value; the flag is information, not a verdict.
    """
    baseline = exact_window_probability(n, m / n, threshold)
    se = math.sqrt(max(baseline * (1.0 - baseline), 0.0) / trials)
    out: list[ConcentrationResult] = []
    for idx, vec in enumerate(vectors):
        params = PBParams(vec)
        if params.k != n:
            raise DomainError(f"vector {idx} has length {params.k}, expected {n}")
        if abs(params.m - m) > 1e-9:
            raise DomainError(f"vector {idx} has mean {params.m!r}, expected {m} +- 1e-9")
        res = simulate_sum(params, trials, seed, threshold, jobs=jobs, substream=idx + 1,
                           record_prefix=record_prefix)
        flagged = res.empirical_prob < baseline - 3.0 * se
        out.append(dataclasses.replace(res, flagged=bool(flagged)))
    return out


def sample_fixed_mean_vectors(n: int, m: float, count: int, seed: int) -> list[np.ndarray]:
    """Random probability vectors with exact sum m, entries in [0, 1]."""
    if not 0.0 <= m <= n:
        raise DomainError(f"mean m must lie in [0, {n}], got {m}")
    gen = philox_stream(seed, substream=0, block=0)
    vectors = []
    for _ in range(count):
        raw = gen.random(n)
        scaled = raw * (m / raw.sum()) if raw.sum() > 0 else np.full(n, m / n)
        if scaled.max() > 1.0:
            scaled = project_capped_simplex(scaled, m)
        vectors.append(scaled)
    return vectors
