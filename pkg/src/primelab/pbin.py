"""Exact Poisson-binomial machinery and fixed-mean extremal checks.

The central object is the probability of exactly q successes among k
independent Bernoulli trials with success probabilities p_1..p_k. With the
mean m = sum(p_i) held fixed, the question under test is whether the
equal-probability point p_i = m/k maximizes that probability whenever q sits
in a tail q < m - A*sqrt(m) or q > m + A*sqrt(m). The checker never asserts
the claim: it searches, compares, and reports counterexample witnesses.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .errors import DomainError, SizeLimitError

EXACT_MODE_MAX_K = 20
GRID_MODE_MAX_K = 12

# Relative slack absorbing double-precision noise in h <= binomial comparisons.
COMPARISON_RTOL = 1e-12
# Absolute tolerance within which the equal-probability point is accepted as
# attaining the searched maximum.
SEARCH_TOL = 1e-9

FD_STEP = 1e-6


@dataclass(frozen=True)
class PBParams:
    """An ordered success-probability vector with its mean bookkeeping."""

    probs: tuple[float, ...]

    def __init__(self, probs: Sequence[float]):
        vals = tuple(float(p) for p in probs)
        if not vals:
            raise DomainError("need at least one probability")
        for p in vals:
            if not 0.0 <= p <= 1.0:
                raise DomainError(f"probabilities must lie in [0, 1], got {p}")
        object.__setattr__(self, "probs", vals)

    @property
    def k(self) -> int:
        return len(self.probs)

    @property
    def m(self) -> float:
        return math.fsum(self.probs)

    @property
    def p(self) -> float:
        return self.m / self.k

    def is_equal(self) -> bool:
        return len(set(self.probs)) == 1


@dataclass(frozen=True)
class TailQuery:
    """A success count q, the window constant A > 1, and the claimed side."""

    q: int
    A: float = 2.0
    side: str = "either"  # "lower" | "upper" | "either"

    def __post_init__(self):
        if not self.A > 1:
            raise DomainError(f"tail constant A must be > 1, got {self.A}")
        if self.side not in ("lower", "upper", "either"):
            raise DomainError(f"side must be lower/upper/either, got {self.side!r}")

    def region(self, m: float) -> str:
        """Which tail q actually falls in for mean m: lower, upper, or na.

        The excluded middle is the closed band [m - A*sqrt(m), m + A*sqrt(m)];
        a query restricted to one side reports na if q lies on the other.
        """
        half = self.A * math.sqrt(m)
        if self.q < m - half:
            actual = "lower"
        elif self.q > m + half:
            actual = "upper"
        else:
            return "na"
        if self.side in ("either", actual):
            return actual
        return "na"


@dataclass(frozen=True)
class ExtremalReport:
    """Outcome of comparing a tail mass against its equal-probability value.

    satisfied is None when the query is outside the claimed tail region (the
    comparison is still recorded, the claim just does not apply there).
    witness carries a parameter vector beating the equal-probability point.
    """

    query: TailQuery
    region: str
    h_value: float
    binomial_value: float
    satisfied: bool | None
    witness: PBParams | None
    slack: float


# --- probability mass ---------------------------------------------------------


def _pmf_dp(probs: np.ndarray, q: int) -> float:
    # Forward convolution truncated at q+1 entries: O(k*q) and exact up to
    # float rounding since every term is nonnegative.
    dp = np.zeros(q + 1)
    dp[0] = 1.0
    for p in probs:
        dp[1:] = dp[1:] * (1.0 - p) + dp[:-1] * p
        dp[0] *= 1.0 - p
    return float(dp[q])


def _pmf_vector(probs: np.ndarray) -> np.ndarray:
    dp = np.zeros(len(probs) + 1)
    dp[0] = 1.0
    for i, p in enumerate(probs):
        dp[1 : i + 2] = dp[1 : i + 2] * (1.0 - p) + dp[: i + 1] * p
        dp[0] *= 1.0 - p
    return dp


def pb_pmf(params: PBParams, q: int) -> float:
    """P(exactly q successes) via the convolution recurrence."""
    if not 0 <= q <= params.k:
        raise IndexError(f"q must lie in [0, {params.k}], got {q}")
    return _pmf_dp(np.asarray(params.probs), int(q))


def pb_pmf_vector(params: PBParams) -> np.ndarray:
    """The full mass function over q = 0..k."""
    return _pmf_vector(np.asarray(params.probs))


def pb_pmf_exact(params: PBParams, q: int) -> Fraction:
    """Exact rational mass, for calibrating floating-point slack; k <= 20."""
    if params.k > EXACT_MODE_MAX_K:
        raise SizeLimitError(f"exact mode is limited to k <= {EXACT_MODE_MAX_K}, got {params.k}")
    if not 0 <= q <= params.k:
        raise IndexError(f"q must lie in [0, {params.k}], got {q}")
    dp = [Fraction(0)] * (q + 1)
    dp[0] = Fraction(1)
    for p_float in params.probs:
        p = Fraction(p_float)
        for j in range(q, 0, -1):
            dp[j] = dp[j] * (1 - p) + dp[j - 1] * p
        dp[0] *= 1 - p
    return dp[q]


def binomial_pmf(k: int, p: float, q: int) -> float:
    """C(k, q) p^q (1-p)^(k-q), computed in log space for stability."""
    k, q = int(k), int(q)
    if not 0 <= q <= k:
        raise IndexError(f"q must lie in [0, {k}], got {q}")
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    if p == 0.0:
        return 1.0 if q == 0 else 0.0
    if p == 1.0:
        return 1.0 if q == k else 0.0
    log_choose = math.lgamma(k + 1) - math.lgamma(q + 1) - math.lgamma(k - q + 1)
    return math.exp(log_choose + q * math.log(p) + (k - q) * math.log1p(-p))


# --- the tail comparison --------------------------------------------------------


def check_extremal(params: PBParams, query: TailQuery) -> ExtremalReport:
    """Compare the exact mass at q against the equal-probability binomial.

    Never asserts: when the inequality fails inside the claimed region the
    parameter vector itself is returned as the witness. Outside the region
    the report carries satisfied=None.
    """
    h = pb_pmf(params, query.q)
    b = binomial_pmf(params.k, params.p, query.q)
    region = query.region(params.m)
    slack = COMPARISON_RTOL * b
    if region == "na":
        return ExtremalReport(query, region, h, b, None, None, slack)
    ok = h <= b + slack
    return ExtremalReport(query, region, h, b, ok, None if ok else params, slack)


# --- stationarity and curvature at the equal-probability point -------------------


def stationarity_residual(params: PBParams, q: int, step: float = FD_STEP) -> float:
    """Spread of the constrained gradient of the mass at the given point.

    Partials are estimated by central differences; projecting onto the plane
    sum(p_i) = m amounts to subtracting the mean partial, so the returned
    value max_i |dh/dp_i - mean_j dh/dp_j| vanishes at constrained stationary
    points, in particular at any equal-probability vector.
    """
    if not 0 <= q <= params.k:
        raise IndexError(f"q must lie in [0, {params.k}], got {q}")
    base = np.asarray(params.probs)
    if np.any(base <= 0.0) or np.any(base >= 1.0):
        raise DomainError("stationarity residual needs interior probabilities (0 < p_i < 1)")
    grads = np.empty(params.k)
    for i in range(params.k):
        hi = base.copy()
        lo = base.copy()
        hi[i] += step
        lo[i] -= step
        # The mass is a polynomial in each p_i, so evaluating a hair outside
        # [0, 1] is its exact polynomial extension.
        grads[i] = (_pmf_dp(hi, q) - _pmf_dp(lo, q)) / (2.0 * step)
    return float(np.max(np.abs(grads - grads.mean())))


def curvature_expression(k: int, p: float, q: float) -> float:
    """The normalized second derivative of the mass at the equal point.

    After substituting p_k = m - p_1 - ... - p_(k-1), the second derivative
    of the mass by any remaining coordinate, evaluated at p_i = p, equals

        2 C(k-2, q-1) p^(q-1) (1-p)^(k-q-1) * E(k, p, q)

    with E(k, p, q) = -((q-1)/(k-q)) (1-p)/p + 2 - ((k-q-1)/q) p/(1-p).

    This function returns E. Its sign decides whether the equal point is a
    local maximum (negative) or not; the leading factor is positive. The
    boundary forms at q = 1 and q = k-1 are the same formula with the
    vanishing coefficient dropped, so no special-casing is needed. q may be
    real: the roots of E are what delimit the maximal region.
    """
    k = int(k)
    if k < 2:
        raise DomainError(f"curvature expression needs k >= 2, got {k}")
    if not 0.0 < p < 1.0:
        raise DomainError(f"curvature expression needs 0 < p < 1, got {p}")
    q = float(q)
    if not 1.0 <= q <= k - 1.0:
        raise DomainError(f"q must lie in [1, {k - 1}], got {q}")
    return -((q - 1.0) / (k - q)) * ((1.0 - p) / p) + 2.0 - ((k - q - 1.0) / q) * (p / (1.0 - p))


def curvature_second_difference(k: int, p: float, q: int, step: float = 1e-4) -> float:
    """Direct second difference of the mass along the (e_1 - e_k) direction.

    Varying p_1 by t while the substitution p_k = m - sum keeps the mean fixed
    gives H(t) = pmf(p+t, p, ..., p, p-t); the returned value is the central
    second difference of H at t = 0. Its sign is the independent route against
    which curvature_expression is checked.
    """
    if not 0.0 < p < 1.0:
        raise DomainError(f"second difference needs 0 < p < 1, got {p}")
    if not 0 <= q <= k:
        raise IndexError(f"q must lie in [0, {k}], got {q}")

    def h_at(t: float) -> float:
        probs = np.full(k, p)
        probs[0] += t
        probs[-1] -= t
        return _pmf_dp(probs, q)

    return (h_at(step) - 2.0 * h_at(0.0) + h_at(-step)) / (step * step)


def q_roots(k: int, p: float) -> tuple[float, float]:
    """The two real q where the curvature expression vanishes.

    With a = (1-p)/p and m = k*p:

        q = m - (1-a)/(2(1+a)) -+ sqrt( a/(1+a) * m + ((1-a)/(2(1+a)))^2 )

    Between the roots the equal point fails to be a maximum; outside them it
    is one. Both roots sit within m +- A*sqrt(m) for A >= 2 once m >= 100,
    since a/(1+a) < 1 and the shift term stays below 1/2 in absolute value.
    """
    k = int(k)
    if k < 1:
        raise DomainError(f"q_roots needs k >= 1, got {k}")
    if not 0.0 < p < 1.0:
        raise DomainError(f"q_roots needs 0 < p < 1, got {p}")
    a = (1.0 - p) / p
    m = k * p
    shift = (1.0 - a) / (2.0 * (1.0 + a))
    disc = (a / (1.0 + a)) * m + shift * shift
    root = math.sqrt(disc)
    return m - shift - root, m - shift + root


# --- fixed-mean maximization over the capped simplex -----------------------------


def project_capped_simplex(y: np.ndarray, total: float) -> np.ndarray:
    """Euclidean projection onto {x : sum(x) = total, 0 <= x_i <= 1}.

    Solved by bisection on the shift lambda in x_i = clip(y_i - lambda, 0, 1);
    the clipped sum is nonincreasing in lambda, so bisection converges.
    """
    y = np.asarray(y, dtype=float)
    if not 0.0 <= total <= len(y):
        raise DomainError(f"total {total} infeasible for {len(y)} capped coordinates")
    lo, hi = float(y.min() - 1.0), float(y.max())
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        s = np.clip(y - mid, 0.0, 1.0).sum()
        if s > total:
            lo = mid
        else:
            hi = mid
    return np.clip(y - 0.5 * (lo + hi), 0.0, 1.0)


def _pb_gradient(probs: np.ndarray, q: int) -> np.ndarray:
    # dh/dp_i = P_{-i}(q-1) - P_{-i}(q) where P_{-i} is the mass without trial i.
    k = len(probs)
    grad = np.empty(k)
    for i in range(k):
        vec = _pmf_vector(np.delete(probs, i))  # masses over 0..k-1
        at_q = vec[q] if q <= k - 1 else 0.0
        at_qm1 = vec[q - 1] if q >= 1 else 0.0
        grad[i] = at_qm1 - at_q
    return grad


def _polish(start: np.ndarray, m: float, q: int, iters: int = 120) -> tuple[float, np.ndarray]:
    x = project_capped_simplex(start, m)
    best = _pmf_dp(x, q)
    for _ in range(iters):
        g = _pb_gradient(x, q)
        g = g - g.mean()
        norm = float(np.max(np.abs(g)))
        if norm < 1e-14:
            break
        step = 0.25 / norm
        improved = False
        for _ in range(25):
            cand = project_capped_simplex(x + step * g, m)
            val = _pmf_dp(cand, q)
            if val > best + 1e-16:
                x, best = cand, val
                improved = True
                break
            step *= 0.5
        if not improved:
            break
    return best, x


def _bounded_partitions(total: int, slots: int, cap: int) -> Iterator[tuple[int, ...]]:
    # Non-increasing tuples of length `slots`, entries in [0, cap], summing to
    # `total`; one representative per orbit of the permutation symmetry.
    def rec(rem: int, left: int, prev: int, prefix: list[int]) -> Iterator[tuple[int, ...]]:
        if left == 0:
            if rem == 0:
                yield tuple(prefix)
            return
        vmax = min(prev, cap, rem)
        vmin = -(-rem // left)  # ceil(rem / left)
        for v in range(vmax, vmin - 1, -1):
            prefix.append(v)
            yield from rec(rem - v, left - 1, v, prefix)
            prefix.pop()

    yield from rec(total, slots, cap, [])


def extremal_search(
    k: int,
    m: float,
    q: int,
    grid: int = 4,
    A: float = 2.0,
    jobs: int = 1,
    polish: bool = True,
) -> ExtremalReport:
    """Maximize the mass at q over {sum(p_i) = m, 0 <= p_i <= 1} and compare.

    Exhaustive search over grid-quantized vectors (probabilities multiples of
    1/grid), one representative per permutation orbit since the mass is
    symmetric, followed by a local projected-gradient polish from the best
    grid point. satisfied reports whether the equal-probability point attains
    the found maximum within SEARCH_TOL; when it does not, the maximizer is
    returned as the witness. The region field records whether q lies in the
    tail claimed for the given A; the factual comparison is reported either way.
    """
    k = int(k)
    if k < 2:
        raise DomainError(f"extremal_search needs k >= 2, got {k}")
    if k > GRID_MODE_MAX_K:
        raise SizeLimitError(f"exhaustive grid mode is limited to k <= {GRID_MODE_MAX_K}, got {k}")
    if not 0.0 <= m <= k:
        raise DomainError(f"mean m must lie in [0, {k}], got {m}")
    if not 0 <= q <= k:
        raise IndexError(f"q must lie in [0, {k}], got {q}")
    grid = int(grid)
    if grid < 1:
        raise DomainError(f"grid resolution must be >= 1, got {grid}")
    units = m * grid
    if abs(units - round(units)) > 1e-9:
        raise DomainError(f"grid 1/{grid} does not quantize the mean {m}")

    cells = list(_bounded_partitions(int(round(units)), k, grid))
    q = int(q)

    def best_of(chunk: list[tuple[int, ...]]) -> tuple[float, tuple[int, ...] | None]:
        top_val, top_vec = -1.0, None
        for cell in chunk:
            val = _pmf_dp(np.asarray(cell, dtype=float) / grid, q)
            if val > top_val or (val == top_val and (top_vec is None or cell < top_vec)):
                top_val, top_vec = val, cell
        return top_val, top_vec

    jobs = max(1, int(jobs))
    if jobs > 1 and len(cells) > jobs:
        chunks = [cells[i::jobs] for i in range(jobs)]
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            partials = list(pool.map(best_of, chunks))
    else:
        partials = [best_of(cells)]

    best_val, best_cell = -1.0, None
    for val, cell in partials:
        if cell is None:
            continue
        if val > best_val or (val == best_val and (best_cell is None or cell < best_cell)):
            best_val, best_cell = val, cell

    best_vec = np.asarray(best_cell, dtype=float) / grid
    if polish:
        polished_val, polished_vec = _polish(best_vec, m, q)
        if polished_val > best_val:
            best_val, best_vec = polished_val, polished_vec

    p_equal = m / k
    h_equal = binomial_pmf(k, p_equal, q)
    query = TailQuery(q=q, A=A, side="either")
    region = query.region(m)
    h_max = max(best_val, h_equal)
    # Tie-breaking: within tolerance the equal-probability point is preferred.
    ok = best_val <= h_equal + SEARCH_TOL
    witness = None if ok else PBParams(tuple(round(v, 12) for v in best_vec))
    return ExtremalReport(query, region, h_max, h_equal, ok, witness, SEARCH_TOL)
