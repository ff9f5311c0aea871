"""Scans of the prime-count error term against threshold-scaled windows.

Each checkpoint compares the exact prime count pi(n) to Li(n): the headline
bound is |pi(n) - Li(n)| < Q(n)*sqrt(Li(n)), and a companion window
|pi(n) - Li(n)| < 2*M(m)*sqrt(m) is evaluated with the mean proxy m taken as
Li(n) and, side by side, as pi(n). The sign-change search certifies entire
blocks as uniformly signed using monotonicity (pi nondecreasing, Li
increasing), so integer resolution is reached without evaluating Li at every
integer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import logint, sieve
from .errors import DomainError, SizeLimitError
from .thresholds import ThresholdFunction

# Injected-source searches evaluate every integer; keep them test-sized.
DENSE_SPAN_GUARD = 2_000_000

DEFAULT_SPACING = 1.25
FIT_MIN_N = 1000


@dataclass(frozen=True)
class ScanRecord:
    """One checkpoint of the error-term scan.

    bound_ok is the |delta| < Q(n)*sqrt(Li(n)) verdict. The m_window fields
    carry the 2*M(m)*sqrt(m) comparison with m instantiated as li_n and as
    pi_n respectively, so the choice of mean proxy stays auditable.
    """

    n: int
    pi_n: int
    li_n: float
    delta: float
    sqrt_li: float
    ratio: float
    q_value: float
    bound_ok: bool
    sign: int
    m_window_li: float
    m_window_li_ok: bool
    m_window_pi: float
    m_window_pi_ok: bool


@dataclass(frozen=True)
class IntervalRecord:
    """Prime count versus integral over a half-open interval (n0, n1]."""

    n0: int
    n1: int
    pi_diff: int
    li_diff: float
    excess: float


def scan(
    limit: int,
    spacing: float = DEFAULT_SPACING,
    threshold: ThresholdFunction | None = None,
    jobs: int = 1,
    cache_dir: str | Path | None = None,
) -> list[ScanRecord]:
    """Scan records on a geometric checkpoint schedule from 100 up to limit.

    The same threshold function serves as Q (evaluated at n) and as M
    (evaluated at the mean proxy) in the two window variants.
    """
    limit = int(limit)
    if limit < 100:
        raise DomainError(f"scan needs limit >= 100, got {limit}")
    if threshold is None:
        threshold = ThresholdFunction("log", c=1.0)
    checkpoints = sieve.pi_checkpoints(limit, spacing=spacing, jobs=jobs, cache_dir=cache_dir)
    records = []
    for cp in checkpoints:
        li_n = logint.li(cp.n).value
        records.append(make_record(cp.n, cp.pi_n, li_n, threshold))
    return records


def make_record(n: int, pi_n: int, li_n: float, threshold: ThresholdFunction) -> ScanRecord:
    delta = pi_n - li_n
    sqrt_li = math.sqrt(li_n)
    ratio = abs(delta) / sqrt_li
    q_value = threshold(n)
    window_li = 2.0 * threshold(li_n) * math.sqrt(li_n)
    window_pi = 2.0 * threshold(pi_n) * math.sqrt(pi_n)
    return ScanRecord(
        n=n,
        pi_n=pi_n,
        li_n=li_n,
        delta=delta,
        sqrt_li=sqrt_li,
        ratio=ratio,
        q_value=q_value,
        bound_ok=bool(abs(delta) < q_value * sqrt_li),
        sign=(delta > 0) - (delta < 0),
        m_window_li=window_li,
        m_window_li_ok=bool(abs(delta) < window_li),
        m_window_pi=window_pi,
        m_window_pi_ok=bool(abs(delta) < window_pi),
    )


def interval_compare(n0: int, n1: int, pi_lookup: dict[int, int] | None = None) -> IntervalRecord:
    """Exact prime count on (n0, n1] against the integral of 1/log over it."""
    n0, n1 = int(n0), int(n1)
    if not 2 <= n0 < n1:
        raise DomainError(f"need 2 <= n0 < n1, got ({n0}, {n1})")
    if pi_lookup is not None:
        pi0, pi1 = pi_lookup[n0], pi_lookup[n1]
    else:
        cps = sieve.pi_checkpoints(n1, anchors=[n0, n1])
        pi0, pi1 = cps[0].pi_n, cps[1].pi_n
    li_diff = logint.li_interval(n0, n1)
    pi_diff = pi1 - pi0
    return IntervalRecord(n0, n1, pi_diff, li_diff, pi_diff - li_diff)


def record_sign_flips(records: Sequence[ScanRecord]) -> list[tuple[int, int]]:
    """Pairs of consecutive checkpoints whose delta signs differ."""
    flips = []
    for prev, cur in zip(records, records[1:]):
        if prev.sign != cur.sign:
            flips.append((prev.n, cur.n))
    return flips


# --- integer-resolution sign-change search --------------------------------------


def sign_change_search(
    limit: int,
    start: int = 100,
    pi_source: Callable[[int], float] | None = None,
    jobs: int = 1,
) -> list[int]:
    """All n in [start, limit-1] where pi - Li changes sign between n and n+1.

    Real data below about n = 10 has trivial crossings because Li starts at
    zero while pi(2) = 1; the default start of 100 scans the regime the
    desk-scale claims are about. Pass start=2 to see the small-n crossings.
    A pi_source callable replaces the sieve (used by the self-test to verify
    that an injected crossing is caught); it is evaluated densely, so such
    searches are span-guarded.
    """
    limit, start = int(limit), int(start)
    if not 2 <= start < limit:
        raise DomainError(f"need 2 <= start < limit, got start={start}, limit={limit}")
    if pi_source is not None:
        if limit - start > DENSE_SPAN_GUARD:
            raise SizeLimitError(f"injected searches are limited to spans <= {DENSE_SPAN_GUARD}")
        pis = np.array([float(pi_source(n)) for n in range(start, limit + 1)])
        return _flips_from_values(start, pis, _li_dense(start, limit))

    bounds = _certification_bounds(start, limit)
    pi_at = {cp.n: cp.pi_n for cp in sieve.pi_checkpoints(limit, anchors=bounds, jobs=jobs)}
    li_at = _li_at_bounds(bounds)

    # The cumulative Simpson error along the bounds stays below 1e-6; the pad
    # keeps the certificates honest with a three-orders-of-magnitude margin.
    pad = 1e-3
    crossings: list[int] = []
    for i in range(len(bounds) - 1):
        a, b = bounds[i], bounds[i + 1]
        # Uniform sign over [a, b] (hence no flip) follows from monotonicity:
        # max delta <= pi(b) - Li(a) and min delta >= pi(a) - Li(b).
        if pi_at[b] - li_at[i] < -pad:
            continue
        if pi_at[a] - li_at[i + 1] > pad:
            continue
        crossings.extend(_dense_block_flips(a, b, pi_at[a]))
    return crossings


def _certification_bounds(start: int, limit: int) -> list[int]:
    bounds = [start]
    x = start
    while x < limit:
        x = min(limit, x + max(8, int(0.25 * math.sqrt(x))))
        bounds.append(x)
    return bounds


def _li_at_bounds(bounds: list[int]) -> np.ndarray:
    """Li at every certification bound: exact anchor plus per-block Simpson.

    Block widths grow like sqrt(x), so the per-block Simpson error stays far
    below 1e-12 and the accumulated drift is negligible against the pad.
    """
    arr = np.asarray(bounds, dtype=float)
    a, b = arr[:-1], arr[1:]
    mid = 0.5 * (a + b)
    contrib = (b - a) / 6.0 * (1.0 / np.log(a) + 4.0 / np.log(mid) + 1.0 / np.log(b))
    anchor = logint.li(bounds[0]).value
    return anchor + np.concatenate(([0.0], np.cumsum(contrib)))


def _li_dense(a: int, b: int) -> np.ndarray:
    """Li at every integer in [a, b], anchored at an exact quadrature value.

    Unit steps are integrated by composite Simpson on quarter-intervals; at
    the small-n end the integrand still bends fast enough that coarser steps
    would blur the sub-0.1 margins the sign scan needs.
    """
    xs = a + 0.25 * np.arange(4 * (b - a) + 1)
    f = 1.0 / np.log(xs)
    units = (
        f[0:-1:4] + 4.0 * f[1::4] + 2.0 * f[2::4] + 4.0 * f[3::4] + f[4::4]
    ) * (0.25 / 3.0)
    li_a = logint.li(a).value
    return li_a + np.concatenate(([0.0], np.cumsum(units)))


def _dense_block_flips(a: int, b: int, pi_a: int) -> list[int]:
    seg = sieve.sieve_range(a + 1, b + 1)  # primality of (a, b]
    pis = pi_a + np.concatenate(([0], np.cumsum(~seg.flags)))
    return _flips_from_values(a, pis.astype(float), _li_dense(a, b))


def _flips_from_values(start: int, pis: np.ndarray, lis: np.ndarray) -> list[int]:
    deltas = pis - lis
    signs = np.sign(deltas)
    flip_idx = np.flatnonzero(signs[:-1] != signs[1:])
    return [start + int(i) for i in flip_idx]


# --- threshold fitting ------------------------------------------------------------


def threshold_fit(
    records: Sequence[ScanRecord],
    families: Sequence[ThresholdFunction] | None = None,
    n_min: int = FIT_MIN_N,
) -> dict:
    """Largest observed ratio and the smallest scale making each family hold.

    For family f the fitted scale is max over records with n >= n_min of
    ratio / f(n) at unit scale: with c at least that value, bound_ok holds on
    every such record.
    """
    if len(records) < 2:
        raise DomainError(f"threshold_fit needs at least 2 records, got {len(records)}")
    if families is None:
        families = (
            ThresholdFunction("log", c=1.0),
            ThresholdFunction("loglog", c=1.0),
            ThresholdFunction("power", c=1.0, alpha=0.25),
        )
    worst = max(records, key=lambda r: r.ratio)
    fits = []
    tail = [r for r in records if r.n >= n_min]
    for template in families:
        unit = ThresholdFunction(template.family, c=1.0, alpha=template.alpha)
        c_fit = max((r.ratio / unit(r.n) for r in tail), default=None)
        fits.append({"family": template.family, "c": c_fit})
    return {"max_ratio": worst.ratio, "argmax_n": worst.n, "fits": fits}
