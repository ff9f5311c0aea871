"""Exact prime generation and counting via a segmented, odds-only sieve.

The streaming counter keeps one segment of odd numbers in memory at a time,
so exact prime counts at 1e8..1e10 scale stay within a few megabytes. A
verification-cost model records how many trial divisions by successive primes
are needed to settle the primality of a single n; along primes that cost is
unbounded, which is the arithmetic fact the rest of the package leans on.
"""

from __future__ import annotations

import math
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, RangeTooLargeError

# Odd entries per streaming segment; one segment spans twice as many integers.
SEGMENT_ODD_ENTRIES = 1 << 20
SEGMENT_SPAN = 2 * SEGMENT_ODD_ENTRIES

# Keeps base-prime tables small: sqrt(1e10) = 1e5.
GLOBAL_LIMIT = 10**10

# Default first checkpoint of geometric schedules.
CHECKPOINT_START = 100

CACHE_ENV_VAR = "PRIME_LAB_CACHE"
CACHE_FILE_NAME = "checkpoints.tsv"


@dataclass(frozen=True)
class SieveSegment:
    """Primality flags for the half-open window [lo, hi).

    flags[i] is True when lo+i is composite; a clear flag marks a prime.
    """

    lo: int
    hi: int
    flags: np.ndarray

    def primes(self) -> np.ndarray:
        return self.lo + np.flatnonzero(~self.flags)

    def count(self) -> int:
        return int(np.count_nonzero(~self.flags))

    def is_prime(self, n: int) -> bool:
        if not self.lo <= n < self.hi:
            raise DomainError(f"{n} outside segment [{self.lo}, {self.hi})")
        return not bool(self.flags[n - self.lo])


@dataclass(frozen=True)
class PiCheckpoint:
    """An exact (n, number of primes <= n) pair."""

    n: int
    pi_n: int


@dataclass(frozen=True)
class VerificationCost:
    """Trial divisions by successive primes needed to settle primality of n.

    For composite n, trials is the 1-based index of the smallest prime factor
    within 2, 3, 5, ...; for prime n it is the count of primes <= sqrt(n),
    with a floor of one vacuous check for n = 2, 3.
    """

    n: int
    trials: int
    verdict: str  # "prime" | "composite"


# --- base primes, grown on demand and read-only afterwards ------------------

_base_lock = threading.Lock()
_base_limit = 0
_base_primes: np.ndarray = np.empty(0, dtype=np.int64)


def _monolithic_flags(limit: int) -> np.ndarray:
    is_prime = np.ones(limit + 1, dtype=bool)
    is_prime[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if is_prime[p]:
            is_prime[p * p :: p] = False
    return is_prime


def base_primes(limit: int) -> np.ndarray:
    """All primes <= limit, served from a grow-only shared table."""
    global _base_limit, _base_primes
    if limit < 2:
        return np.empty(0, dtype=np.int64)
    if limit > _base_limit:
        with _base_lock:
            if limit > _base_limit:
                grown = max(limit, 2 * _base_limit, 1 << 10)
                _base_primes = np.flatnonzero(_monolithic_flags(grown)).astype(np.int64)
                _base_limit = grown
    return _base_primes[: int(np.searchsorted(_base_primes, limit, side="right"))]


# --- point operations --------------------------------------------------------


def prime_indicator(n: int) -> int:
    """1 if n is prime, else 0; total on n >= 0 (0 and 1 map to 0)."""
    n = int(n)
    if n < 0:
        raise DomainError(f"prime_indicator needs n >= 0, got {n}")
    if n < 2:
        return 0
    for p in base_primes(math.isqrt(n)):
        if n % int(p) == 0:
            return 0
    return 1


def verification_cost(n: int) -> VerificationCost:
    """Cost of settling primality of n by trial division over ordered primes."""
    n = int(n)
    if n < 2:
        raise DomainError(f"verification_cost needs n >= 2, got {n}")
    candidates = base_primes(math.isqrt(n))
    for i, p in enumerate(candidates, start=1):
        if n % int(p) == 0:
            return VerificationCost(n, i, "composite")
    # No candidate below sqrt(n) divides n. For n = 2, 3 there are no
    # candidates at all; record one vacuous check so the cost is always >= 1.
    return VerificationCost(n, max(1, len(candidates)), "prime")


def sieve_range(lo: int, hi: int) -> SieveSegment:
    """Sieve the window [lo, hi); requires 2 <= lo < hi and a bounded span."""
    lo, hi = int(lo), int(hi)
    if lo < 2 or hi <= lo:
        raise DomainError(f"need 2 <= lo < hi, got [{lo}, {hi})")
    if hi > GLOBAL_LIMIT:
        raise RangeTooLargeError(f"hi={hi} exceeds the global limit {GLOBAL_LIMIT}")
    if hi - lo > SEGMENT_SPAN:
        raise RangeTooLargeError(f"window of {hi - lo} exceeds the segment span {SEGMENT_SPAN}")
    flags = np.zeros(hi - lo, dtype=bool)
    for p in base_primes(math.isqrt(hi - 1)):
        p = int(p)
        start = max(p * p, ((lo + p - 1) // p) * p)
        if start < hi:
            flags[start - lo :: p] = True
    return SieveSegment(lo, hi, flags)


# --- streaming prime counting -------------------------------------------------


def prime_count(n: int, jobs: int = 1) -> int:
    """Exact number of primes <= n."""
    return pi_checkpoints(n, anchors=[n], jobs=jobs)[0].pi_n


def pi_checkpoints(
    limit: int,
    spacing: float = 1.25,
    anchors: list[int] | None = None,
    jobs: int = 1,
    cache_dir: str | Path | None = None,
) -> list[PiCheckpoint]:
    """Exact prime counts at a geometric schedule (or explicit anchors) up to limit.

    One streaming pass over odd-only segments; with jobs > 1 segments are
    sieved concurrently and merged in segment order, so the result does not
    depend on the worker count. When cache_dir is given, previously computed
    checkpoints are reused and new ones are merged back into the cache file.
    """
    limit = int(limit)
    if limit < 2:
        raise DomainError(f"limit must be >= 2, got {limit}")
    if limit > GLOBAL_LIMIT:
        raise RangeTooLargeError(f"limit {limit} exceeds the global limit {GLOBAL_LIMIT}")
    if anchors is None:
        if not spacing > 1:
            raise DomainError(f"spacing must be > 1, got {spacing}")
        ns = _geometric_anchors(limit, spacing)
    else:
        ns = sorted({int(a) for a in anchors})
        if not ns:
            raise DomainError("anchors must be non-empty")
        if ns[0] < 2 or ns[-1] > limit:
            raise DomainError(f"anchors must lie in [2, {limit}]")

    cache_path = None
    if cache_dir is not None:
        cache_path = Path(cache_dir) / CACHE_FILE_NAME
        cached = read_checkpoint_cache(cache_path)
        if all(n in cached for n in ns):
            return [PiCheckpoint(n, cached[n]) for n in ns]

    counts = _stream_counts(ns, jobs=max(1, int(jobs)))
    result = [PiCheckpoint(n, counts[n]) for n in ns]

    if cache_path is not None:
        merged = read_checkpoint_cache(cache_path)
        merged.update(counts)
        write_checkpoint_cache(cache_path, merged)
    return result


def _geometric_anchors(limit: int, spacing: float) -> list[int]:
    ns: list[int] = []
    x = float(min(CHECKPOINT_START, limit))
    while x < limit:
        n = int(round(x))
        if not ns or n > ns[-1]:
            ns.append(n)
        x *= spacing
    if not ns or ns[-1] != limit:
        ns.append(limit)
    return [max(2, n) for n in ns]


def _stream_counts(ns: list[int], jobs: int) -> dict[int, int]:
    top = ns[-1]
    anchors = np.asarray(ns, dtype=np.int64)
    odd_base = [int(p) for p in base_primes(math.isqrt(top)) if p > 2]

    counts: dict[int, int] = {n: 1 for n in ns if n == 2}
    if top < 3:
        return counts

    seg_bounds = []
    lo = 3
    while lo <= top:
        hi = min(lo + SEGMENT_SPAN, top + 1)
        seg_bounds.append((lo, hi))
        lo = hi if hi % 2 == 1 else hi + 1

    def sieve_one(bounds: tuple[int, int]) -> tuple[int, list[tuple[int, int]]]:
        s_lo, s_hi = bounds
        n_odd = (s_hi - s_lo + 1) // 2
        prime_mask = np.ones(n_odd, dtype=bool)
        for p in odd_base:
            if p * p >= s_hi:
                break
            start = max(p * p, ((s_lo + p - 1) // p) * p)
            if start % 2 == 0:
                start += p
            if start < s_hi:
                prime_mask[(start - s_lo) // 2 :: p] = False
        seg_total = int(np.count_nonzero(prime_mask))
        i0, i1 = np.searchsorted(anchors, [s_lo, s_hi])
        inner: list[tuple[int, int]] = []
        if i0 < i1:
            csum = np.cumsum(prime_mask)
            for n in anchors[i0:i1]:
                inner.append((int(n), int(csum[(int(n) - s_lo) // 2])))
        return seg_total, inner

    if jobs > 1 and len(seg_bounds) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(sieve_one, seg_bounds))
    else:
        results = [sieve_one(b) for b in seg_bounds]

    prefix = 1  # the prime 2
    for seg_total, inner in results:
        for n, upto in inner:
            counts[n] = prefix + upto
        prefix += seg_total
    return counts


# --- checkpoint cache ----------------------------------------------------------


def default_cache_dir() -> Path:
    """Cache directory from PRIME_LAB_CACHE, defaulting to ./cache."""
    return Path(os.environ.get(CACHE_ENV_VAR, "./cache"))


def read_checkpoint_cache(path: str | Path) -> dict[int, int]:
    """Read a `n<TAB>pi` cache file; missing file means an empty cache."""
    path = Path(path)
    if not path.exists():
        return {}
    out: dict[int, int] = {}
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            n_str, _, pi_str = line.partition("\t")
            out[int(n_str)] = int(pi_str)
    return out


def write_checkpoint_cache(path: str | Path, counts: dict[int, int]) -> None:
    """Write checkpoints as ascending `n<TAB>pi` lines, UTF-8, no header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for n in sorted(counts):
            fh.write(f"{n}\t{counts[n]}\n")
