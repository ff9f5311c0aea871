"""The logarithmic integral with its lower limit pinned at 2.

Li(n) = integral of dx/log(x) from 2 to n. The substitution x = e^u turns the
slowly varying integrand over a huge range into e^u/u over a short one, which
adaptive Gauss-Kronrod quadrature then resolves to near machine precision.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

from scipy import integrate

from .errors import DomainError, QuadratureError

# Contract on the reported bound: abs_error_bound <= REL_TOL * max(1, value).
REL_TOL = 1e-10

_LOG2 = math.log(2.0)


@dataclass(frozen=True)
class LiValue:
    """A Li evaluation together with its quadrature error bound."""

    n: float
    value: float
    abs_error_bound: float


def _integrand(u: float) -> float:
    return math.exp(u) / u


def _quad(u0: float, u1: float) -> tuple[float, float]:
    value, err = integrate.quad(_integrand, u0, u1, epsabs=1e-13, epsrel=1e-12, limit=200)
    scale = max(1.0, abs(value))
    if not math.isfinite(value) or err > REL_TOL * scale:
        raise QuadratureError(
            f"quadrature over [e^{u0:.6g}, e^{u1:.6g}] reported error {err:.3g} "
            f"beyond the {REL_TOL:g} relative tolerance"
        )
    return value, err


_cache_lock = threading.Lock()
_cache: dict[float, tuple[float, float]] = {}
_CACHE_MAX = 65536


def li(n: float) -> LiValue:
    """Li(n) for n >= 2, with Li(2) = 0 exactly."""
    x = float(n)
    if not x >= 2:
        raise DomainError(f"li is defined for n >= 2, got {n}")
    if x == 2.0:
        return LiValue(2.0, 0.0, 0.0)
    with _cache_lock:
        hit = _cache.get(x)
    if hit is None:
        hit = _quad(_LOG2, math.log(x))
        with _cache_lock:
            if len(_cache) >= _CACHE_MAX:
                _cache.clear()
            _cache[x] = hit
    value, err = hit
    return LiValue(x, value, err)


def li_interval(n0: float, n1: float) -> float:
    """Integral of dx/log(x) over [n0, n1], computed as a single integral.

    Evaluating the interval directly (rather than as li(n1) - li(n0)) avoids
    cancellation when the two endpoints are close.
    """
    a, b = float(n0), float(n1)
    if not a >= 2:
        raise DomainError(f"li_interval needs n0 >= 2, got {n0}")
    if not b >= a:
        raise DomainError(f"li_interval needs n1 >= n0, got n0={n0}, n1={n1}")
    if a == b:
        return 0.0
    value, _ = _quad(math.log(a), math.log(b))
    return value
