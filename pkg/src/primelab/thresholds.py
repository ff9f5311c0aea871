"""Slowly diverging scale functions for deviation windows.

A threshold function turns a center value x into a window half-width scale:
the window around a mean m is (m - M(m)*sqrt(m), m + M(m)*sqrt(m)), and the
prime-count bound uses Q(n)*sqrt(Li(n)). Every family diverges to +inf, which
is the only property the bounds ask of it.
"""

import math
from dataclasses import dataclass

from .errors import ConfigError, DomainError

FAMILIES = ("log", "loglog", "power")


@dataclass(frozen=True)
class ThresholdFunction:
    """A named slowly-growing function c*f(x), optionally capped at sqrt(x)/6.

    family: "log" -> c*ln(x), "loglog" -> c*ln(ln(x)), "power" -> c*x**alpha.
    alpha is only meaningful for the power family and must stay below 1/2 so
    the window remains narrower than the mean itself.
    """

    family: str
    c: float = 1.0
    alpha: float = 0.25
    cap_enabled: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown threshold family {self.family!r}; expected one of {FAMILIES}")
        if not self.c > 0:
            raise ConfigError(f"threshold scale c must be > 0, got {self.c}")
        if self.family == "power" and not 0 < self.alpha < 0.5:
            raise ConfigError(f"power exponent alpha must lie in (0, 0.5), got {self.alpha}")

    def __call__(self, x: float) -> float:
        x = float(x)
        if self.family == "power":
            if x < 0:
                raise DomainError(f"power threshold needs x >= 0, got {x}")
            value = self.c * x**self.alpha
        elif self.family == "log":
            if x <= 0:
                raise DomainError(f"log threshold needs x > 0, got {x}")
            value = self.c * math.log(x)
        else:
            if x <= 1:
                raise DomainError(f"loglog threshold needs x > 1, got {x}")
            value = self.c * math.log(math.log(x))
        if self.cap_enabled:
            value = min(value, math.sqrt(x) / 6.0)
        return value

    @property
    def spec_string(self) -> str:
        """Canonical parseable form, inverse of parse_threshold."""
        parts = [f"c={self.c:g}"]
        if self.family == "power":
            parts.append(f"alpha={self.alpha:g}")
        if self.cap_enabled:
            parts.append("cap=1")
        return f"{self.family}:{','.join(parts)}"


def parse_threshold(spec: str) -> ThresholdFunction:
    """Parse "family[:key=value,...]" such as "log:c=1" or "power:c=2,alpha=0.3"."""
    spec = spec.strip()
    family, _, rest = spec.partition(":")
    family = family.strip()
    kwargs: dict = {}
    if rest.strip():
        for item in rest.split(","):
            key, sep, raw = item.partition("=")
            key = key.strip()
            if not sep:
                raise ConfigError(f"malformed threshold option {item!r} in {spec!r}")
            if key == "c":
                kwargs["c"] = _parse_float(key, raw)
            elif key == "alpha":
                kwargs["alpha"] = _parse_float(key, raw)
            elif key == "cap":
                kwargs["cap_enabled"] = raw.strip() in ("1", "true", "yes")
            else:
                raise ConfigError(f"unknown threshold option {key!r} in {spec!r}")
    return ThresholdFunction(family=family, **kwargs)


def _parse_float(key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"threshold option {key!r} needs a number, got {raw!r}") from None
