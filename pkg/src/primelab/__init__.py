"""primelab: a desk-scale numerical laboratory around the distribution of primes.

Exact prime counting via a segmented sieve, the logarithmic integral with
controlled quadrature error, exact Poisson-binomial tail machinery with a
fixed-mean extremality searcher, Monte Carlo and exact concentration windows
for Bernoulli sums, and scans of |pi(n) - Li(n)| against slowly diverging
threshold windows. Every claim is checked against an independent route and
counterexamples are reported as data rather than asserted away.
"""

from .concentration import (
    ConcentrationResult,
    draw_sums,
    exact_window_probability,
    fixed_mean_sweep,
    gaussian_window_approx,
    sample_fixed_mean_vectors,
    simulate_sum,
    window_bounds,
)
from .errors import (
    ConfigError,
    DomainError,
    PrimeLabError,
    QuadratureError,
    RangeTooLargeError,
    SizeLimitError,
)
from .errorscan import (
    IntervalRecord,
    ScanRecord,
    interval_compare,
    record_sign_flips,
    scan,
    sign_change_search,
    threshold_fit,
)
from .logint import LiValue, li, li_interval
from .pbin import (
    ExtremalReport,
    PBParams,
    TailQuery,
    binomial_pmf,
    check_extremal,
    curvature_expression,
    curvature_second_difference,
    extremal_search,
    pb_pmf,
    pb_pmf_exact,
    pb_pmf_vector,
    q_roots,
    stationarity_residual,
)
from .sieve import (
    PiCheckpoint,
    SieveSegment,
    VerificationCost,
    pi_checkpoints,
    prime_count,
    prime_indicator,
    sieve_range,
    verification_cost,
)
from .thresholds import ThresholdFunction, parse_threshold

__version__ = "0.1.0"

__all__ = [
    "ConcentrationResult",
    "ConfigError",
    "DomainError",
    "ExtremalReport",
    "IntervalRecord",
    "LiValue",
    "PBParams",
    "PiCheckpoint",
    "PrimeLabError",
    "QuadratureError",
    "RangeTooLargeError",
    "ScanRecord",
    "SieveSegment",
    "SizeLimitError",
    "TailQuery",
    "ThresholdFunction",
    "VerificationCost",
    "binomial_pmf",
    "check_extremal",
    "curvature_expression",
    "curvature_second_difference",
    "draw_sums",
    "exact_window_probability",
    "extremal_search",
    "fixed_mean_sweep",
    "gaussian_window_approx",
    "interval_compare",
    "li",
    "li_interval",
    "parse_threshold",
    "pb_pmf",
    "pb_pmf_exact",
    "pb_pmf_vector",
    "pi_checkpoints",
    "prime_count",
    "prime_indicator",
    "q_roots",
    "record_sign_flips",
    "sample_fixed_mean_vectors",
    "scan",
    "sieve_range",
    "sign_change_search",
    "simulate_sum",
    "stationarity_residual",
    "threshold_fit",
    "verification_cost",
    "window_bounds",
]
