"""Command-line entry point: configuration, subcommands, deterministic output.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure
(quadrature did not converge), 3 a check found a property violation. A
violation is data, never silent: it is reported in the output and signaled by
the status so automation can gate on it.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import concentration, errorscan, logint, pbin, sieve
from .errors import ConfigError, PrimeLabError, QuadratureError
from .thresholds import ThresholdFunction, parse_threshold

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2
EXIT_VIOLATION = 3

DEFAULT_CONFIG_FILE = "./primelab.conf"
JOBS_ENV_VAR = "PRIME_LAB_JOBS"

DEFAULTS: dict[str, str] = {
    "limit": "1e6",
    "spacing": "1.25",
    "threshold": "log:c=1",
    "seed": "42",
    "trials": "1e4",
    "cache_dir": "./cache",
    "output": "-",
    "format": "csv",
    "jobs": "",  # empty resolves to available parallelism
}

# Claim identifiers used by the report subcommand's JSON summary.
CLAIM_KEYS = ("Prop1", "Prop2", "Thm3", "Thm4", "Thm5", "Lemma2")


@dataclass
class RunConfig:
    """Shared configuration resolved from flags, environment, file, defaults."""

    limit: int
    spacing: float
    threshold_spec: str
    seed: int
    trials: int
    cache_dir: Path
    use_cache: bool
    output: str
    format: str
    jobs: int

    @property
    def threshold(self) -> ThresholdFunction:
        return parse_threshold(self.threshold_spec)


def _parse_int_sci(key: str, raw: str) -> int:
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"config key {key!r} needs an integer, got {raw!r}") from None
    if not value.is_integer() or not math.isfinite(value):
        raise ConfigError(f"config key {key!r} needs an integer, got {raw!r}")
    return int(value)


def _parse_float(key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"config key {key!r} needs a number, got {raw!r}") from None


def load_config_file(path: str | Path) -> dict[str, str]:
    """Plain `key = value` lines; `#` starts a comment; unknown keys reject."""
    values: dict[str, str] = {}
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key = key.strip()
            if not sep:
                raise ConfigError(f"{path}:{lineno}: expected `key = value`, got {line!r}")
            if key not in DEFAULTS:
                raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = value.strip()
    return values


def parse_config(args: dict[str, str], env: dict[str, str], file_values: dict[str, str]) -> RunConfig:
    """Resolve configuration with precedence: args > env > file > defaults."""

    def pick(key: str, env_var: str | None = None) -> str:
        if args.get(key) is not None:
            return args[key]
        if env_var is not None and env.get(env_var):
            return env[env_var]
        if key in file_values:
            return file_values[key]
        return DEFAULTS[key]

    limit = _parse_int_sci("limit", pick("limit"))
    if limit < 2:
        raise ConfigError(f"config key 'limit' must be >= 2, got {limit}")
    spacing = _parse_float("spacing", pick("spacing"))
    if not spacing > 1:
        raise ConfigError(f"config key 'spacing' must be > 1, got {spacing}")
    threshold_spec = pick("threshold")
    parse_threshold(threshold_spec)  # validate eagerly; unknown family is a config error
    seed = _parse_int_sci("seed", pick("seed"))
    trials = _parse_int_sci("trials", pick("trials"))
    if trials < 1:
        raise ConfigError(f"config key 'trials' must be >= 1, got {trials}")
    out_format = pick("format")
    if out_format not in ("csv", "json"):
        raise ConfigError(f"config key 'format' must be csv or json, got {out_format!r}")
    jobs_raw = pick("jobs", env_var=JOBS_ENV_VAR)
    jobs = os.cpu_count() or 1 if jobs_raw == "" else _parse_int_sci("jobs", jobs_raw)
    if jobs < 1:
        raise ConfigError(f"config key 'jobs' must be >= 1, got {jobs}")
    return RunConfig(
        limit=limit,
        spacing=spacing,
        threshold_spec=threshold_spec,
        seed=seed,
        trials=trials,
        cache_dir=Path(pick("cache_dir", env_var=sieve.CACHE_ENV_VAR)),
        use_cache=args.get("no_cache") is None,
        output=pick("output"),
        format=out_format,
        jobs=jobs,
    )


# --- output helpers ---------------------------------------------------------------


def _fmt(x: float) -> str:
    """Floats are printed at 12 significant digits so diffs stay stable."""
    return format(float(x), ".12g")


def _round12(obj):
    if isinstance(obj, float):
        return float(_fmt(obj))
    if isinstance(obj, dict):
        return {k: _round12(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round12(v) for v in obj]
    return obj


class _Output:
    def __init__(self, target: str):
        self.target = target
        self._fh = None

    def __enter__(self):
        if self.target == "-":
            self._fh = sys.stdout
        else:
            self._fh = open(self.target, "w", encoding="utf-8", newline="")
        return self._fh

    def __exit__(self, *exc):
        if self._fh is not sys.stdout and self._fh is not None:
            self._fh.close()
        return False


def _write_csv(fh, header: list[str], rows: list[list[str]]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)


# --- subcommand handlers -------------------------------------------------------------


def _cmd_sieve(cfg: RunConfig, opts: argparse.Namespace) -> int:
    anchors = None
    if opts.anchors:
        anchors = [_parse_int_sci("anchors", a) for a in opts.anchors.split(",")]
    cache_dir = cfg.cache_dir if cfg.use_cache else None
    checkpoints = sieve.pi_checkpoints(
        cfg.limit, spacing=cfg.spacing, anchors=anchors, jobs=cfg.jobs, cache_dir=cache_dir
    )
    with _Output(cfg.output) as fh:
        _write_csv(fh, ["n", "pi"], [[str(cp.n), str(cp.pi_n)] for cp in checkpoints])
    return EXIT_OK


def _cmd_pi(cfg: RunConfig, opts: argparse.Namespace) -> int:
    cache_dir = cfg.cache_dir if cfg.use_cache else None
    value = sieve.pi_checkpoints(cfg.limit, anchors=[cfg.limit], jobs=cfg.jobs, cache_dir=cache_dir)
    with _Output(cfg.output) as fh:
        fh.write(f"{value[0].pi_n}\n")
    return EXIT_OK


def _cmd_li(cfg: RunConfig, opts: argparse.Namespace) -> int:
    if opts.n is None:
        raise ConfigError("li requires --n")
    n = _parse_float("n", opts.n)
    value = logint.li(n)
    with _Output(cfg.output) as fh:
        fh.write(f"{_fmt(value.value)}\n")
    return EXIT_OK


SCAN_HEADER = ["n", "pi", "li", "delta", "sqrt_li", "ratio", "Q", "bound_ok", "sign"]


def _cmd_scan_error(cfg: RunConfig, opts: argparse.Namespace) -> int:
    cache_dir = cfg.cache_dir if cfg.use_cache else None
    records = errorscan.scan(
        cfg.limit, spacing=cfg.spacing, threshold=cfg.threshold, jobs=cfg.jobs, cache_dir=cache_dir
    )
    if cfg.format == "json":
        # Summary form: the smallest scale per family that bounds the scan.
        with _Output(cfg.output) as fh:
            json.dump(_round12(errorscan.threshold_fit(records)), fh, sort_keys=True, indent=2)
            fh.write("\n")
    else:
        rows = [
            [
                str(r.n),
                str(r.pi_n),
                _fmt(r.li_n),
                _fmt(r.delta),
                _fmt(r.sqrt_li),
                _fmt(r.ratio),
                _fmt(r.q_value),
                "true" if r.bound_ok else "false",
                str(r.sign),
            ]
            for r in records
        ]
        with _Output(cfg.output) as fh:
            _write_csv(fh, SCAN_HEADER, rows)
    return EXIT_VIOLATION if any(not r.bound_ok for r in records) else EXIT_OK


PBIN_HEADER = ["k", "m", "q", "A", "region", "h", "binom", "satisfied", "witness"]


def _tail_qs(k: int, m: float, A: float) -> list[int]:
    half = A * math.sqrt(m)
    qs = [q for q in range(0, k + 1) if q < m - half or q > m + half]
    return qs


def _cmd_pbin_check(cfg: RunConfig, opts: argparse.Namespace) -> int:
    if opts.k is None or opts.m is None:
        raise ConfigError("pbin-check requires --k and --m")
    k = _parse_int_sci("k", opts.k)
    m = _parse_float("m", opts.m)
    A = _parse_float("A", opts.A)
    grid = _parse_int_sci("grid", opts.grid)
    if opts.q is None or opts.q == "tail":
        qs = _tail_qs(k, m, A)
    else:
        qs = [_parse_int_sci("q", q) for q in opts.q.split(",")]
    rows = []
    violation = False
    for q in qs:
        rep = pbin.extremal_search(k, m, q, grid=grid, A=A, jobs=cfg.jobs)
        if rep.region != "na" and rep.satisfied is False:
            violation = True
        witness = ";".join(_fmt(p) for p in rep.witness.probs) if rep.witness else ""
        rows.append(
            [
                str(k),
                _fmt(m),
                str(q),
                _fmt(A),
                rep.region,
                _fmt(rep.h_value),
                _fmt(rep.binomial_value),
                "true" if rep.satisfied else "false",
                witness,
            ]
        )
    with _Output(cfg.output) as fh:
        _write_csv(fh, PBIN_HEADER, rows)
    return EXIT_VIOLATION if violation else EXIT_OK


CONCENTRATION_HEADER = [
    "n", "m", "family", "c", "alpha", "window_lo", "window_hi",
    "trials", "hits", "empirical", "exact", "gaussian",
]


def _cmd_concentration(cfg: RunConfig, opts: argparse.Namespace) -> int:
    if opts.n is None or opts.p is None:
        raise ConfigError("concentration requires --n and --p")
    ns = [_parse_int_sci("n", v) for v in opts.n.split(",")]
    ps = [_parse_float("p", v) for v in opts.p.split(",")]
    thr = cfg.threshold
    rows = []
    for n in ns:
        for p in ps:
            params = pbin.PBParams([p] * n)
            res = concentration.simulate_sum(params, cfg.trials, cfg.seed, thr, jobs=cfg.jobs)
            try:
                gauss = _fmt(concentration.gaussian_window_approx(n, p, thr))
            except PrimeLabError:
                gauss = ""
            rows.append(
                [
                    str(n),
                    _fmt(params.m),
                    thr.family,
                    _fmt(thr.c),
                    _fmt(thr.alpha) if thr.family == "power" else "",
                    _fmt(res.window[0]),
                    _fmt(res.window[1]),
                    str(res.trials),
                    str(res.hits),
                    _fmt(res.empirical_prob),
                    _fmt(res.exact_prob) if res.exact_prob is not None else "",
                    gauss,
                ]
            )
    with _Output(cfg.output) as fh:
        _write_csv(fh, CONCENTRATION_HEADER, rows)
    return EXIT_OK


def _read_csv_rows(path: str) -> tuple[list[str], list[dict[str, str]]]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, [])
        rows = [dict(zip(header, row)) for row in reader]
    return header, rows


def _cmd_report(cfg: RunConfig, opts: argparse.Namespace) -> int:
    scan_rows: list[dict[str, str]] = []
    pbin_rows: list[dict[str, str]] = []
    conc_rows: list[dict[str, str]] = []
    for path in opts.inputs:
        header, rows = _read_csv_rows(path)
        if header == SCAN_HEADER:
            scan_rows.extend(rows)
        elif header == PBIN_HEADER:
            pbin_rows.extend(rows)
        elif header == CONCENTRATION_HEADER:
            conc_rows.extend(rows)
        else:
            raise ConfigError(f"unrecognized CSV header in {path}")

    summary: dict = {key: {"evidence": "none"} for key in CLAIM_KEYS}
    violation = False

    if pbin_rows:
        applicable = [r for r in pbin_rows if r["region"] != "na"]
        witnesses = [r for r in applicable if r["satisfied"] == "false"]
        summary["Prop1"] = {
            "rows": len(pbin_rows),
            "applicable": len(applicable),
            "violations": len(witnesses),
            "witnesses": [r["witness"] for r in witnesses],
        }
        violation = violation or bool(witnesses)

    if conc_rows:
        empirical = [float(r["empirical"]) for r in conc_rows]
        exact_rows = [r for r in conc_rows if r["exact"]]
        within = 0
        for r in exact_rows:
            exact = float(r["exact"])
            se = math.sqrt(max(exact * (1 - exact), 0.0) / int(r["trials"]))
            if abs(float(r["empirical"]) - exact) <= 4 * se:
                within += 1
        gauss_gap = [
            abs(float(r["exact"]) - float(r["gaussian"]))
            for r in conc_rows
            if r["exact"] and r["gaussian"]
        ]
        summary["Prop2"] = {
            "cells": len(conc_rows),
            "min_empirical": min(empirical),
            "min_exact": min((float(r["exact"]) for r in exact_rows), default=None),
            "max_exact_gaussian_gap": max(gauss_gap, default=None),
        }
        summary["Thm3"] = {
            "cells": len(conc_rows),
            "mc_within_4se": within,
            "mc_with_exact": len(exact_rows),
        }

    if scan_rows:
        thr = cfg.threshold
        records = [
            errorscan.make_record(int(r["n"]), int(r["pi"]), float(r["li"]), thr)
            for r in scan_rows
        ]
        thm5_bad = [r.n for r in records if not r.bound_ok]
        thm4_bad_li = [r.n for r in records if not r.m_window_li_ok]
        thm4_bad_pi = [r.n for r in records if not r.m_window_pi_ok]
        fit = errorscan.threshold_fit(records) if len(records) >= 2 else None
        summary["Thm5"] = {
            "records": len(records),
            "violations": thm5_bad,
            "fit": fit,
        }
        summary["Thm4"] = {
            "records": len(records),
            "threshold": thr.spec_string,
            "violations_with_li_mean": thm4_bad_li,
            "violations_with_pi_mean": thm4_bad_pi,
        }
        signs = [int(r["sign"]) for r in scan_rows]
        flips = [
            int(scan_rows[i]["n"])
            for i in range(len(signs) - 1)
            if signs[i] != signs[i + 1]
        ]
        summary["Lemma2"] = {
            "records": len(scan_rows),
            "sign_counts": {
                "-1": signs.count(-1),
                "0": signs.count(0),
                "+1": signs.count(1),
            },
            "checkpoint_sign_flips": flips,
        }
        violation = violation or bool(thm5_bad) or bool(thm4_bad_li)

    with _Output(cfg.output) as fh:
        json.dump(_round12(summary), fh, sort_keys=True, indent=2)
        fh.write("\n")
    return EXIT_VIOLATION if violation else EXIT_OK


HANDLERS = {
    "sieve": _cmd_sieve,
    "pi": _cmd_pi,
    "li": _cmd_li,
    "scan-error": _cmd_scan_error,
    "pbin-check": _cmd_pbin_check,
    "concentration": _cmd_concentration,
    "report": _cmd_report,
}


def run(subcommand: str, cfg: RunConfig, opts: argparse.Namespace) -> int:
    """Dispatch one subcommand; returns the process exit status."""
    return HANDLERS[subcommand](cfg, opts)


# --- argument parsing -----------------------------------------------------------------


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's default 2
        raise _UsageError(message)


def _build_parser() -> _Parser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="config file path (default ./primelab.conf if present)")
    shared.add_argument("--limit", help="upper end of the computation range")
    shared.add_argument("--spacing", help="geometric checkpoint ratio (> 1)")
    shared.add_argument("--threshold", help="threshold spec, e.g. log:c=1 or power:c=2,alpha=0.3")
    shared.add_argument("--seed", help="random seed")
    shared.add_argument("--trials", help="Monte Carlo trial count")
    shared.add_argument("--cache-dir", dest="cache_dir", help="checkpoint cache directory")
    shared.add_argument("--no-cache", dest="no_cache", action="store_const", const=True,
                        help="disable the checkpoint cache")
    shared.add_argument("--output", help="output path, or - for stdout")
    shared.add_argument("--format", help="output format: csv or json")
    shared.add_argument("--jobs", help="worker count (default: available parallelism)")

    parser = _Parser(prog="primelab", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("sieve", parents=[shared], help="emit prime-count checkpoints as CSV")
    p.add_argument("--anchors", help="comma-separated explicit checkpoint positions")

    sub.add_parser("pi", parents=[shared], help="print the exact prime count at --limit")

    p = sub.add_parser("li", parents=[shared], help="print the logarithmic integral at --n")
    p.add_argument("--n", help="upper integration endpoint (>= 2)")

    sub.add_parser("scan-error", parents=[shared], help="scan |pi - Li| against the Q window")

    p = sub.add_parser("pbin-check", parents=[shared], help="fixed-mean tail extremality search")
    p.add_argument("--k", help="number of Bernoulli trials")
    p.add_argument("--m", help="fixed mean of the probability vector")
    p.add_argument("--q", help="comma-separated success counts, or 'tail'")
    p.add_argument("--A", default="2", help="tail window constant (> 1)")
    p.add_argument("--grid", default="4", help="probability grid resolution (multiples of 1/grid)")

    p = sub.add_parser("concentration", parents=[shared], help="window probabilities, MC vs exact")
    p.add_argument("--n", help="comma-separated Bernoulli counts")
    p.add_argument("--p", help="comma-separated success probabilities")

    p = sub.add_parser("report", parents=[shared], help="aggregate CSV outputs into a JSON summary")
    p.add_argument("inputs", nargs="+", help="CSV files produced by other subcommands")

    return parser


_CONFIG_KEYS = ("limit", "spacing", "threshold", "seed", "trials", "cache_dir",
                "output", "format", "jobs", "no_cache")


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        opts = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"primelab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        file_values: dict[str, str] = {}
        config_path = opts.config or (DEFAULT_CONFIG_FILE if Path(DEFAULT_CONFIG_FILE).exists() else None)
        if config_path:
            file_values = load_config_file(config_path)
        args = {k: getattr(opts, k, None) for k in _CONFIG_KEYS}
        args = {k: (str(v) if v is not None and not isinstance(v, bool) else v) for k, v in args.items()}
        cfg = parse_config(args, dict(os.environ), file_values)
        return run(opts.subcommand, cfg, opts)
    except QuadratureError as exc:
        print(f"primelab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (PrimeLabError, IndexError) as exc:
        print(f"primelab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
