"""Command-line front end: estimates, applications, scaling benchmarks, and
an oracle-identity verification mode.

Reports are canonical JSON (sorted keys, no whitespace padding) or CSV for
scaling tables, and are byte-identical across runs with the same seed; wall
time goes to stderr only.  Exit codes: 0 success, 2 validation error, 3
runtime error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from .applications import equivalence_test, estimate_dtv, learn_histogram
from .dist import Distribution, gen_dk, load_distribution, min_perm_tv
from .estimators import is_too_low
from .oracle import OracleSession, read_counters
from .pipeline import estimate_single_report, profile
from .profiles import PROFILE_NAMES
from .search import comparator_calls_formula, find_good_alpha_report
from .testkit import exact_expected_ratio, exact_s_gamma_w, make_exact_context

SCHEMA = "condest/1"

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


class ValidationError(Exception):
    pass


def _canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def _emit(text: str, out_path) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("CONDEST_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ValidationError(f"CONDEST_SEED must be an integer, got {env!r}") from exc
    return 0


def _make_profile(args, eps=None, c=None):
    overrides = {}
    if getattr(args, "eta", None) is not None:
        overrides["eta"] = args.eta
    if getattr(args, "ell_mult", None) is not None:
        overrides["ell_multiplier"] = args.ell_mult
    return profile(
        args.profile,
        c=c if c is not None else getattr(args, "c", 0.05),
        eps=eps if eps is not None else args.eps,
        **overrides,
    )


def _estimate_value(v):
    return "too_low" if is_too_low(v) else v


def cmd_estimate(args) -> dict:
    d = load_distribution(args.dist)
    prof = _make_profile(args)
    seed = _resolve_seed(args)
    session = OracleSession(d, seed)
    report = estimate_single_report(session, prof, args.x)
    return {
        "schema": SCHEMA,
        "command": "estimate",
        "seed": seed,
        "x": args.x,
        "estimate": _estimate_value(report.estimate),
        "branch": report.branch,
        "alpha": report.alpha,
        "b_hat": report.b_hat,
        "s_hat": None if report.s_hat is None else _estimate_value(report.s_hat),
        "counters": read_counters(session),
        "profile": prof.summary(),
    }


def cmd_histogram(args) -> dict:
    d = load_distribution(args.dist)
    prof = _make_profile(args)
    seed = _resolve_seed(args)
    session = OracleSession(d, seed)
    learned = learn_histogram(session, args.eps, prof)
    return {
        "schema": SCHEMA,
        "command": "histogram",
        "seed": seed,
        "eps": args.eps,
        "learned_weights": [float(w) for w in learned.weights],
        "min_perm_tv": min_perm_tv(d, learned),
        "counters": read_counters(session),
        "profile": prof.summary(),
    }


def cmd_dtv(args) -> dict:
    da = load_distribution(args.dist_a)
    db = load_distribution(args.dist_b)
    if da.n != db.n:
        raise ValidationError("distA and distB must share a domain size")
    prof = _make_profile(args)
    seed = _resolve_seed(args)
    sa = OracleSession(da, np.random.SeedSequence(seed).spawn(2)[0])
    sb = OracleSession(db, np.random.SeedSequence(seed).spawn(2)[1])
    est = estimate_dtv(sa, sb, args.eps, prof)
    return {
        "schema": SCHEMA,
        "command": "dtv",
        "seed": seed,
        "eps": args.eps,
        "estimate": est,
        "counters": {"A": read_counters(sa), "B": read_counters(sb)},
        "profile": prof.summary(),
    }


def cmd_equiv(args) -> dict:
    da = load_distribution(args.dist_a)
    db = load_distribution(args.dist_b)
    if da.n != db.n:
        raise ValidationError("distA and distB must share a domain size")
    prof = _make_profile(args)
    seed = _resolve_seed(args)
    sa = OracleSession(da, np.random.SeedSequence(seed).spawn(2)[0])
    sb = OracleSession(db, np.random.SeedSequence(seed).spawn(2)[1])
    verdict = equivalence_test(sa, sb, args.eps, prof)
    return {
        "schema": SCHEMA,
        "command": "equiv",
        "seed": seed,
        "eps": args.eps,
        "accept": bool(verdict),
        "counters": {"A": read_counters(sa), "B": read_counters(sb)},
        "profile": prof.summary(),
    }


def cmd_bench_scaling(args):
    prof = _make_profile(args)
    seed = _resolve_seed(args)
    rows = []
    for log_n in args.sizes:
        n = 2**log_n
        k = max(0, log_n - args.support_log2)
        counts = []
        residues = []
        for t in range(args.trials):
            ss = np.random.SeedSequence([seed, log_n, t])
            d = gen_dk(n, k, ss.spawn(1)[0])
            session = OracleSession(d, ss.spawn(2)[1])
            x = int(d.support[0])
            _, stats = find_good_alpha_report(session, prof, x)
            counts.append(stats.comparator_calls)
            residues.append(stats.residue)
        counts.sort()
        med = counts[len(counts) // 2]
        med_res = sorted(residues)[len(residues) // 2]
        rows.append({
            "log2_n": log_n,
            "n": n,
            "median_comparator_calls": med,
            "median_residue": med_res,
            "formula_at_median_residue": comparator_calls_formula(n, med_res, prof),
        })
    return rows


def cmd_verify(args) -> dict:
    prof = _make_profile(args)
    seed = _resolve_seed(args)
    rng = np.random.default_rng(seed)
    worst = 0.0
    checks = 0
    for rep in range(args.corpus):
        w = rng.random(8) ** 2 + 1e-3
        d = Distribution(w)
        for x in range(1, d.n + 1):
            ctx = make_exact_context(d, x, prof)
            s, _, _ = exact_s_gamma_w(ctx)
            if s <= 0.0:
                continue
            for alpha in (0.1, 0.4, 0.7, 1.0):
                ratio = exact_expected_ratio(ctx, alpha)
                resid = abs(d.mass(x) - alpha * s / ratio) if ratio > 0 else float("inf")
                worst = max(worst, resid)
                checks += 1
    return {
        "schema": SCHEMA,
        "command": "verify",
        "seed": seed,
        "checks": checks,
        "worst_residual": worst,
        "pass": bool(worst < 1e-9),
        "profile": prof.summary(),
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="condest",
                                     description="conditional-sampling mass estimation")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, eps_default=0.2):
        p.add_argument("--eps", type=float, default=eps_default)
        p.add_argument("--c", type=float, default=0.05)
        p.add_argument("--profile", choices=PROFILE_NAMES, default="desk")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--eta", type=float, default=None)
        p.add_argument("--ell-mult", dest="ell_mult", type=float, default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("estimate", help="estimate the mass of one element")
    p.add_argument("--dist", required=True)
    p.add_argument("--x", type=int, required=True)
    p.add_argument("--json", action="store_true", help="canonical JSON output (default)")
    common(p)

    p = sub.add_parser("histogram", help="learn a histogram-equivalent distribution")
    p.add_argument("--dist", "--distA", dest="dist", required=True)
    common(p, eps_default=0.3)

    p = sub.add_parser("dtv", help="estimate total-variation distance")
    p.add_argument("--distA", dest="dist_a", required=True)
    p.add_argument("--distB", dest="dist_b", required=True)
    common(p, eps_default=0.3)

    p = sub.add_parser("equiv", help="test equivalence of two distributions")
    p.add_argument("--distA", dest="dist_a", required=True)
    p.add_argument("--distB", dest="dist_b", required=True)
    common(p, eps_default=0.5)

    p = sub.add_parser("bench-scaling", help="alpha-search cost over domain sizes")
    p.add_argument("--sizes", type=lambda s: [int(v) for v in s.split(",")],
                   default=[10, 14, 18, 22],
                   help="comma-separated log2 domain sizes")
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--support-log2", dest="support_log2", type=int, default=8)
    common(p)

    p = sub.add_parser("verify", help="exact oracle-identity residual check")
    p.add_argument("--corpus", type=int, default=4)
    common(p)

    return parser


def _rows_to_csv(rows) -> str:
    if not rows:
        return "\n"
    cols = list(rows[0].keys())
    lines = [",".join(cols)]
    for row in rows:
        lines.append(",".join(str(row[c]) for c in cols))
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code not in (0, None) else EXIT_OK
    started = time.monotonic()
    try:
        if args.command == "estimate":
            payload = cmd_estimate(args)
        elif args.command == "histogram":
            payload = cmd_histogram(args)
        elif args.command == "dtv":
            payload = cmd_dtv(args)
        elif args.command == "equiv":
            payload = cmd_equiv(args)
        elif args.command == "bench-scaling":
            rows = cmd_bench_scaling(args)
            if args.format == "csv":
                _emit(_rows_to_csv(rows), args.out)
            else:
                _emit(_canonical_json({"schema": SCHEMA, "command": "bench-scaling",
                                       "rows": rows}), args.out)
            print(f"wall_time_s={time.monotonic() - started:.3f}", file=sys.stderr)
            return EXIT_OK
        elif args.command == "verify":
            payload = cmd_verify(args)
        else:  # pragma: no cover
            raise ValidationError(f"unknown command {args.command!r}")
    except (ValidationError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if args.format == "csv":
        print("error: csv format is only for bench-scaling tables", file=sys.stderr)
        return EXIT_VALIDATION
    _emit(_canonical_json(payload), args.out)
    print(f"wall_time_s={time.monotonic() - started:.3f}", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
