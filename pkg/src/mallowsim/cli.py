"""Command-line front door.

Each subcommand wraps one library operation and emits either a data
file (`sample`, `figure1 --format csv`) or a canonical JSON report.
Exit status is 0 when every assertion in the report passed, 1 when any
failed, and 2 for unusable inputs.  Wall time goes to stderr, never
into the report, and --threads only schedules work: rerunning with the
same seed gives byte-identical output at any thread count.
"""

from __future__ import annotations

import argparse
import struct
import sys
import time
from dataclasses import asdict
from pathlib import Path
from typing import Any

import numpy as np

from .coupling import exact_coupling_check, tail_check, variance_term
from .errors import (
    DomainError,
    ExcursionTooLong,
    NotABijection,
    PreconditionViolated,
    TooLargeForEnumeration,
)
from .exact_law import (
    ADJACENT_JOINT_BOUND,
    MallowsParams,
    adjacent_joint_sum,
    cov_bounds,
    enumerate_law,
    exact_moments,
    mean_two_sided,
    type_sum,
    type_sum_bound,
    var_descents,
)
from .experiments import (
    bivariate_experiment,
    clt_experiment,
    figure1,
    figure_csv,
    poisson_experiment,
    test_function,
)
from .regen import estimate_rho_excursion
from .reports import ExperimentReport
from .sampling import RngStream, sample_words, two_sided_samples

EXACT_TOL = 1e-12


def _floats(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _emit(data: str | bytes, out: str | None) -> None:
    if out is None:
        if isinstance(data, bytes):
            sys.stdout.buffer.write(data)
        else:
            sys.stdout.write(data)
    elif isinstance(data, bytes):
        Path(out).write_bytes(data)
    else:
        Path(out).write_text(data)


def _finish(report: ExperimentReport, out: str | None) -> int:
    _emit(report.to_json(), out)
    return 0 if report.all_passed else 1


def _cmd_sample(args) -> int:
    params = MallowsParams(args.n, args.q)
    stream = RngStream(args.seed, "sample")
    words = sample_words(params, args.count, stream, threads=args.threads)
    if args.format == "binary":
        head = struct.pack("<I", params.n)
        data = b"".join(head + row.astype("<u4").tobytes() for row in words)
        _emit(data, args.out)
    else:
        lines = [" ".join(str(v) for v in row) for row in words]
        _emit("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_moments(args) -> int:
    params = MallowsParams(args.n, args.q)
    bounds: dict[str, float] = {
        "mean_formula": mean_two_sided(params),
        "var_des_formula": var_descents(params),
    }
    passed: dict[str, bool] = {}
    if args.exact:
        summary = exact_moments(enumerate_law(params))
        results: dict[str, Any] = asdict(summary)
        passed["mean_matches_formula"] = (
            abs(summary.mean_two_sided - bounds["mean_formula"]) <= EXACT_TOL
        )
        passed["var_des_matches_formula"] = (
            abs(summary.var_des - bounds["var_des_formula"]) <= EXACT_TOL
        )
        if 0.0 < args.q < 1.0 and args.n >= 2:
            lo, hi = cov_bounds(params)
            bounds["cov_lower"] = lo
            bounds["cov_upper"] = hi
            passed["cov_within_bounds"] = lo - EXACT_TOL <= summary.cov_des_ides <= hi + EXACT_TOL
    else:
        stream = RngStream(args.seed, "moments")
        des, ides = two_sided_samples(params, args.reps, stream, threads=args.threads)
        x = (des + ides).astype(np.float64)
        d = des.astype(np.float64)
        mean = float(np.mean(x))
        se_mean = float(np.std(x, ddof=1) / np.sqrt(args.reps))
        var_d = float(np.var(d, ddof=1))
        centered = d - d.mean()
        se_var = float(np.sqrt(max(np.mean(centered**4) - var_d**2, 0.0) / args.reps))
        results = {
            "mean_two_sided": mean,
            "se_mean": se_mean,
            "var_des": var_d,
            "se_var_des": se_var,
            "cov_des_ides": float(np.cov(d, ides.astype(np.float64), ddof=1)[0, 1]),
            "var_two_sided": float(np.var(x, ddof=1)),
            "reps": args.reps,
        }
        passed["mean_within_4se"] = abs(mean - bounds["mean_formula"]) <= 4.0 * se_mean
        passed["var_des_within_4se"] = abs(var_d - bounds["var_des_formula"]) <= 4.0 * se_var
    report = ExperimentReport(
        command="moments",
        params={"n": args.n, "q": args.q, "exact": bool(args.exact)},
        seed=args.seed,
        results=results,
        bounds=bounds,
        passed=passed,
    )
    return _finish(report, args.out)


def _admissible_near_one(n: int, q: float) -> bool:
    return n >= 4 and 1.0 - 1.0 / np.sqrt(n - 1) <= q <= 1.0


def _cmd_typesums(args) -> int:
    params = MallowsParams(args.n, args.q)
    law = enumerate_law(params)
    results: dict[str, Any] = {}
    bounds: dict[str, float] = {}
    passed: dict[str, bool] = {}
    for kind in range(1, 7):
        value = type_sum(kind, law)
        limit = type_sum_bound(kind, args.n)
        results[f"type_{kind}"] = value
        bounds[f"bound_{kind}"] = limit
        if kind <= 4 or args.q <= 1.0:
            passed[f"type_{kind}_within_bound"] = value <= limit + EXACT_TOL
    adjacent = adjacent_joint_sum(law)
    results["adjacent_joint_sum"] = adjacent
    bounds["adjacent_bound"] = ADJACENT_JOINT_BOUND * (args.n - 1)
    if _admissible_near_one(args.n, args.q):
        passed["adjacent_within_bound"] = adjacent <= bounds["adjacent_bound"] + EXACT_TOL
    report = ExperimentReport(
        command="typesums",
        params={"n": args.n, "q": args.q},
        seed=args.seed,
        results=results,
        bounds=bounds,
        passed=passed,
    )
    return _finish(report, args.out)


def _cmd_sbcheck(args) -> int:
    params = MallowsParams(args.n, args.q)
    deviation = exact_coupling_check(enumerate_law(params))
    report = ExperimentReport(
        command="sbcheck",
        params={"n": args.n, "q": args.q},
        seed=args.seed,
        results={"max_deviation": deviation},
        bounds={"tolerance": EXACT_TOL},
        passed={"coupled_law_matches_size_bias": deviation <= EXACT_TOL},
    )
    return _finish(report, args.out)


def _cmd_vterm(args) -> int:
    stream = RngStream(args.seed, "vterm")
    res = variance_term(args.n, args.q, args.reps, stream, threads=args.threads)
    report = ExperimentReport(
        command="vterm",
        params={"n": args.n, "q": args.q, "reps": args.reps},
        seed=args.seed,
        results={"estimate": res.estimate},
        bounds={"variance_bound": res.bound},
        passed={"variance_within_bound": res.within_bound},
    )
    return _finish(report, args.out)


def _cmd_tails(args) -> int:
    stream = RngStream(args.seed, "tails")
    xs = _floats(args.xs)
    res = tail_check(args.n, args.q, args.reps, xs, stream, threads=args.threads)
    results: dict[str, Any] = {"points": []}
    bounds: dict[str, float] = {}
    passed: dict[str, bool] = {}
    for p in res.points:
        tag = f"x_{p.x:g}"
        results["points"].append(
            {
                "x": p.x,
                "upper_freq": p.upper_freq,
                "upper_se": p.upper_se,
                "lower_freq": p.lower_freq,
                "lower_se": p.lower_se,
            }
        )
        bounds[f"upper_{tag}"] = p.upper_bound
        bounds[f"lower_{tag}"] = p.lower_bound
        passed[f"upper_{tag}_ok"] = p.upper_ok
        passed[f"lower_{tag}_ok"] = p.lower_ok
    report = ExperimentReport(
        command="tails",
        params={"n": args.n, "q": args.q, "reps": args.reps, "xs": xs},
        seed=args.seed,
        results=results,
        bounds=bounds,
        passed=passed,
    )
    return _finish(report, args.out)


def _cmd_rho(args) -> int:
    stream = RngStream(args.seed, "rho")
    est = estimate_rho_excursion(
        args.q, args.excursions, stream, max_len=args.max_len, threads=args.threads
    )
    report = ExperimentReport(
        command="rho",
        params={"q": args.q, "excursions": args.excursions, "max_len": args.max_len},
        seed=args.seed,
        results={
            "q": est.q,
            "rho": est.rho,
            "se": est.se,
            "mean_T": est.mean_size,
            "n_excursions": est.count,
        },
        passed={"rho_in_range": -1.0 <= est.rho <= 1.0},
    )
    return _finish(report, args.out)


def _cmd_clt(args) -> int:
    stream = RngStream(args.seed, "clt")
    h = test_function(args.h)
    res = clt_experiment(args.n, args.q, args.reps, h, stream, threads=args.threads)
    report = ExperimentReport(
        command="clt",
        params={"n": args.n, "q": args.q, "reps": args.reps, "h": h.name},
        seed=args.seed,
        results={
            "observed_gap": res.observed_gap,
            "se": res.se,
            "ks_distance": res.ks,
        },
        bounds={"error_bound": res.bound},
        passed={"gap_within_bound": res.within_bound},
    )
    return _finish(report, args.out)


def _cmd_bivariate(args) -> int:
    stream = RngStream(args.seed, "bivariate")
    res = bivariate_experiment(
        args.n,
        args.q,
        args.reps,
        stream,
        threads=args.threads,
        excursions=args.excursions,
        max_len=args.max_len,
    )
    report = ExperimentReport(
        command="bivariate",
        params={"n": args.n, "q": args.q, "reps": args.reps},
        seed=args.seed,
        results={
            "sample_correlation": res.sample_correlation,
            "se_correlation": res.se_correlation,
            "rho_reference": res.rho_reference,
            "projection_ks": res.projection_ks,
        },
        passed={"correlation_in_range": abs(res.sample_correlation) <= 1.0},
    )
    return _finish(report, args.out)


def _cmd_poisson(args) -> int:
    stream = RngStream(args.seed, "poisson")
    res = poisson_experiment(args.n, args.q, args.reps, stream, threads=args.threads)
    report = ExperimentReport(
        command="poisson",
        params={"n": args.n, "q": args.q, "reps": args.reps},
        seed=args.seed,
        results={
            "lambda": res.lam,
            "empirical_tv": res.empirical_tv,
            "se_tv": res.se_tv,
            "even_frequency": res.even_frequency,
        },
        bounds={"tv_bound": res.bound, "even_lower_bound": res.even_bound},
        passed={"tv_within_bound": res.tv_ok, "even_frequency_ok": res.even_ok},
    )
    return _finish(report, args.out)


def _cmd_figure1(args) -> int:
    stream = RngStream(args.seed, "figure1")
    rows = figure1(
        _floats(args.grid),
        stream,
        n=args.n,
        reps=args.reps,
        excursion_reps=args.excursions,
        max_len=args.max_len,
        threads=args.threads,
    )
    if args.format == "csv":
        _emit(figure_csv(rows), args.out)
        return 0
    report = ExperimentReport(
        command="figure1",
        params={
            "grid": _floats(args.grid),
            "n": args.n,
            "reps": args.reps,
            "excursions": args.excursions,
        },
        seed=args.seed,
        results={"rows": [asdict(row) for row in rows]},
        passed={"all_rows_complete": all(not r.note for r in rows if r.q <= 0.8)},
    )
    return _finish(report, args.out)


HANDLERS = {
    "sample": _cmd_sample,
    "moments": _cmd_moments,
    "typesums": _cmd_typesums,
    "sbcheck": _cmd_sbcheck,
    "vterm": _cmd_vterm,
    "tails": _cmd_tails,
    "rho": _cmd_rho,
    "clt": _cmd_clt,
    "bivariate": _cmd_bivariate,
    "poisson": _cmd_poisson,
    "figure1": _cmd_figure1,
}

DEFAULT_GRID = "0.05,0.15,0.25,0.35,0.45,0.55,0.65,0.75,0.85,0.95"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mallowsim",
        description="Simulation and exact verification of descent statistics "
        "of Mallows-distributed permutations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name: str, help_text: str) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
        sp.add_argument("--out", default=None, help="output path (default stdout)")
        sp.add_argument("--threads", type=int, default=1, help="worker threads")
        return sp

    sp = command("sample", "draw permutations and print them")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--q", type=float, required=True)
    sp.add_argument("--count", type=int, default=1)
    sp.add_argument("--format", choices=["text", "binary"], default="text")

    sp = command("moments", "moments of the two-sided descent count")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--q", type=float, required=True)
    sp.add_argument("--reps", type=int, default=10**4)
    sp.add_argument("--exact", action="store_true", help="full enumeration (n <= 8)")

    sp = command("typesums", "exact covariance type sums against their bounds")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--q", type=float, required=True)

    sp = command("sbcheck", "exact size-bias coupling verification")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--q", type=float, required=True)

    sp = command("vterm", "Monte Carlo variance of the conditional move delta")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--q", type=float, required=True)
    sp.add_argument("--reps", type=int, default=10**4)

    sp = command("tails", "empirical tail frequencies against explicit bounds")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--q", type=float, required=True)
    sp.add_argument("--reps", type=int, default=10**4)
    sp.add_argument("--xs", default="10,20,40", help="comma list of offsets")

    sp = command("rho", "excursion estimate of the limiting descent correlation")
    sp.add_argument("--q", type=float, required=True)
    sp.add_argument("--excursions", type=int, default=10**4)
    sp.add_argument("--max-len", type=int, default=10**6, dest="max_len")

    sp = command("clt", "smooth-function CLT gap and Kolmogorov distance")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--q", type=float, required=True)
    sp.add_argument("--reps", type=int, default=10**4)
    sp.add_argument("--h", default="tanh", help="test function: tanh or cosine")

    sp = command("bivariate", "joint normality of the descent pair")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--q", type=float, required=True)
    sp.add_argument("--reps", type=int, default=10**4)
    sp.add_argument("--excursions", type=int, default=10**4)
    sp.add_argument("--max-len", type=int, default=10**6, dest="max_len")

    sp = command("poisson", "total-variation comparison with twice a Poisson")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--q", type=float, required=True)
    sp.add_argument("--reps", type=int, default=10**4)

    sp = command("figure1", "correlation versus q, finite-n and excursion estimates")
    sp.add_argument("--grid", default=DEFAULT_GRID, help="comma list of q values")
    sp.add_argument("--n", type=int, default=1000)
    sp.add_argument("--reps", type=int, default=1000)
    sp.add_argument("--excursions", type=int, default=10**4)
    sp.add_argument("--max-len", type=int, default=10**6, dest="max_len")
    sp.add_argument("--format", choices=["csv", "json"], default="csv")

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        return HANDLERS[args.command](args)
    except (
        DomainError,
        PreconditionViolated,
        TooLargeForEnumeration,
        ExcursionTooLong,
        NotABijection,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    finally:
        elapsed = (time.perf_counter() - start) * 1000.0
        print(f"runtime_ms={elapsed:.0f}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
