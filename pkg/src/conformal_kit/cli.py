"""Command line entry point.

Four subcommands: ``calibrate`` turns a file of nonconformity scores into
a threshold with its guarantee metadata, via the quantile, crc, ucb or
ltt route; ``tables`` prints the exceedance-count and smallest-eps lookup
tables; ``experiment`` runs the repeated-split coverage experiment on
synthetic or CSV data; ``verify`` runs the self-check suites.

All output is JSON (or aligned text for tables) on stdout, deterministic
for fixed flags and seed.  Infinities are serialized as the strings
"inf"/"-inf" since JSON has no literal for them, and exact rationals as
{"fraction": "88/1001", "value": 0.0879...} pairs.  Exit codes: 0 on
success, 2 on a domain error (invalid level, empty scores, degenerate
configuration), 1 on an I/O or parse failure; ``verify`` exits 1 when a
suite fails.

The seed comes from --seed, else the CONFORMAL_KIT_SEED environment
variable, else a fixed default.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from ._rational import as_fraction, snap_floor
from .calibration import (
    DualAlpha,
    DualTolerance,
    Marginal,
    NonconformityScores,
    Tolerance,
    alpha_given_tolerance,
    marginal_bounds,
    p_hat,
    q_hat,
    tolerance_delta_given_alpha,
    tolerance_eps_given_alpha,
)
from .dists import BetaParams, binom_sup_k
from .experiments import (
    DEFAULT_SEED,
    Dataset,
    ParseError,
    gen_synthetic,
    load_csv,
    reference_law,
    run_trials,
    standardize,
    summarize,
    tolerance_tables,
)
from .nested import LambdaDomain
from .predictors import KnnQuantileConfig, fit_knn_quantile, tune_nominal_quantiles
from .risk import LossCurve, crc_lambda, ltt_fixed_sequence, ltt_pvalues, ucb_lambda
from .verify import SUITE_NAMES, run_suites

_EVERYWHERE = LambdaDomain(-math.inf, math.inf)


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return _num(float(obj))
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Fraction):
        return _frac(obj)
    raise TypeError(f"not JSON serializable: {obj!r}")


def _dumps(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, default=_json_default)


def _num(x: float):
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _frac(fr: Fraction) -> dict:
    return {"fraction": f"{fr.numerator}/{fr.denominator}", "value": float(fr)}


def _law_json(law: BetaParams | None):
    return None if law is None else {"a": law.a, "b": law.b}


def _dual_json(dual):
    if isinstance(dual, DualAlpha):
        return {
            "alpha": _frac(dual.alpha),
            "interval": [_frac(dual.interval[0]), _frac(dual.interval[1])],
        }
    if isinstance(dual, DualTolerance):
        return {"delta_min": dual.delta_min, "eps_min": dual.eps_min}
    raise TypeError(f"unknown dual {dual!r}")


def _bounds_json(b) -> dict:
    return {"lo": b.lo, "hi": b.hi, "exact_mean": _frac(b.exact_mean)}


def _resolve_seed(explicit: int | None) -> int:
    if explicit is not None:
        return explicit
    env = os.environ.get("CONFORMAL_KIT_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ValueError(
                f"CONFORMAL_KIT_SEED must be an integer, got {env!r}"
            ) from None
    return DEFAULT_SEED


def _read_scores(path) -> np.ndarray:
    """Whitespace-separated floats; parse failures carry the bad token."""
    with open(path) as fh:
        tokens = fh.read().split()
    values = []
    for tok in tokens:
        try:
            values.append(float(tok))
        except ValueError:
            raise ParseError(f"{path}: non-numeric score {tok!r}") from None
    return np.asarray(values)


def _marginal_annotation(n: int, alpha, eps, delta) -> dict:
    idx = n + 1 - snap_floor(as_fraction(alpha) * (n + 1))
    full = idx > n
    law = None if full else BetaParams(idx, n + 1 - idx)
    dual = {
        "delta_min": None
        if eps is None
        else tolerance_delta_given_alpha(n, alpha, eps),
        "eps_min": None
        if delta is None
        else tolerance_eps_given_alpha(n, alpha, delta),
    }
    return {
        "order_index": idx,
        "full_set": full,
        "law": _law_json(law),
        "dual": dual,
        "marginal_bounds": _bounds_json(marginal_bounds(n, alpha)),
    }


def _tolerance_annotation(n: int, eps: float, delta: float) -> dict:
    sup = binom_sup_k(n, eps, delta)
    dual = alpha_given_tolerance(n, eps, delta)
    if sup.infeasible:
        idx = n + 1
        law = None
        interval = [Fraction(0), Fraction(1, n + 1)]
    else:
        idx = n - sup.value
        law = BetaParams(idx, n + 1 - idx)
        interval = [dual.alpha, Fraction(sup.value + 2, n + 1)]
    return {
        "order_index": idx,
        "full_set": idx > n,
        "law": _law_json(law),
        "dual": {"alpha": _frac(dual.alpha), "interval": [_frac(f) for f in interval]},
        "marginal_bounds": _bounds_json(marginal_bounds(n, dual.alpha)),
    }


def _check_levels(args) -> None:
    for name in ("alpha", "eps", "delta"):
        value = getattr(args, name, None)
        if value is not None and not 0.0 < value < 1.0:
            raise ValueError(f"--{name} must be in (0, 1), got {value}")


def cmd_calibrate(args) -> int:
    _check_levels(args)
    scores = NonconformityScores(_read_scores(args.scores))
    n = scores.n
    have_tol = args.eps is not None and args.delta is not None
    if (args.eps is None) != (args.delta is None):
        raise ValueError("--eps and --delta must be given together")

    method = args.method
    if method in ("split", "crc"):
        if args.alpha is not None:
            guarantee = {"kind": "marginal", "alpha": args.alpha}
            meta = _marginal_annotation(n, args.alpha, args.eps, args.delta)
            if method == "split":
                res = q_hat(scores, args.alpha, eps=args.eps, delta=args.delta)
                lam, idx = res.lambda_hat, res.order_index
            else:
                curves = [LossCurve.zero_one(v) for v in scores.values]
                lam = crc_lambda(curves, 1.0, args.alpha, _EVERYWHERE)
                idx = n - snap_floor(as_fraction(args.alpha) * (n + 1) - 1)
        elif have_tol:
            if method == "crc":
                raise ValueError("--method crc requires --alpha (0-1 loss risk)")
            guarantee = {"kind": "tolerance", "eps": args.eps, "delta": args.delta}
            meta = _tolerance_annotation(n, args.eps, args.delta)
            res = p_hat(scores, args.eps, args.delta)
            lam, idx = res.lambda_hat, res.order_index
        else:
            raise ValueError("need --alpha, or --eps with --delta")
    elif method in ("ucb", "ltt"):
        if not have_tol:
            raise ValueError(f"--method {method} requires --eps and --delta")
        if args.alpha is not None:
            raise ValueError(f"--method {method} takes no --alpha")
        guarantee = {"kind": "tolerance", "eps": args.eps, "delta": args.delta}
        meta = _tolerance_annotation(n, args.eps, args.delta)
        curves = [LossCurve.zero_one(v) for v in scores.values]
        if method == "ucb":
            lam = ucb_lambda(curves, args.eps, args.delta)
        else:
            grid = np.unique(scores.values)
            kept = ltt_fixed_sequence(
                ltt_pvalues(grid, curves, args.eps), args.delta
            )
            lam = float(min(kept)) if kept else math.inf
        idx = (
            n + 1
            if math.isinf(lam)
            else int(np.searchsorted(scores.values, lam, side="right"))
        )
    else:  # pragma: no cover - argparse restricts choices
        raise ValueError(f"unknown method {method!r}")

    payload = {
        "method": method,
        "n": n,
        "guarantee": guarantee,
        "lambda_hat": _num(lam),
        "order_index": idx,
        **meta,
    }
    print(_dumps(payload))
    return 0


def cmd_tables(args) -> int:
    counts, eps_table = tolerance_tables(tuple(args.n), tuple(args.levels))
    sys.stdout.write(counts)
    sys.stdout.write("\n")
    sys.stdout.write(eps_table)
    return 0


def _experiment_data(args, seed: int):
    """Build (train, pool, n, n_test, source) for the experiment."""
    root = np.random.SeedSequence(seed)
    train_seq, pool_seq = root.spawn(2)
    if args.data is None:
        n = args.n if args.n is not None else 1000
        n_test = args.n_test if args.n_test is not None else 5000
        train = gen_synthetic(1000, int(train_seq.generate_state(1)[0]))
        pool = gen_synthetic(n + n_test, int(pool_seq.generate_state(1)[0]))
        return train, pool, n, n_test, "synthetic"
    ds = load_csv(args.data, args.label_col)
    total = ds.size
    n_train = round(0.4 * total)
    n = args.n if args.n is not None else round(0.4 * total)
    n_test = args.n_test if args.n_test is not None else total - n_train - n
    if n_train < 1 or n < 1 or n_test < 1:
        raise ValueError("dataset too small for a 40/40/20 split")
    if n_train + n + n_test > total:
        raise ValueError(
            f"{total} rows cannot supply train {n_train} + calibration {n}"
            f" + test {n_test}"
        )
    perm = np.random.default_rng(train_seq).permutation(total)
    train = Dataset(ds.features[perm[:n_train]], ds.labels[perm[:n_train]])
    rest = Dataset(ds.features[perm[n_train:]], ds.labels[perm[n_train:]])
    train, rest, _ = standardize(train, rest)
    return train, rest, n, n_test, str(args.data)


def cmd_experiment(args) -> int:
    _check_levels(args)
    seed = _resolve_seed(args.seed)
    eps = args.eps if args.eps is not None else 0.1
    delta = args.delta if args.delta is not None else 0.1
    if args.alpha is not None:
        target = Marginal(args.alpha)
        guarantee = {"kind": "marginal", "alpha": args.alpha}
    else:
        target = Tolerance(eps, delta)
        guarantee = {"kind": "tolerance", "eps": eps, "delta": delta}

    train, pool, n, n_test, source = _experiment_data(args, seed)
    report = tune_nominal_quantiles(train, target=target, k=args.k_neighbors, seed=seed)
    lo_level, hi_level = report.selected
    base = fit_knn_quantile(
        train, KnnQuantileConfig(args.k_neighbors, lo_level, hi_level)
    )
    law = reference_law(n, target)
    reports = run_trials(
        base, pool, n, n_test, args.trials, target, master_seed=seed,
        workers=args.workers,
    )
    summary = summarize(reports, law, eps=eps, delta=delta, n_test=n_test)

    payload = {
        "source": source,
        "guarantee": guarantee,
        "n": n,
        "n_test": n_test,
        "trials": args.trials,
        "seed": seed,
        "base": {
            "k": args.k_neighbors,
            "lo_level": lo_level,
            "hi_level": hi_level,
        },
        "law": {"a": law.a, "b": law.b},
        "c_bar": summary.c_bar,
        "delta_hat": summary.delta_hat,
        "delta_bar": summary.delta_bar,
        "mean_length": _num(summary.mean_length),
        "ks_distance": summary.ks_distance,
        "dominance_gap": summary.dominance_gap,
    }

    if args.format == "json":
        print(_dumps(payload))
    else:
        flat = dict(payload)
        flat["guarantee"] = ";".join(f"{k}={v}" for k, v in guarantee.items())
        flat["base"] = f"k={args.k_neighbors};lo={lo_level};hi={hi_level}"
        flat["law"] = f"a={law.a};b={law.b}"
        print("key,value")
        for key in sorted(flat):
            print(f"{key},{flat[key]}")

    if args.out is not None:
        _write_artifacts(Path(args.out), payload, reports, summary)
    return 0


def _write_artifacts(out: Path, payload, reports, summary) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.json").write_text(_dumps(payload) + "\n")
    with open(out / "trials.csv", "w") as fh:
        fh.write("trial_index,lambda_hat,coverage,avg_length\n")
        for r in reports:
            fh.write(
                f"{r.trial_index},{_num(r.lambda_hat)},{r.coverage!r},"
                f"{r.avg_length!r}\n"
            )
    with open(out / "histogram.csv", "w") as fh:
        fh.write("bin_lo,bin_hi,count\n")
        h = summary.histogram
        for lo, hi, c in zip(h.edges[:-1], h.edges[1:], h.counts):
            fh.write(f"{float(lo)!r},{float(hi)!r},{int(c)}\n")
    with open(out / "ecdf.csv", "w") as fh:
        fh.write("coverage,empirical_cdf,betabin_cdf,beta_cdf\n")
        t = summary.theoretical
        R = len(reports)
        counts = np.rint([r.coverage * r.n_test for r in reports]).astype(int)
        ecdf = np.cumsum(np.bincount(counts, minlength=t.coverage.size)) / R
        for cov, e, bb, b in zip(t.coverage, ecdf, t.betabin_cdf, t.beta_cdf):
            fh.write(f"{float(cov)!r},{float(e)!r},{float(bb)!r},{float(b)!r}\n")


def cmd_verify(args) -> int:
    names = SUITE_NAMES if args.suite == "all" else (args.suite,)
    seed = args.seed
    if seed is None and "CONFORMAL_KIT_SEED" in os.environ:
        seed = _resolve_seed(None)
    results = run_suites(names, trials=args.trials, seed=seed)
    payload = {
        "all_passed": all(r.passed for r in results),
        "suites": [
            {"name": r.name, "passed": r.passed, "detail": r.detail}
            for r in results
        ],
    }
    print(_dumps(payload))
    return 0 if payload["all_passed"] else 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conformal-kit",
        description=(
            "Split conformal calibration, tolerance regions and"
            " distribution-free risk control."
        ),
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    cal = sub.add_parser(
        "calibrate", help="calibrate a threshold from a file of scores"
    )
    cal.add_argument("--scores", required=True, help="whitespace-separated scores")
    cal.add_argument("--alpha", type=float, help="marginal miscoverage level")
    cal.add_argument("--eps", type=float, help="tolerance miscoverage level")
    cal.add_argument("--delta", type=float, help="tolerance failure probability")
    cal.add_argument(
        "--method",
        choices=("split", "crc", "ucb", "ltt"),
        default="split",
        help="calibration route (all agree on 0-1 loss)",
    )
    cal.set_defaults(handler=cmd_calibrate)

    tab = sub.add_parser("tables", help="print the two calibration lookup tables")
    tab.add_argument(
        "--n", type=int, nargs="+", default=[100, 1000, 10000, 100000],
        help="calibration sizes, one table block each",
    )
    tab.add_argument(
        "--levels", type=float, nargs="+",
        default=[0.1, 0.05, 0.01, 0.005, 0.001],
        help="levels used for rows (delta) and columns (eps or alpha)",
    )
    tab.set_defaults(handler=cmd_tables)

    exp = sub.add_parser(
        "experiment", help="repeated-split coverage experiment"
    )
    exp.add_argument("--data", help="CSV dataset; omit for synthetic data")
    exp.add_argument("--label-col", default="label", help="label column name")
    exp.add_argument("--n", type=int, help="calibration size per trial")
    exp.add_argument("--n-test", type=int, help="test size per trial")
    exp.add_argument("--trials", type=int, default=1000, help="number of trials")
    exp.add_argument("--seed", type=int, help="master seed")
    exp.add_argument(
        "--k-neighbors", type=int, default=50, help="k for the base predictor"
    )
    exp.add_argument("--alpha", type=float, help="calibrate marginally instead")
    exp.add_argument("--eps", type=float, help="tolerance miscoverage (default 0.1)")
    exp.add_argument(
        "--delta", type=float, help="tolerance failure probability (default 0.1)"
    )
    exp.add_argument("--workers", type=int, help="process count for trials")
    exp.add_argument("--out", help="directory for summary, trial and ecdf files")
    exp.add_argument("--format", choices=("json", "csv"), default="json")
    exp.set_defaults(handler=cmd_experiment)

    ver = sub.add_parser("verify", help="run the self-check suites")
    ver.add_argument(
        "--suite", choices=("all",) + SUITE_NAMES, default="all",
        help="which suite to run",
    )
    ver.add_argument("--trials", type=int, help="override suite trial counts")
    ver.add_argument("--seed", type=int, help="override suite seeds")
    ver.set_defaults(handler=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
