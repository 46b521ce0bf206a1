"""Self-check suites behind the ``verify`` subcommand.

Each suite re-derives one of the package's load-bearing claims at runtime
and returns a machine-readable verdict: the duality round trips between
marginal and tolerance levels, the exact agreement of the risk-control
routes with quantile calibration on 0-1 losses, the brute-force coverage
sandwich on tiny calibration sets, the order-statistic tail identity
between the two independent CDF implementations, the coverage-law KS
check on a seeded synthetic experiment, and p-value super-uniformity
with family-wise error control of the fixed-sequence procedure.

The randomized suites accept the calibrators as parameters so a test can
inject a deliberately broken one and confirm the suite catches it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._rational import snap_ceil
from .calibration import (
    NonconformityScores,
    Tolerance,
    alpha_given_tolerance,
    marginal_bounds,
    p_hat,
    q_hat,
    tolerance_delta_given_alpha,
    tolerance_eps_given_alpha,
)
from .dists import BetaParams, beta_reg, binom_cdf
from .experiments import gen_synthetic, reference_law, run_trials, summarize
from .nested import LambdaDomain
from .predictors import KnnQuantileConfig, fit_knn_quantile
from .risk import LossCurve, crc_lambda, ltt_fixed_sequence, ltt_pvalues, ucb_lambda

__all__ = [
    "SuiteResult",
    "SUITE_NAMES",
    "duality_suite",
    "equivalence_suite",
    "sandwich_suite",
    "identity_suite",
    "ks_suite",
    "superuniform_suite",
    "run_suites",
]


@dataclass(frozen=True)
class SuiteResult:
    """Verdict of one self-check suite plus its headline numbers."""

    name: str
    passed: bool
    detail: dict


def _default_q(scores: NonconformityScores, alpha) -> float:
    return q_hat(scores, alpha).lambda_hat


def _default_p(scores: NonconformityScores, eps: float, delta: float) -> float:
    return p_hat(scores, eps, delta).lambda_hat


def duality_suite(trials: int = 200, seed: int = 0) -> SuiteResult:
    """Round-trip the marginal/tolerance conversions on random settings.

    Checks, per draw of (n, alpha, eps, delta): the smallest achievable
    eps at (alpha, delta) indeed consumes at most delta; the dual alpha
    of a tolerance pair selects the same order-statistic index as the
    tolerance calibration itself, at both ends of its sharing interval;
    and the exact marginal coverage mean sits inside its stated bounds.
    """
    rng = np.random.default_rng(seed)
    failures = 0
    checked = 0
    for _ in range(trials):
        n = int(rng.integers(1, 400))
        alpha = float(rng.uniform(0.01, 0.6))
        eps = float(rng.uniform(0.01, 0.6))
        delta = float(rng.uniform(0.01, 0.6))
        checked += 1

        eps_min = tolerance_eps_given_alpha(n, alpha, delta)
        if 0.0 < eps_min < 1.0:
            if tolerance_delta_given_alpha(n, alpha, eps_min) > delta:
                failures += 1

        dual = alpha_given_tolerance(n, eps, delta)
        if not dual.full_set:
            k_star = int(dual.alpha * (n + 1) - 1)
            idx_tol = n - k_star
            lo = dual.alpha
            hi = Fraction(k_star + 2, n + 1)
            same = all(
                snap_ceil((1 - a) * (n + 1)) == idx_tol
                for a in (lo, (lo + hi) / 2)
            )
            if not same:
                failures += 1

        bounds = marginal_bounds(n, alpha)
        mean = float(bounds.exact_mean)
        if not (bounds.lo <= mean <= bounds.hi + 1e-15):
            failures += 1
    return SuiteResult(
        name="duality",
        passed=failures == 0,
        detail={"trials": checked, "failures": failures},
    )


def equivalence_suite(
    trials: int = 200,
    seed: int = 0,
    q_fn=None,
    p_fn=None,
    grid_sets: int = 5,
    grid_size: int = 10_000,
) -> SuiteResult:
    """Risk-control routes against quantile calibration on 0-1 losses.

    Draws random score sets (half of them rounded to force ties) and
    demands bitwise equality of crc with the marginal calibrator and of
    exact-binomial ucb with the tolerance calibrator.  Then, on a few
    continuous sets, checks that the smallest threshold kept by
    fixed-sequence testing sits within one grid step of the ucb choice.
    """
    q_fn = q_fn or _default_q
    p_fn = p_fn or _default_p
    rng = np.random.default_rng(seed)
    everywhere = LambdaDomain(-math.inf, math.inf)
    crc_bad = 0
    ucb_bad = 0
    for t in range(trials):
        n = int(rng.integers(1, 120))
        vals = rng.standard_normal(n)
        if t % 2:
            vals = np.round(vals, 1)
        scores = NonconformityScores(vals)
        curves = [LossCurve.zero_one(v) for v in vals]

        alpha = float(rng.uniform(0.02, 0.95))
        if crc_lambda(curves, 1.0, alpha, everywhere) != q_fn(scores, alpha):
            crc_bad += 1

        eps = float(rng.uniform(0.02, 0.6))
        delta = float(rng.uniform(0.02, 0.6))
        if ucb_lambda(curves, eps, delta) != p_fn(scores, eps, delta):
            ucb_bad += 1

    ltt_bad = 0
    max_gap = 0.0
    for g in range(grid_sets):
        vals = rng.standard_normal(40)
        curves = [LossCurve.zero_one(v) for v in vals]
        eps, delta = 0.2, 0.2
        lam_ucb = ucb_lambda(curves, eps, delta)
        grid = np.linspace(vals.min() - 0.5, vals.max() + 0.5, grid_size)
        step = float(grid[1] - grid[0])
        kept = ltt_fixed_sequence(ltt_pvalues(grid, curves, eps), delta)
        if math.isinf(lam_ucb):
            if kept:
                ltt_bad += 1
            continue
        if not kept:
            ltt_bad += 1
            continue
        gap = abs(min(kept) - lam_ucb)
        max_gap = max(max_gap, gap)
        if gap > step:
            ltt_bad += 1

    failures = crc_bad + ucb_bad + ltt_bad
    return SuiteResult(
        name="equivalence",
        passed=failures == 0,
        detail={
            "trials": trials,
            "crc_mismatches": crc_bad,
            "ucb_mismatches": ucb_bad,
            "ltt_gap_violations": ltt_bad,
            "ltt_max_gap": max_gap,
        },
    )


def sandwich_suite() -> SuiteResult:
    """Exact marginal coverage bracket by exhaustive rank enumeration.

    For tiny n, every placement of the test point among n + 1 distinct
    values is equally likely, so exact coverage is a rational count.  It
    must land in [1 - alpha, 1 - alpha + 1/(n+1)] with no float slack.
    """
    violations = []
    for n in range(2, 7):
        base = np.arange(1.0, n + 2.0)
        for alpha in (Fraction(1, 10), Fraction(2, 10), Fraction(3, 10)):
            covered = 0
            for t in range(n + 1):
                cal = np.delete(base, t)
                lam = q_hat(NonconformityScores(cal), alpha).lambda_hat
                covered += base[t] <= lam
            cov = Fraction(covered, n + 1)
            lo = 1 - alpha
            hi = 1 - alpha + Fraction(1, n + 1)
            if not (lo <= cov <= hi):
                violations.append((n, float(alpha), float(cov)))
    return SuiteResult(
        name="sandwich",
        passed=not violations,
        detail={"cases": 15, "violations": violations},
    )


def identity_suite(tol: float = 1e-10) -> SuiteResult:
    """Beta tail versus binomial tail through two independent routes.

    Beta(1 - p; m + 1 - k, k) = Bin(k - 1; m, p) on a (k, m, p) grid; the
    left side goes through the regularized incomplete beta function, the
    right through the ratio-recurrence binomial CDF, so agreement checks
    both implementations at once.
    """
    worst = 0.0
    for k in range(1, 11):
        for m in range(10, 101, 10):
            for p10 in range(1, 10):
                p = p10 / 10.0
                left = beta_reg(1.0 - p, BetaParams(m + 1 - k, k))
                right = binom_cdf(k - 1, m, p)
                worst = max(worst, abs(left - right))
    return SuiteResult(
        name="identity",
        passed=worst < tol,
        detail={"grid": "10x10x9", "max_abs_diff": worst, "tolerance": tol},
    )


def ks_suite(trials: int = 200, seed: int = 7) -> SuiteResult:
    """Coverage-law agreement on a seeded synthetic experiment.

    Runs a reduced tolerance-calibration experiment and compares the
    empirical law of the trial coverages with its beta-binomial
    reference: the KS distance and the one-sided excess of the empirical
    CDF must stay below the 5% critical value 1.36 / sqrt(trials).
    """
    n, n_test = 500, 800
    target = Tolerance(0.1, 0.1)
    root = np.random.SeedSequence(seed)
    train_seed, pool_seed = (int(s.generate_state(1)[0]) for s in root.spawn(2))
    train = gen_synthetic(400, train_seed)
    pool = gen_synthetic(n + n_test, pool_seed)
    base = fit_knn_quantile(train, KnnQuantileConfig())
    reports = run_trials(base, pool, n, n_test, trials, target, master_seed=seed)
    summary = summarize(
        reports, reference_law(n, target), eps=0.1, delta=0.1, n_test=n_test
    )
    threshold = 1.36 / math.sqrt(trials)
    passed = summary.ks_distance < threshold and summary.dominance_gap < threshold
    return SuiteResult(
        name="ks",
        passed=passed,
        detail={
            "trials": trials,
            "ks_distance": summary.ks_distance,
            "dominance_gap": summary.dominance_gap,
            "threshold": threshold,
        },
    )


def superuniform_suite(trials: int = 2000, seed: int = 0) -> SuiteResult:
    """P-value super-uniformity and fixed-sequence FWER at the null.

    Simulates boundary-null worlds (losses exactly at risk eps) and
    checks P[p <= u] <= u plus Monte Carlo slack on a u-grid; then builds
    staircase loss worlds whose risk exceeds eps strictly below the top
    threshold and confirms the fixed-sequence walk selects a harmful
    threshold in at most a delta + slack fraction of worlds.
    """
    eps, delta, n = 0.1, 0.1, 60
    rng = np.random.default_rng(seed)

    counts = rng.binomial(n, eps, size=trials)
    pvals = np.array([binom_cdf(c, n, eps) for c in np.sort(np.unique(counts))])
    pmap = dict(zip(np.sort(np.unique(counts)), pvals))
    sample = np.array([pmap[c] for c in counts])
    grid_u = np.arange(0.01, 1.0, 0.01)
    slack_u = 3.0 * np.sqrt(grid_u * (1.0 - grid_u) / trials)
    emp = (sample[:, None] <= grid_u[None, :]).mean(axis=0)
    u_excess = float(np.max(emp - (grid_u + slack_u)))

    lam_grid = np.arange(1.0, 6.0)
    risks = eps + 0.05 * (len(lam_grid) - 1 - np.arange(len(lam_grid)))
    false_hits = 0
    for _ in range(trials):
        u = rng.uniform(size=n)

        def curve(ui: float) -> LossCurve:
            def ev(lam: float, _u=ui) -> float:
                j = int(np.searchsorted(lam_grid, lam, side="right")) - 1
                j = min(max(j, 0), len(lam_grid) - 1)
                return 1.0 if _u < risks[j] else 0.0

            return LossCurve(eval=ev, bound=1.0, breakpoints=tuple(lam_grid))

        curves = [curve(float(ui)) for ui in u]
        kept = ltt_fixed_sequence(ltt_pvalues(lam_grid, curves, eps), delta)
        if any(risks[int(np.searchsorted(lam_grid, k))] > eps for k in kept):
            false_hits += 1
    fwer = false_hits / trials
    fwer_bound = delta + 3.0 * math.sqrt(delta * (1.0 - delta) / trials)

    passed = u_excess <= 0.0 and fwer <= fwer_bound
    return SuiteResult(
        name="superuniform",
        passed=passed,
        detail={
            "worlds": trials,
            "max_uniformity_excess": u_excess,
            "fwer": fwer,
            "fwer_bound": fwer_bound,
        },
    )


SUITE_NAMES = (
    "duality",
    "equivalence",
    "sandwich",
    "identity",
    "ks",
    "superuniform",
)


def run_suites(
    names=SUITE_NAMES, trials: int | None = None, seed: int | None = None
) -> list[SuiteResult]:
    """Run the named suites with optional trial-count and seed overrides."""
    results = []
    for name in names:
        if name == "duality":
            kwargs = {}
            if trials is not None:
                kwargs["trials"] = trials
            if seed is not None:
                kwargs["seed"] = seed
            results.append(duality_suite(**kwargs))
        elif name == "equivalence":
            kwargs = {}
            if trials is not None:
                kwargs["trials"] = trials
            if seed is not None:
                kwargs["seed"] = seed
            results.append(equivalence_suite(**kwargs))
        elif name == "sandwich":
            results.append(sandwich_suite())
        elif name == "identity":
            results.append(identity_suite())
        elif name == "ks":
            kwargs = {}
            if trials is not None:
                kwargs["trials"] = trials
            if seed is not None:
                kwargs["seed"] = seed
            results.append(ks_suite(**kwargs))
        elif name == "superuniform":
            kwargs = {}
            if trials is not None:
                kwargs["trials"] = trials
            if seed is not None:
                kwargs["seed"] = seed
            results.append(superuniform_suite(**kwargs))
        else:
            raise ValueError(f"unknown suite {name!r}")
    return results
