"""Watch the coverage law emerge from repeated calibrations.

With continuous scores the conditional coverage of the calibrated set is
Beta(i, n + 1 - i), i the selected order index, and empirical coverage on
a finite test set follows the matching beta-binomial.  The script redraws
the calibration set many times and prints the empirical law of the test
coverage next to the theoretical one.
"""

import numpy as np

from conformal_kit import (
    BetaBinParams,
    BetaParams,
    NonconformityScores,
    betabin_pmf,
    q_hat,
)


def main():
    rng = np.random.default_rng(5)
    n, n_test, trials, alpha = 200, 400, 4000, 0.15

    idx = None
    covered_counts = []
    for _ in range(trials):
        lam = q_hat(NonconformityScores(rng.uniform(size=n)), alpha)
        idx = lam.order_index
        covered_counts.append(int(np.sum(rng.uniform(size=n_test) <= lam.lambda_hat)))
    counts = np.array(covered_counts)

    law = BetaParams(idx, n + 1 - idx)
    print(f"n = {n}, alpha = {alpha}: order index {idx}, law Beta({law.a}, {law.b})")
    print(f"mean test coverage over {trials} redraws: {counts.mean() / n_test:.4f}")
    print(f"theoretical mean:                         {idx / (n + 1):.4f}")

    pmf = betabin_pmf(BetaBinParams(n_test, law.a, law.b))
    ref_cdf = np.cumsum(pmf)
    ecdf = np.cumsum(np.bincount(counts, minlength=n_test + 1)) / trials
    ks = float(np.max(np.abs(ecdf - ref_cdf)))
    print(f"KS distance to BetaBin({n_test}, {law.a}, {law.b}): {ks:.4f}")

    print("\ncoverage histogram (empirical | theoretical)")
    lo, hi = np.quantile(counts, [0.005, 0.995]).astype(int)
    edges = np.linspace(lo, hi + 1, 9).astype(int)
    for a, b in zip(edges[:-1], edges[1:]):
        emp = np.mean((counts >= a) & (counts < b))
        theo = float(pmf[a:b].sum())
        bar = "#" * round(60 * emp)
        print(f"  [{a / n_test:.3f}, {b / n_test:.3f})  {emp:6.3f} | {theo:6.3f}  {bar}")


if __name__ == "__main__":
    main()
