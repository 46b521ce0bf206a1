"""End-to-end conformalized quantile regression on synthetic data.

Fits k-NN conditional quantiles on a proper training set (nominal levels
picked by cross-validated calibrated length), then repeatedly resplits a
held-out pool into calibration and test parts to estimate the coverage
law of the tolerance calibration.  A reduced-size version of the full
experiment; the command line runs the full one:

    conformal-kit experiment --trials 1000
"""

import numpy as np

from conformal_kit import (
    KnnQuantileConfig,
    Tolerance,
    fit_knn_quantile,
    gen_synthetic,
    reference_law,
    run_trials,
    summarize,
    tune_nominal_quantiles,
)


def main():
    seed = 7
    n, n_test, trials = 500, 1000, 200
    target = Tolerance(0.1, 0.1)

    train = gen_synthetic(1000, seed=seed)
    pool = gen_synthetic(n + n_test, seed=seed + 1)

    tuned = tune_nominal_quantiles(train, target=target, k=50, seed=seed)
    lo, hi = tuned.selected
    print(f"tuned nominal levels: ({lo}, {hi})")
    for cand, length in zip(tuned.levels, tuned.mean_lengths):
        mark = " <-" if cand == tuned.selected else ""
        print(f"  {cand}: mean calibrated length {length:.3f}{mark}")

    base = fit_knn_quantile(train, KnnQuantileConfig(50, lo, hi))
    law = reference_law(n, target)
    reports = run_trials(base, pool, n, n_test, trials, target, master_seed=seed)
    s = summarize(reports, law, eps=0.1, delta=0.1, n_test=n_test)

    print(f"\n{trials} resplits at n = {n}, n_test = {n_test}")
    print(f"  coverage law        Beta({law.a}, {law.b})")
    print(f"  mean coverage       {s.c_bar:.4f}")
    print(f"  delta_hat           {s.delta_hat:.4f}")
    print(f"  delta_bar           {s.delta_bar:.4f}  (target delta = 0.1)")
    print(f"  mean interval length {s.mean_length:.3f}")
    print(f"  KS to BetaBin       {s.ks_distance:.4f}")
    print(f"  dominance gap       {s.dominance_gap:.4f}")


if __name__ == "__main__":
    main()
