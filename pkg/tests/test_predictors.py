"""k-NN quantile intervals, conformalization scores, and level tuning."""

import math

import numpy as np
import pytest

from conformal_kit.calibration import Marginal, Tolerance
from conformal_kit.experiments import Dataset, gen_synthetic
from conformal_kit.predictors import (
    DEFAULT_LEVEL_GRID,
    IntervalPredictor,
    KnnQuantileConfig,
    PredictionInterval,
    cqr_score,
    cqr_set,
    fit_knn_quantile,
    tune_nominal_quantiles,
)


def test_config_validation():
    with pytest.raises(ValueError):
        KnnQuantileConfig(k=0)
    with pytest.raises(ValueError):
        KnnQuantileConfig(lo_level=0.9, hi_level=0.1)
    with pytest.raises(ValueError):
        KnnQuantileConfig(lo_level=0.0)
    with pytest.raises(ValueError):
        KnnQuantileConfig(hi_level=1.0)
    assert KnnQuantileConfig().k == 50


def test_default_level_grid():
    assert DEFAULT_LEVEL_GRID[0] == (0.025, 0.975)
    assert DEFAULT_LEVEL_GRID[-1] == (0.2, 0.8)
    assert len(DEFAULT_LEVEL_GRID) == 8


def test_knn_exact_order_statistics():
    # train size equals k: every query sees all labels
    labels = np.arange(1.0, 51.0)
    train = Dataset(np.linspace(0.0, 1.0, 50), labels)
    pred = fit_knn_quantile(train, KnnQuantileConfig(k=50, lo_level=0.1, hi_level=0.9))
    lo, hi = pred.predict(np.array([0.3]))
    # ceil(0.1 * 50) = 5 exactly; float fuzz must not push it to 6
    assert (lo, hi) == (5.0, 45.0)


def test_knn_nearest_neighbourhood():
    feats = np.array([0.0, 1.0, 2.0, 10.0, 11.0, 12.0])
    labels = np.array([5.0, 6.0, 7.0, 50.0, 60.0, 70.0])
    train = Dataset(feats, labels)
    pred = fit_knn_quantile(
        train, KnnQuantileConfig(k=3, lo_level=0.25, hi_level=0.75)
    )
    lo, hi = pred.predict(np.array([1.2]))
    assert (lo, hi) == (5.0, 7.0)
    lo, hi = pred.predict(np.array([11.4]))
    assert (lo, hi) == (50.0, 70.0)


def test_knn_single_neighbour():
    train = Dataset(np.array([0.0, 1.0, 2.0]), np.array([3.0, 4.0, 5.0]))
    pred = fit_knn_quantile(train, KnnQuantileConfig(k=1, lo_level=0.4, hi_level=0.6))
    assert pred.predict(np.array([0.9])) == (4.0, 4.0)


def test_knn_matrix_and_vector_shapes():
    rng = np.random.default_rng(101)
    train = Dataset(rng.normal(size=(80, 2)), rng.normal(size=80))
    pred = fit_knn_quantile(train, KnnQuantileConfig(k=10))
    lo, hi = pred.predict(rng.normal(size=(7, 2)))
    assert lo.shape == (7,) and hi.shape == (7,)
    assert np.all(lo <= hi)
    slo, shi = pred.predict(rng.normal(size=2))
    assert isinstance(slo, float) and isinstance(shi, float)


def test_knn_k_exceeds_train():
    train = Dataset(np.arange(5.0), np.arange(5.0))
    with pytest.raises(ValueError):
        fit_knn_quantile(train, KnnQuantileConfig(k=6))


def test_knn_endpoints_never_cross():
    rng = np.random.default_rng(103)
    train = Dataset(rng.normal(size=(200, 3)), rng.normal(size=200))
    for k, levels in [(5, (0.3, 0.7)), (60, (0.025, 0.975))]:
        pred = fit_knn_quantile(
            train, KnnQuantileConfig(k=k, lo_level=levels[0], hi_level=levels[1])
        )
        lo, hi = pred.predict(rng.normal(size=(50, 3)))
        assert np.all(lo <= hi)


def test_prediction_interval():
    iv = PredictionInterval(2.0, 5.0)
    assert not iv.empty
    assert iv.length == 3.0
    assert iv.contains(2.0) and iv.contains(5.0) and not iv.contains(5.1)
    hollow = PredictionInterval(3.0, 1.0)
    assert hollow.empty
    assert hollow.length == 0.0
    assert not hollow.contains(2.0)


def test_cqr_score_values():
    flat = IntervalPredictor(lambda x: (2.0, 5.0))
    assert cqr_score(flat, None, 7.0) == 2.0
    assert cqr_score(flat, None, 3.0) == -1.0
    assert cqr_score(flat, None, 2.0) == 0.0
    got = cqr_score(flat, None, np.array([1.0, 6.0]))
    assert np.array_equal(got, [1.0, 1.0])


def test_cqr_set_membership_equivalence():
    flat = IntervalPredictor(lambda x: (2.0, 5.0))
    assert cqr_set(flat, 0.0, None) == PredictionInterval(2.0, 5.0)
    assert cqr_set(flat, -2.0, None).empty
    assert cqr_set(flat, math.inf, None).contains(1e300)
    rng = np.random.default_rng(107)
    for _ in range(200):
        y = float(rng.normal(scale=4.0))
        lam = float(rng.normal())
        inside = cqr_set(flat, lam, None).contains(y)
        assert inside == (cqr_score(flat, None, y) <= lam)


def test_tune_selected_and_determinism():
    train = gen_synthetic(150, seed=11)
    cands = ((0.05, 0.95), (0.25, 0.75), (0.45, 0.55))
    rep1 = tune_nominal_quantiles(train, cands, Marginal(0.1), folds=5, k=10, seed=3)
    rep2 = tune_nominal_quantiles(train, cands, Marginal(0.1), folds=5, k=10, seed=3)
    assert rep1.selected in cands
    assert rep1.levels == cands
    assert np.array_equal(rep1.mean_lengths, rep2.mean_lengths)
    assert rep1.selected == rep2.selected
    assert rep1.mean_lengths[list(cands).index(rep1.selected)] == min(
        rep1.mean_lengths
    )


def test_tune_tolerance_target():
    train = gen_synthetic(200, seed=13)
    rep = tune_nominal_quantiles(
        train,
        ((0.05, 0.95), (0.1, 0.9)),
        Tolerance(0.2, 0.2),
        folds=4,
        k=15,
        seed=1,
    )
    assert rep.selected in ((0.05, 0.95), (0.1, 0.9))
    assert np.all(np.isfinite(rep.mean_lengths))


def test_tune_validation():
    train = gen_synthetic(60, seed=17)
    with pytest.raises(ValueError):
        tune_nominal_quantiles(train, (), folds=3, k=5)
    with pytest.raises(ValueError):
        tune_nominal_quantiles(train, ((0.05, 0.95),), folds=1, k=5)
    with pytest.raises(ValueError):
        tune_nominal_quantiles(train, ((0.05, 0.95),), folds=2, k=40)
