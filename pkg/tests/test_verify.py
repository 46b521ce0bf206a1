"""The self-check suites pass, and actually catch injected breakage."""

import math

import pytest

from conformal_kit.calibration import p_hat, q_hat
from conformal_kit.verify import (
    SUITE_NAMES,
    equivalence_suite,
    run_suites,
)


@pytest.mark.parametrize("name", SUITE_NAMES)
def test_suite_passes(name):
    (result,) = run_suites([name])
    assert result.name == name
    assert result.passed, result.detail
    assert isinstance(result.detail, dict) and result.detail


def test_run_suites_unknown_name():
    with pytest.raises(ValueError):
        run_suites(["telepathy"])


def test_equivalence_catches_shifted_quantile():
    def off_by_one(scores, alpha):
        lam = q_hat(scores, alpha).lambda_hat
        if math.isinf(lam):
            return lam
        above = scores.values[scores.values > lam]
        return float(above[0]) if above.size else math.inf

    result = equivalence_suite(trials=60, seed=0, q_fn=off_by_one)
    assert not result.passed
    assert result.detail["crc_mismatches"] > 0


def test_equivalence_catches_inflated_tolerance():
    def doubled(scores, eps, delta):
        return p_hat(scores, min(0.99, 2 * eps), delta).lambda_hat

    result = equivalence_suite(trials=60, seed=0, p_fn=doubled)
    assert not result.passed
    assert result.detail["ucb_mismatches"] > 0


def test_trial_override_reaches_suites():
    (fast,) = run_suites(["duality"], trials=10)
    assert fast.detail["trials"] == 10
    (seeded,) = run_suites(["duality"], trials=10, seed=123)
    assert seeded.passed
