"""Split conformal calibrators and their finite-sample coverage laws.

Two ways of choosing the threshold from calibration scores live here.  The
marginal calibrator ``q_hat`` picks the ceil((1 - alpha) (n + 1))-th
smallest score and controls coverage on average over everything.  The
tolerance calibrator ``p_hat`` inverts a binomial tail so that, with
probability 1 - delta over the calibration draw, the resulting set covers
at least 1 - eps of future points.  The two are linked by an exact duality:
every tolerance pair (eps, delta) maps to the marginal level alpha =
(k* + 1)/(n + 1), and both calibrators then select the same order
statistic.

Index arithmetic runs on exact rationals.  The guarantees hinge on
half-open level intervals of width 1/(n + 1), and a float alpha sitting one
ulp off a grid point would silently shift the selected rank.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._rational import as_fraction, snap_ceil, snap_floor
from .dists import (
    BetaParams,
    _check_prob,
    _check_trials,
    binom_cdf,
    binom_inf_p,
    binom_sup_k,
    beta_reg,
)

__all__ = [
    "NonconformityScores",
    "Marginal",
    "Tolerance",
    "MarginalBounds",
    "DualAlpha",
    "DualTolerance",
    "AlphaFromTolerance",
    "CalibrationResult",
    "q_hat",
    "p_hat",
    "calibrate",
    "tolerance_delta_given_alpha",
    "tolerance_eps_given_alpha",
    "alpha_given_tolerance",
    "marginal_bounds",
    "wilks_interval_law",
    "wilks_is_tolerance",
]


class NonconformityScores:
    """Calibration scores, sorted ascending, with sentinel order statistics.

    The virtual extremes r_(0) = -inf and r_(n+1) = +inf make every rank
    formula total: rank n + 1 selects the full label space.

    Parameters
    ----------
    values : array_like
        Scores r_i = r(X_i, Y_i) of the calibration pairs, in any order.

    Examples
    --------
    >>> s = NonconformityScores([3.0, 1.0, 2.0])
    >>> s.n
    3
    >>> s.order_stat(2)
    2.0
    >>> s.order_stat(4)
    inf
    """

    def __init__(self, values):
        arr = np.sort(np.asarray(values, dtype=float).ravel())
        if arr.size == 0:
            raise ValueError("need at least one calibration score")
        if np.isnan(arr).any():
            raise ValueError("scores must not contain NaN")
        self.values = arr

    @property
    def n(self) -> int:
        return int(self.values.size)

    def order_stat(self, i: int) -> float:
        """The i-th smallest score, i in {0, ..., n + 1} with sentinels."""
        if not 0 <= i <= self.n + 1:
            raise IndexError(f"order statistic index {i} outside 0..{self.n + 1}")
        if i == 0:
            return -math.inf
        if i == self.n + 1:
            return math.inf
        return float(self.values[i - 1])


@dataclass(frozen=True)
class Marginal:
    """Target: coverage at least 1 - alpha on average."""

    alpha: float

    def __post_init__(self):
        _check_prob("alpha", float(self.alpha), open_interval=True)


@dataclass(frozen=True)
class Tolerance:
    """Target: cover 1 - eps of the population with probability 1 - delta."""

    eps: float
    delta: float

    def __post_init__(self):
        _check_prob("eps", float(self.eps), open_interval=True)
        _check_prob("delta", float(self.delta), open_interval=True)


@dataclass(frozen=True)
class MarginalBounds:
    """Two-sided coverage bounds and the exact mean under distinct scores.

    ``lo`` and ``hi`` sandwich the marginal coverage per the split
    conformal guarantee (width 1/(n + 1), upper end clipped at one);
    ``exact_mean`` is 1 - floor(alpha (n + 1))/(n + 1), kept rational.
    """

    lo: float
    hi: float
    exact_mean: Fraction


@dataclass(frozen=True)
class DualAlpha:
    """Marginal level implied by a tolerance calibration.

    ``alpha`` is the smallest usable level; every level in ``interval``
    (closed left, open right) selects the same order statistic, so the
    tolerance guarantee is shared by the whole interval.
    """

    alpha: Fraction
    interval: tuple[Fraction, Fraction]


@dataclass(frozen=True)
class DualTolerance:
    """Tolerance parameters implied by a marginal calibration.

    ``delta_min`` is the smallest failure probability at the reference
    eps, ``eps_min`` the smallest miscoverage at the reference delta.
    Entries are None when the corresponding reference level was not
    supplied.
    """

    delta_min: float | None
    eps_min: float | None


@dataclass(frozen=True)
class AlphaFromTolerance:
    """Smallest marginal level whose set is an (eps, delta) tolerance region.

    ``full_set`` marks the degenerate case where no finite threshold
    qualifies and only the full label space honours the guarantee.
    """

    alpha: Fraction
    full_set: bool


@dataclass(frozen=True)
class CalibrationResult:
    """Outcome of a split conformal calibration.

    Parameters
    ----------
    lambda_hat : float
        Selected threshold, +inf when only the full set qualifies.
    order_index : int
        Rank of the selected score, in {1, ..., n + 1}.
    law : BetaParams or None
        Exact coverage law Beta(order_index, n + 1 - order_index) under
        almost-surely distinct scores, a stochastic lower bound otherwise;
        None in the degenerate full-set case.
    dual : DualAlpha or DualTolerance
        The other guarantee's implied parameters.
    marginal_bounds : MarginalBounds
        Two-sided coverage bounds at the (implied) marginal level.
    full_set : bool
        Whether order_index = n + 1, i.e. lambda_hat = +inf.
    """

    lambda_hat: float
    order_index: int
    law: BetaParams | None
    dual: DualAlpha | DualTolerance
    marginal_bounds: MarginalBounds
    full_set: bool


def _floor_rank(n: int, alpha) -> int:
    """floor(alpha (n + 1) - 1), the binomial argument of the duality."""
    return snap_floor(as_fraction(alpha) * (n + 1) - 1)


def tolerance_delta_given_alpha(n, alpha, eps: float) -> float:
    """Smallest delta making the level-alpha set an (eps, delta) region.

    Evaluates Bin(floor(alpha (n + 1) - 1); n, eps); an empty summation
    range gives 0.

    Examples
    --------
    >>> tolerance_delta_given_alpha(100, 0.005, 0.1)
    0.0
    """
    n = _check_trials("n", n)
    _check_prob("alpha", float(alpha), open_interval=True)
    eps = _check_prob("eps", eps, open_interval=True)
    return binom_cdf(_floor_rank(n, alpha), n, eps)


def tolerance_eps_given_alpha(n, alpha, delta: float) -> float:
    """Smallest eps at which the level-alpha set holds with 1 - delta.

    Inverts the binomial tail in its success probability at
    k = floor(alpha (n + 1) - 1); k < 0 gives 0.

    Examples
    --------
    >>> round(tolerance_eps_given_alpha(100, 0.1, 0.1), 6)
    0.138352
    """
    n = _check_trials("n", n)
    _check_prob("alpha", float(alpha), open_interval=True)
    delta = _check_prob("delta", delta, open_interval=True)
    return binom_inf_p(_floor_rank(n, alpha), n, delta)


def alpha_given_tolerance(n, eps: float, delta: float) -> AlphaFromTolerance:
    """Smallest marginal level dual to the tolerance pair (eps, delta).

    alpha = (k* + 1)/(n + 1) with k* the largest k whose binomial tail
    stays within delta.  When no k qualifies the full label space is the
    only valid region; the limiting level 1/(n + 1) is returned with the
    degenerate flag set.

    Examples
    --------
    >>> alpha_given_tolerance(1000, 0.1, 0.1).alpha  # 88/1001 reduced
    Fraction(8, 91)
    """
    n = _check_trials("n", n)
    sup = binom_sup_k(n, eps, delta)
    if sup.infeasible:
        return AlphaFromTolerance(Fraction(1, n + 1), True)
    return AlphaFromTolerance(Fraction(sup.value + 1, n + 1), False)


def marginal_bounds(n, alpha) -> MarginalBounds:
    """Coverage sandwich [1 - alpha, 1 - alpha + 1/(n + 1)] and exact mean.

    The mean is exact for almost-surely distinct scores:
    1 - floor(alpha (n + 1))/(n + 1).

    Examples
    --------
    >>> marginal_bounds(1000, Fraction(88, 1001)).exact_mean  # 913/1001
    Fraction(83, 91)
    """
    n = _check_trials("n", n)
    a = as_fraction(alpha)
    if not 0 < a < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    mean = 1 - Fraction(snap_floor(a * (n + 1)), n + 1)
    return MarginalBounds(
        lo=float(1 - a),
        hi=min(1.0, float(1 - a + Fraction(1, n + 1))),
        exact_mean=mean,
    )


def q_hat(
    scores: NonconformityScores,
    alpha,
    *,
    eps: float | None = None,
    delta: float | None = None,
) -> CalibrationResult:
    """Marginal split conformal calibration at level alpha.

    Selects the ceil((1 - alpha) (n + 1))-th smallest calibration score; a
    rank beyond n means even the largest score is not conservative enough
    and the full label space is returned (lambda_hat = +inf).

    Parameters
    ----------
    scores : NonconformityScores
        Calibration scores.
    alpha : float or Fraction
        Miscoverage level in (0, 1).
    eps, delta : float, optional
        Reference levels at which to report the implied tolerance
        parameters (dual.delta_min at eps, dual.eps_min at delta).

    Examples
    --------
    >>> r = q_hat(NonconformityScores(range(1, 10)), 0.1)
    >>> r.order_index, r.lambda_hat
    (9, 9.0)
    >>> q_hat(NonconformityScores(range(1, 10)), 0.05).lambda_hat
    inf
    """
    n = scores.n
    a = as_fraction(alpha)
    if not 0 < a < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    idx = snap_ceil((1 - a) * (n + 1))
    full = idx > n
    dual = DualTolerance(
        delta_min=None if eps is None else tolerance_delta_given_alpha(n, a, eps),
        eps_min=None if delta is None else tolerance_eps_given_alpha(n, a, delta),
    )
    return CalibrationResult(
        lambda_hat=scores.order_stat(idx),
        order_index=idx,
        law=None if full else BetaParams(idx, n + 1 - idx),
        dual=dual,
        marginal_bounds=marginal_bounds(n, a),
        full_set=full,
    )


def p_hat(scores: NonconformityScores, eps: float, delta: float) -> CalibrationResult:
    """Tolerance-region calibration: cover 1 - eps with probability 1 - delta.

    Selects the (n - k*)-th smallest score, k* = sup{k : Bin(k; n, eps) <=
    delta}.  When the sup is over an empty set (already zero exceedances
    fail, i.e. (1 - eps)^n > delta) the full label space is the only valid
    region.  The dual marginal level and its sharing interval come along
    in ``dual``.

    Examples
    --------
    >>> r = p_hat(NonconformityScores(range(1000)), 0.1, 0.1)
    >>> r.order_index
    913
    >>> r.dual.alpha  # 88/1001 reduced
    Fraction(8, 91)
    """
    n = scores.n
    sup = binom_sup_k(n, eps, delta)
    if sup.infeasible:
        dual = DualAlpha(
            alpha=Fraction(1, n + 1),
            interval=(Fraction(0), Fraction(1, n + 1)),
        )
        return CalibrationResult(
            lambda_hat=math.inf,
            order_index=n + 1,
            law=None,
            dual=dual,
            marginal_bounds=marginal_bounds(n, dual.alpha),
            full_set=True,
        )
    k = sup.value
    dual = DualAlpha(
        alpha=Fraction(k + 1, n + 1),
        interval=(Fraction(k + 1, n + 1), Fraction(k + 2, n + 1)),
    )
    return CalibrationResult(
        lambda_hat=scores.order_stat(n - k),
        order_index=n - k,
        law=BetaParams(n - k, k + 1),
        dual=dual,
        marginal_bounds=marginal_bounds(n, dual.alpha),
        full_set=False,
    )


def calibrate(scores: NonconformityScores, target) -> CalibrationResult:
    """Dispatch on the guarantee type: Marginal -> q_hat, Tolerance -> p_hat."""
    if isinstance(target, Marginal):
        return q_hat(scores, target.alpha)
    if isinstance(target, Tolerance):
        return p_hat(scores, target.eps, target.delta)
    raise TypeError(f"unknown guarantee {target!r}")


def wilks_interval_law(n, r: int, s: int) -> BetaParams:
    """Coverage law of the order-statistic interval [Y_(r), Y_(s)].

    For an iid continuous sample of size n and 0 <= r < s <= n + 1 (with
    the sentinel conventions Y_(0) = -inf, Y_(n+1) = +inf, and not both
    ends sentinels), the population mass captured by the interval is
    Beta(s - r, n - s + r + 1) distributed.

    Examples
    --------
    >>> wilks_interval_law(9, 0, 9)
    BetaParams(a=9, b=1)
    """
    n = _check_trials("n", n)
    if not (0 <= r < s <= n + 1):
        raise ValueError(f"need 0 <= r < s <= n + 1, got r={r}, s={s}")
    if r == 0 and s == n + 1:
        raise ValueError("interval spans both sentinels; coverage is trivially 1")
    return BetaParams(s - r, n - s + r + 1)


def wilks_is_tolerance(n, r: int, s: int, eps: float, delta: float) -> bool:
    """Whether [Y_(r), Y_(s)] is an (eps, delta) tolerance interval.

    Evaluates Beta(1 - eps; s - r, n - s + r + 1) <= delta.

    Examples
    --------
    >>> wilks_is_tolerance(1000, 0, 1000, 0.1, 0.1)
    True
    """
    eps = _check_prob("eps", eps, open_interval=True)
    delta = _check_prob("delta", delta, open_interval=True)
    return beta_reg(1.0 - eps, wilks_interval_law(n, r, s)) <= delta
