"""Nested prediction-set families and the score / membership correspondence.

A family assigns to every threshold lambda a label set S_lambda(x), growing
from the empty set at the bottom of the domain to the full label space at
the top.  The score of a pair (x, y) is the smallest threshold whose set
captures y, so membership at level lam is equivalent to score <= lam.  That
equivalence is what turns rank statistics of calibration scores into set
covers, and it is checked here by computing the two sides through different
routes: ``member`` queries the set directly, ``score_of`` inverts the
nesting by bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable

__all__ = ["LambdaDomain", "NestedFamily", "Score", "score_of", "member"]

_MAX_STEPS = 200


@dataclass(frozen=True)
class LambdaDomain:
    """Closed threshold range [lo, hi], endpoints possibly infinite.

    By construction the family is empty at ``lo`` and covers every label
    at ``hi``.
    """

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"domain needs lo < hi, got [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class NestedFamily:
    """A monotone family of interval-valued prediction sets.

    Parameters
    ----------
    domain : LambdaDomain
        Threshold range.
    set_at : callable
        Map (lam, x) -> (lower, upper) interval endpoints.  Must be
        monotone (larger lam gives a superset) and right-continuous in
        lam, i.e. the infimum in the score definition is attained.
    """

    domain: LambdaDomain
    set_at: Callable[[float, Any], tuple[float, float]]


@dataclass(frozen=True)
class Score:
    """A nonconformity score, living in the threshold domain."""

    value: float


def _covers(family: NestedFamily, lam: float, x, y) -> bool:
    lo, hi = family.set_at(lam, x)
    return lo <= y <= hi


def member(family: NestedFamily, lam: float, x, y) -> bool:
    """Whether y belongs to the prediction set at threshold lam.

    Examples
    --------
    >>> fam = NestedFamily(LambdaDomain(0.0, math.inf),
    ...                    lambda lam, x: (x - lam, x + lam))
    >>> member(fam, 2.0, 1.0, 2.5)
    True
    >>> member(fam, 1.0, 1.0, 2.5)
    False
    """
    if not family.domain.lo <= lam <= family.domain.hi:
        raise ValueError(
            f"lam={lam} outside domain [{family.domain.lo}, {family.domain.hi}]"
        )
    return _covers(family, lam, x, y)


def score_of(family: NestedFamily, x, y) -> Score:
    """Smallest threshold whose set contains y.

    Works for any monotone right-continuous family by bracketing the
    membership boundary and bisecting to floating point resolution; the
    attained (covering) side of the final bracket is returned, so
    ``member(family, score_of(family, x, y).value, x, y)`` always holds.

    Examples
    --------
    >>> fam = NestedFamily(LambdaDomain(0.0, math.inf),
    ...                    lambda lam, x: (x - lam, x + lam))
    >>> score_of(fam, 3.0, 3.0).value
    0.0
    """
    dom = family.domain

    # Finite covering upper end.
    if math.isinf(dom.hi):
        base = dom.lo if math.isfinite(dom.lo) else 0.0
        step = 1.0
        for _ in range(_MAX_STEPS):
            hi = base + step
            if _covers(family, hi, x, y):
                break
            step *= 2.0
        else:
            return Score(dom.hi)
    else:
        hi = dom.hi
        if not _covers(family, hi, x, y):
            # Guard against families that break the full-set convention.
            return Score(dom.hi)

    # Finite non-covering lower end.
    if math.isinf(dom.lo):
        base = min(0.0, hi)
        step = 1.0
        for _ in range(_MAX_STEPS):
            lo = base - step
            if not _covers(family, lo, x, y):
                break
            step *= 2.0
        else:
            return Score(dom.lo)
    else:
        lo = dom.lo
        if _covers(family, lo, x, y):
            return Score(lo)

    for _ in range(_MAX_STEPS):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi or not lo < mid < hi:
            break
        if _covers(family, mid, x, y):
            hi = mid
        else:
            lo = mid
    return Score(hi)
