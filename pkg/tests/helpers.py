"""Independent oracles used by the test suite.

Everything here is deliberately implemented with tools the library itself
does not use for the quantity under test (mpmath multi-precision, exact
Fraction arithmetic, scipy.stats reference distributions), so that each
numerical claim is checked through two unrelated routes.
"""

from fractions import Fraction
from math import comb

import mpmath
import numpy as np


def binom_cdf_mp(k: int, n: int, p, dps: int = 40) -> mpmath.mpf:
    """Binomial CDF via the regularized incomplete beta in mpmath.

    Bin(k; n, p) = I_{1-p}(n-k, k+1) for 0 <= k < n.
    """
    if k < 0:
        return mpmath.mpf(0)
    if k >= n:
        return mpmath.mpf(1)
    with mpmath.workdps(dps):
        return mpmath.betainc(n - k, k + 1, 0, 1 - mpmath.mpf(p), regularized=True)


def binom_cdf_mpsum(k: int, n: int, p, dps: int = 50) -> mpmath.mpf:
    """Binomial CDF by direct multi-precision summation over a window.

    Sums pmf terms from log-gamma at dps digits, restricted to a window of
    14 standard deviations plus 80 terms around the smaller tail; the
    neglected mass is far below the working precision.  Handles n up to
    10^6, where the betainc route becomes unreliable.
    """
    if k < 0:
        return mpmath.mpf(0)
    if k >= n:
        return mpmath.mpf(1)
    with mpmath.workdps(dps):
        pp = mpmath.mpf(p)
        q = 1 - pp
        sigma = mpmath.sqrt(n * pp * q)
        width = int(14 * sigma) + 80

        def log_pmf(i):
            return (
                mpmath.loggamma(n + 1)
                - mpmath.loggamma(i + 1)
                - mpmath.loggamma(n - i + 1)
                + i * mpmath.log(pp)
                + (n - i) * mpmath.log(q)
            )

        def tail_sum(lo, hi):
            return mpmath.fsum(mpmath.e ** log_pmf(i) for i in range(lo, hi + 1))

        if k <= n * pp:
            return tail_sum(max(0, k - width), k)
        return 1 - tail_sum(k + 1, min(n, k + 1 + width))


def binom_cdf_exact(k: int, n: int, p: Fraction) -> Fraction:
    """Binomial CDF by exact rational summation. Small n only."""
    if k < 0:
        return Fraction(0)
    k = min(k, n)
    q = 1 - p
    return sum(comb(n, i) * p**i * q ** (n - i) for i in range(k + 1))


def binom_inf_p_mp(k: int, n: int, delta, dps: int = 40) -> mpmath.mpf:
    """Root of Bin(k; n, p) = delta in p, by mpmath bisection."""
    if k < 0:
        return mpmath.mpf(0)
    if k >= n:
        return mpmath.mpf(1)
    with mpmath.workdps(dps):
        d = mpmath.mpf(delta)
        lo, hi = mpmath.mpf(0), mpmath.mpf(1)
        for _ in range(dps * 4):
            mid = (lo + hi) / 2
            if binom_cdf_mp(k, n, mid, dps=dps) <= d:
                hi = mid
            else:
                lo = mid
        return hi


def binom_sup_k_exact(n: int, eps: Fraction, delta: Fraction) -> int | None:
    """Largest k with Bin(k; n, eps) <= delta by exact summation; None if none."""
    total = Fraction(0)
    q = 1 - eps
    best = None
    for k in range(n + 1):
        total += comb(n, k) * eps**k * q ** (n - k)
        if total <= delta:
            best = k
        else:
            break
    return best


def betabin_pmf_exact(i: int, trials: int, a: int, b: int) -> Fraction:
    """Beta-binomial pmf for integer shape parameters, exact."""
    # C(n,i) * B(i+a, n-i+b) / B(a,b) with integer a, b
    from math import factorial

    n = trials
    num = Fraction(factorial(i + a - 1) * factorial(n - i + b - 1), factorial(n + a + b - 1))
    den = Fraction(factorial(a - 1) * factorial(b - 1), factorial(a + b - 1))
    return comb(n, i) * num / den


def betabin_cdf_exact(k: int, trials: int, a: int, b: int) -> Fraction:
    if k < 0:
        return Fraction(0)
    k = min(k, trials)
    return sum(betabin_pmf_exact(i, trials, a, b) for i in range(k + 1))


def beta_cdf_mp(x, a, b, dps: int = 40) -> mpmath.mpf:
    with mpmath.workdps(dps):
        return mpmath.betainc(a, b, 0, mpmath.mpf(x), regularized=True)


def beta_quantile_mp(q, a, b, dps: int = 40) -> mpmath.mpf:
    with mpmath.workdps(dps):
        qq = mpmath.mpf(q)
        lo, hi = mpmath.mpf(0), mpmath.mpf(1)
        for _ in range(dps * 4):
            mid = (lo + hi) / 2
            if beta_cdf_mp(mid, a, b, dps=dps) < qq:
                lo = mid
            else:
                hi = mid
        return hi


def sort_scores(values) -> np.ndarray:
    """Naive full-sort order-statistic oracle."""
    return np.sort(np.asarray(values, dtype=float))
