"""Exact index arithmetic shared by the calibrators.

Rank formulas like ceil((1 - alpha) * (n + 1)) are defined for real alpha
but evaluated at floats, and the float image of a rational alpha can sit a
few ulp off an integer.  Everything here goes through Fraction with a snap
window so that e.g. alpha = 0.1, n = 9 lands on rank 9 rather than 10.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational

# Half-width of the window around integers inside which a float-borne
# rational is treated as that integer.  Far larger than accumulated float
# error, far smaller than the 1/(n+1) grid spacing for any tractable n.
SNAP_TOL = Fraction(1, 10**9)


def as_fraction(x) -> Fraction:
    """Convert a level or threshold to an exact rational.

    Rational inputs pass through unchanged; floats convert via their exact
    binary value, which the snap window later reconciles with the decimal
    the caller had in mind.
    """
    if isinstance(x, Rational):
        return Fraction(x)
    return Fraction(float(x))


def snap(x: Fraction) -> Fraction:
    """Replace x by the nearest integer when within SNAP_TOL of it."""
    nearest = round(x)
    if abs(x - nearest) <= SNAP_TOL:
        return Fraction(nearest)
    return x


def snap_ceil(x) -> int:
    """ceil(x) after snapping float noise off integer values."""
    y = snap(as_fraction(x))
    return -((-y.numerator) // y.denominator)


def snap_floor(x) -> int:
    """floor(x) after snapping float noise off integer values."""
    y = snap(as_fraction(x))
    return y.numerator // y.denominator
