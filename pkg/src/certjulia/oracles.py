"""Real and complex number oracles.

An oracle answers query(n) with a dyadic within 2**-n of the represented
number (strict). Accuracy of a user-supplied query function is the
supplier's contract; the library treats oracle output as trusted input.
Queries are memoized and safe to share across threads.
"""
from __future__ import annotations

import threading
from fractions import Fraction
from typing import Callable, Optional

import mpmath
from mpmath import libmp

from .dyadic import Dyadic, DyadicPoint, NumberLike, as_fraction, dyadic_round
from .errors import InputError

_GUARD_BITS = 30


class RealOracle:
    """Wraps n -> Dyadic with |x - query(n)| < 2**-n."""

    __slots__ = ("_fn", "exact_value", "name", "_memo", "_lock")

    def __init__(self, fn: Callable[[int], Dyadic], name: str = "",
                 exact_value: Optional[Dyadic] = None):
        self._fn = fn
        self.exact_value = exact_value
        self.name = name
        self._memo = {}
        self._lock = threading.Lock()

    def query(self, n: int) -> Dyadic:
        if n < 0:
            raise InputError("oracle precision must be nonnegative")
        if self.exact_value is not None:
            return self.exact_value
        with self._lock:
            got = self._memo.get(n)
            if got is None:
                got = self._fn(n)
                self._memo[n] = got
            return got

    # constructors ---------------------------------------------------------

    @staticmethod
    def exact(x: NumberLike) -> "RealOracle":
        d = x if isinstance(x, Dyadic) else Dyadic.from_fraction(as_fraction(x))
        return RealOracle(lambda n: d, name=str(d), exact_value=d)

    @staticmethod
    def of_number(x: NumberLike) -> "RealOracle":
        """Exact when x is dyadic, otherwise a rounding oracle."""
        fr = as_fraction(x)
        den = fr.denominator
        if not (den & (den - 1)):
            return RealOracle.exact(Dyadic.from_fraction(fr))
        return RealOracle(lambda n: dyadic_round(fr, n + 2), name=str(fr))

    @staticmethod
    def of_mpf(compute: Callable[[], "mpmath.mpf"], name: str = "") -> "RealOracle":
        """Backed by an mpmath expression evaluated at raised working precision."""

        def fn(n: int) -> Dyadic:
            with mpmath.workprec(n + _GUARD_BITS):
                v = +compute()
            return Dyadic(libmp.to_fixed(v._mpf_, n + 2), n + 2)

        return RealOracle(fn, name=name)


class ComplexOracle:
    """Pair of real oracles; query(n) is a point within 2**-n Euclidean."""

    __slots__ = ("re", "im", "name")

    def __init__(self, re: RealOracle, im: RealOracle, name: str = ""):
        self.re = re
        self.im = im
        self.name = name or f"({re.name}, {im.name})"

    def query(self, n: int) -> DyadicPoint:
        return DyadicPoint((self.re.query(n + 1), self.im.query(n + 1)))

    @property
    def exact_point(self) -> Optional[DyadicPoint]:
        if self.re.exact_value is not None and self.im.exact_value is not None:
            return DyadicPoint((self.re.exact_value, self.im.exact_value))
        return None

    @staticmethod
    def exact(re: NumberLike, im: NumberLike = 0) -> "ComplexOracle":
        return ComplexOracle(RealOracle.exact(re), RealOracle.exact(im))

    @staticmethod
    def of_numbers(re: NumberLike, im: NumberLike = 0) -> "ComplexOracle":
        return ComplexOracle(RealOracle.of_number(re), RealOracle.of_number(im))

    @staticmethod
    def of_mpc(compute: Callable[[], "mpmath.mpc"], name: str = "") -> "ComplexOracle":
        re = RealOracle.of_mpf(lambda: mpmath.mpc(compute()).real, name=f"re {name}")
        im = RealOracle.of_mpf(lambda: mpmath.mpc(compute()).imag, name=f"im {name}")
        return ComplexOracle(re, im, name=name)


def golden_rotation() -> ComplexOracle:
    """e^(2*pi*i*theta) for theta = (sqrt(5)-1)/2."""

    def compute():
        theta = (mpmath.sqrt(5) - 1) / 2
        return mpmath.exp(2j * mpmath.pi * theta)

    return ComplexOracle.of_mpc(compute, name="golden rotation")


def golden_siegel_parameter() -> ComplexOracle:
    """Quadratic parameter whose fixed point has multiplier e^(2*pi*i*theta),
    theta the golden mean: c = mu/2 - (mu/2)^2."""

    def compute():
        theta = (mpmath.sqrt(5) - 1) / 2
        mu = mpmath.exp(2j * mpmath.pi * theta)
        a = mu / 2
        return a - a * a

    return ComplexOracle.of_mpc(compute, name="golden siegel c")


def golden_siegel_center() -> ComplexOracle:
    """The indifferent fixed point mu/2 for the golden rotation parameter."""

    def compute():
        theta = (mpmath.sqrt(5) - 1) / 2
        return mpmath.exp(2j * mpmath.pi * theta) / 2

    return ComplexOracle.of_mpc(compute, name="golden siegel center")


def circle_point(j: int, count: int) -> ComplexOracle:
    """Point e^(2*pi*i*j/count) on the unit circle."""

    def compute():
        return mpmath.exp(2j * mpmath.pi * j / count)

    return ComplexOracle.of_mpc(compute, name=f"circle {j}/{count}")
