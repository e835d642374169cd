"""Exact dyadic rationals p/2^m and exact point geometry on them.

Everything here is integer arithmetic: no floats, no rounding unless a
method name says so. Dyadics are kept canonical (odd numerator, or 0/2^0)
so equality and hashing are structural.
"""
from __future__ import annotations

import math
import re
from fractions import Fraction
from typing import Iterable, Sequence, Tuple, Union

from .errors import InputError

_DYADIC_RE = re.compile(r"^([+-]?\d+)/2\^(\d+)$")


def _normalized(num: int, exp: int) -> Tuple[int, int]:
    if num == 0:
        return 0, 0
    if exp < 0:
        num <<= -exp
        exp = 0
    if num & 1:
        return num, exp
    shift = (num & -num).bit_length() - 1
    if shift > exp:
        shift = exp
    return num >> shift, exp - shift


class Dyadic:
    """Exact value num / 2**exp with exp >= 0."""

    __slots__ = ("num", "exp")

    def __init__(self, num: int, exp: int = 0):
        self.num, self.exp = _normalized(num, exp)

    # construction ---------------------------------------------------------

    @staticmethod
    def from_fraction(fr: Fraction) -> "Dyadic":
        den = fr.denominator
        if den & (den - 1):
            raise InputError(f"{fr} is not dyadic")
        return Dyadic(fr.numerator, den.bit_length() - 1)

    @staticmethod
    def parse(text: str) -> "Dyadic":
        """Parse the serialization form 'p/2^m' (exact)."""
        m = _DYADIC_RE.match(text.strip())
        if not m:
            raise InputError(f"not a dyadic literal: {text!r}")
        return Dyadic(int(m.group(1)), int(m.group(2)))

    # arithmetic -----------------------------------------------------------

    def __add__(self, other: "Dyadic") -> "Dyadic":
        a, b = self, other
        if a.exp >= b.exp:
            return Dyadic((b.num << (a.exp - b.exp)) + a.num, a.exp)
        return Dyadic((a.num << (b.exp - a.exp)) + b.num, b.exp)

    def __sub__(self, other: "Dyadic") -> "Dyadic":
        a, b = self, other
        if a.exp >= b.exp:
            return Dyadic(a.num - (b.num << (a.exp - b.exp)), a.exp)
        return Dyadic((a.num << (b.exp - a.exp)) - b.num, b.exp)

    def __mul__(self, other: "Dyadic") -> "Dyadic":
        return Dyadic(self.num * other.num, self.exp + other.exp)

    def __neg__(self) -> "Dyadic":
        d = Dyadic.__new__(Dyadic)
        d.num, d.exp = -self.num, self.exp
        return d

    def __abs__(self) -> "Dyadic":
        if self.num >= 0:
            return self
        return -self

    def scaled(self, k: int) -> "Dyadic":
        """self * 2**k, exact."""
        return Dyadic(self.num, self.exp - k)

    def square(self) -> "Dyadic":
        return Dyadic(self.num * self.num, 2 * self.exp)

    # comparison -----------------------------------------------------------

    def _cmp(self, other: "Dyadic") -> int:
        if self.exp >= other.exp:
            a, b = self.num, other.num << (self.exp - other.exp)
        else:
            a, b = self.num << (other.exp - self.exp), other.num
        return (a > b) - (a < b)

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __eq__(self, other):
        return isinstance(other, Dyadic) and self.num == other.num and self.exp == other.exp

    def __hash__(self):
        return hash((self.num, self.exp))

    def cmp_fraction(self, fr: Fraction) -> int:
        """Exact three-way comparison against an arbitrary rational."""
        lhs = self.num * fr.denominator
        rhs = fr.numerator << self.exp
        return (lhs > rhs) - (lhs < rhs)

    @property
    def sign(self) -> int:
        return (self.num > 0) - (self.num < 0)

    def is_zero(self) -> bool:
        return self.num == 0

    # rounding -------------------------------------------------------------

    def floor_to(self, g: int) -> "Dyadic":
        """Largest multiple of 2**-g that is <= self."""
        if self.exp <= g:
            return self
        return Dyadic(self.num >> (self.exp - g), g)

    def ceil_to(self, g: int) -> "Dyadic":
        if self.exp <= g:
            return self
        return Dyadic(-((-self.num) >> (self.exp - g)), g)

    def floor_index(self, g: int) -> int:
        """Integer i with i*2**-g <= self < (i+1)*2**-g."""
        if self.exp <= g:
            return self.num << (g - self.exp)
        return self.num >> (self.exp - g)

    # conversions ----------------------------------------------------------

    def as_fraction(self) -> Fraction:
        return Fraction(self.num, 1 << self.exp)

    def __float__(self) -> float:
        if abs(self.num) < (1 << 53) and self.exp < 1000:
            return math.ldexp(int(self.num), -self.exp)
        try:
            return float(self.num / (1 << self.exp))
        except OverflowError:
            return math.inf if self.num > 0 else -math.inf

    def float_down(self) -> float:
        """Largest float <= self."""
        f = float(self)
        if math.isinf(f):
            return 1.7976931348623157e308 if f > 0 else f
        if Fraction(f) > self.as_fraction():
            return math.nextafter(f, -math.inf)
        return f

    def float_up(self) -> float:
        """Smallest float >= self."""
        f = float(self)
        if math.isinf(f):
            return f if f > 0 else -1.7976931348623157e308
        if Fraction(f) < self.as_fraction():
            return math.nextafter(f, math.inf)
        return f

    def __str__(self) -> str:
        return f"{self.num}/2^{self.exp}"

    def __repr__(self) -> str:
        return f"Dyadic({self.num}, {self.exp})"


ZERO = Dyadic(0)
ONE = Dyadic(1)
TWO = Dyadic(2)
HALF = Dyadic(1, 1)

NumberLike = Union[Dyadic, Fraction, int, str]


def as_fraction(x: NumberLike) -> Fraction:
    if isinstance(x, Dyadic):
        return x.as_fraction()
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        text = x.strip()
        m = _DYADIC_RE.match(text)
        if m:
            return Fraction(int(m.group(1)), 1 << int(m.group(2)))
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"cannot parse number: {x!r}") from exc
    raise InputError(f"cannot interpret {type(x).__name__} as a number")


def dyadic_round(x: NumberLike, n: int) -> Dyadic:
    """Nearest multiple of 2**-n (ties to even). |x - result| <= 2**-(n+1)."""
    if n < 0:
        raise InputError("precision must be nonnegative")
    if isinstance(x, Dyadic) and x.exp <= n:
        return x
    fr = as_fraction(x) * (1 << n)
    q, rem = divmod(fr.numerator, fr.denominator)
    twice = 2 * rem
    if twice > fr.denominator or (twice == fr.denominator and q & 1):
        q += 1
    return Dyadic(q, n)


def sqrt_bounds(d: Dyadic, n: int) -> Tuple[Dyadic, Dyadic]:
    """Certified lo <= sqrt(d) <= hi with hi - lo <= 2**-n. Requires d >= 0."""
    if d.num < 0:
        raise InputError("sqrt of a negative dyadic")
    if d.num == 0:
        return ZERO, ZERO
    m = max(n + 2, (d.exp + 1) // 2)
    t = 2 * m - d.exp
    r = math.isqrt(d.num << t)
    lo = Dyadic(r, m)
    if r * r == d.num << t:
        return lo, lo
    return lo, Dyadic(r + 1, m)


def frac_sqrt_bounds(fr: Fraction, n: int) -> Tuple[Dyadic, Dyadic]:
    """Certified dyadic bounds on sqrt of a nonnegative rational."""
    if fr < 0:
        raise InputError("sqrt of a negative rational")
    if fr == 0:
        return ZERO, ZERO
    m = n + 2
    scaled = (fr.numerator << (2 * m)) // fr.denominator  # floor
    r = math.isqrt(scaled)
    # r <= sqrt(scaled) <= sqrt(fr * 4^m) < r + 2 covers the floor slack
    return Dyadic(r, m), Dyadic(r + 2, m)


class DyadicPoint:
    """Point with dyadic coordinates; dimension 2 (plane) or 4 (family)."""

    __slots__ = ("coords",)

    def __init__(self, coords: Iterable[Dyadic]):
        self.coords = tuple(coords)
        if len(self.coords) not in (2, 4):
            raise InputError(f"unsupported dimension {len(self.coords)}")

    @staticmethod
    def of(*values: NumberLike) -> "DyadicPoint":
        out = []
        for v in values:
            if isinstance(v, Dyadic):
                out.append(v)
            else:
                out.append(Dyadic.from_fraction(as_fraction(v)))
        return DyadicPoint(out)

    @property
    def dim(self) -> int:
        return len(self.coords)

    def __getitem__(self, i: int) -> Dyadic:
        return self.coords[i]

    def __iter__(self):
        return iter(self.coords)

    def __eq__(self, other):
        return isinstance(other, DyadicPoint) and self.coords == other.coords

    def __hash__(self):
        return hash(self.coords)

    def __sub__(self, other: "DyadicPoint") -> "DyadicPoint":
        return DyadicPoint(a - b for a, b in zip(self.coords, other.coords))

    def __add__(self, other: "DyadicPoint") -> "DyadicPoint":
        return DyadicPoint(a + b for a, b in zip(self.coords, other.coords))

    def dist_sq(self, other: "DyadicPoint") -> Dyadic:
        """Exact squared Euclidean distance."""
        acc = ZERO
        for a, b in zip(self.coords, other.coords):
            acc = acc + (a - b).square()
        return acc

    def dist_bounds(self, other: "DyadicPoint", n: int) -> Tuple[Dyadic, Dyadic]:
        return sqrt_bounds(self.dist_sq(other), n)

    def within(self, other: "DyadicPoint", r: NumberLike) -> bool:
        """Exact test dist(self, other) <= r (closed)."""
        rr = as_fraction(r)
        if rr < 0:
            return False
        return self.dist_sq(other).cmp_fraction(rr * rr) <= 0

    def to_floats(self) -> Tuple[float, ...]:
        return tuple(float(c) for c in self.coords)

    def __str__(self) -> str:
        return "(" + ", ".join(str(c) for c in self.coords) + ")"

    def __repr__(self) -> str:
        return f"DyadicPoint{self.coords!r}"


def point2(x: NumberLike, y: NumberLike) -> DyadicPoint:
    return DyadicPoint.of(x, y)


def dist_sq_point_rect(p: Sequence[Dyadic], lo: Sequence[Dyadic], hi: Sequence[Dyadic]) -> Dyadic:
    """Exact squared distance from a point to an axis-aligned closed box."""
    acc = ZERO
    for c, a, b in zip(p, lo, hi):
        if c < a:
            acc = acc + (a - c).square()
        elif c > b:
            acc = acc + (c - b).square()
    return acc
