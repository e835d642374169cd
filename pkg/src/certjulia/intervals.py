"""Exact complex rectangle arithmetic over dyadic endpoints.

A Box is [re_lo, re_hi] x [im_lo, im_hi], all endpoints exact dyadics.
Operations are inclusion-isotone; nothing rounds unless the method takes a
grid argument, and then rounding is always outward (soundness before width).
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, List, Optional, Tuple

from .dyadic import Dyadic, DyadicPoint, ZERO, dist_sq_point_rect, sqrt_bounds
from .errors import DomainError


def _mul_bounds(a_lo: Dyadic, a_hi: Dyadic, b_lo: Dyadic, b_hi: Dyadic) -> Tuple[Dyadic, Dyadic]:
    p1 = a_lo * b_lo
    p2 = a_lo * b_hi
    p3 = a_hi * b_lo
    p4 = a_hi * b_hi
    lo = p1
    hi = p1
    for p in (p2, p3, p4):
        if p < lo:
            lo = p
        if p > hi:
            hi = p
    return lo, hi


def _sq_bounds(lo: Dyadic, hi: Dyadic) -> Tuple[Dyadic, Dyadic]:
    """Range of x^2 over [lo, hi] (tighter than _mul_bounds for the diagonal)."""
    a, b = lo.square(), hi.square()
    top = a if a > b else b
    if lo.sign <= 0 <= hi.sign:
        return ZERO, top
    return (a if a < b else b), top


def _abs_bounds(lo: Dyadic, hi: Dyadic) -> Tuple[Dyadic, Dyadic]:
    a, b = abs(lo), abs(hi)
    top = a if a > b else b
    if lo.sign <= 0 <= hi.sign:
        return ZERO, top
    return (a if a < b else b), top


class Box:
    """Closed axis-aligned rectangle in the complex plane."""

    __slots__ = ("re_lo", "re_hi", "im_lo", "im_hi")

    def __init__(self, re_lo: Dyadic, re_hi: Dyadic, im_lo: Dyadic, im_hi: Dyadic):
        if re_lo > re_hi or im_lo > im_hi:
            raise DomainError("box endpoints out of order")
        self.re_lo, self.re_hi = re_lo, re_hi
        self.im_lo, self.im_hi = im_lo, im_hi

    # construction ---------------------------------------------------------

    @staticmethod
    def point(p: DyadicPoint) -> "Box":
        x, y = p.coords
        return Box(x, x, y, y)

    @staticmethod
    def around(p: DyadicPoint, radius: Dyadic) -> "Box":
        """Circumscribed square of the closed ball B(p, radius)."""
        x, y = p.coords
        return Box(x - radius, x + radius, y - radius, y + radius)

    @staticmethod
    def hull_of(boxes: Iterable["Box"]) -> "Box":
        boxes = list(boxes)
        if not boxes:
            raise DomainError("hull of nothing")
        b = boxes[0]
        re_lo, re_hi, im_lo, im_hi = b.re_lo, b.re_hi, b.im_lo, b.im_hi
        for b in boxes[1:]:
            if b.re_lo < re_lo:
                re_lo = b.re_lo
            if b.re_hi > re_hi:
                re_hi = b.re_hi
            if b.im_lo < im_lo:
                im_lo = b.im_lo
            if b.im_hi > im_hi:
                im_hi = b.im_hi
        return Box(re_lo, re_hi, im_lo, im_hi)

    # metrics --------------------------------------------------------------

    def width(self) -> Dyadic:
        """Max side length."""
        w_re = self.re_hi - self.re_lo
        w_im = self.im_hi - self.im_lo
        return w_re if w_re > w_im else w_im

    def mid(self) -> DyadicPoint:
        return DyadicPoint(((self.re_lo + self.re_hi).scaled(-1),
                            (self.im_lo + self.im_hi).scaled(-1)))

    def diam_sq(self) -> Dyadic:
        return (self.re_hi - self.re_lo).square() + (self.im_hi - self.im_lo).square()

    # predicates -----------------------------------------------------------

    def contains_point(self, p: DyadicPoint) -> bool:
        x, y = p.coords
        return (self.re_lo <= x <= self.re_hi) and (self.im_lo <= y <= self.im_hi)

    def contains_box(self, other: "Box") -> bool:
        return (self.re_lo <= other.re_lo and other.re_hi <= self.re_hi
                and self.im_lo <= other.im_lo and other.im_hi <= self.im_hi)

    def contains_box_strictly(self, other: "Box") -> bool:
        return (self.re_lo < other.re_lo and other.re_hi < self.re_hi
                and self.im_lo < other.im_lo and other.im_hi < self.im_hi)

    def intersects(self, other: "Box") -> bool:
        return not (self.re_hi < other.re_lo or other.re_hi < self.re_lo
                    or self.im_hi < other.im_lo or other.im_hi < self.im_lo)

    def intersection(self, other: "Box") -> Optional["Box"]:
        re_lo = self.re_lo if self.re_lo > other.re_lo else other.re_lo
        re_hi = self.re_hi if self.re_hi < other.re_hi else other.re_hi
        im_lo = self.im_lo if self.im_lo > other.im_lo else other.im_lo
        im_hi = self.im_hi if self.im_hi < other.im_hi else other.im_hi
        if re_lo > re_hi or im_lo > im_hi:
            return None
        return Box(re_lo, re_hi, im_lo, im_hi)

    # arithmetic -----------------------------------------------------------

    def __add__(self, other: "Box") -> "Box":
        return Box(self.re_lo + other.re_lo, self.re_hi + other.re_hi,
                   self.im_lo + other.im_lo, self.im_hi + other.im_hi)

    def __sub__(self, other: "Box") -> "Box":
        return Box(self.re_lo - other.re_hi, self.re_hi - other.re_lo,
                   self.im_lo - other.im_hi, self.im_hi - other.im_lo)

    def __neg__(self) -> "Box":
        return Box(-self.re_hi, -self.re_lo, -self.im_hi, -self.im_lo)

    def conj(self) -> "Box":
        return Box(self.re_lo, self.re_hi, -self.im_hi, -self.im_lo)

    def __mul__(self, other: "Box") -> "Box":
        ac_lo, ac_hi = _mul_bounds(self.re_lo, self.re_hi, other.re_lo, other.re_hi)
        bd_lo, bd_hi = _mul_bounds(self.im_lo, self.im_hi, other.im_lo, other.im_hi)
        ad_lo, ad_hi = _mul_bounds(self.re_lo, self.re_hi, other.im_lo, other.im_hi)
        bc_lo, bc_hi = _mul_bounds(self.im_lo, self.im_hi, other.re_lo, other.re_hi)
        return Box(ac_lo - bd_hi, ac_hi - bd_lo, ad_lo + bc_lo, ad_hi + bc_hi)

    def square(self) -> "Box":
        """(a+bi)^2 with the dependency between the two a*b factors kept."""
        aa_lo, aa_hi = _sq_bounds(self.re_lo, self.re_hi)
        bb_lo, bb_hi = _sq_bounds(self.im_lo, self.im_hi)
        ab_lo, ab_hi = _mul_bounds(self.re_lo, self.re_hi, self.im_lo, self.im_hi)
        return Box(aa_lo - bb_hi, aa_hi - bb_lo, ab_lo.scaled(1), ab_hi.scaled(1))

    def scale(self, s: Dyadic) -> "Box":
        lo, hi = _mul_bounds(self.re_lo, self.re_hi, s, s)
        ilo, ihi = _mul_bounds(self.im_lo, self.im_hi, s, s)
        return Box(lo, hi, ilo, ihi)

    def scale_int(self, k: int) -> "Box":
        return self.scale(Dyadic(k))

    def add_point(self, p: DyadicPoint) -> "Box":
        x, y = p.coords
        return Box(self.re_lo + x, self.re_hi + x, self.im_lo + y, self.im_hi + y)

    # modulus and distance -------------------------------------------------

    def mod_sq_bounds(self) -> Tuple[Dyadic, Dyadic]:
        """Exact [min, max] of |z|^2 over the box."""
        re_min, re_max = _abs_bounds(self.re_lo, self.re_hi)
        im_min, im_max = _abs_bounds(self.im_lo, self.im_hi)
        return re_min.square() + im_min.square(), re_max.square() + im_max.square()

    def dist_sq_to_point(self, p: DyadicPoint) -> Dyadic:
        """Exact min of |z - p|^2 over the box."""
        return dist_sq_point_rect(p.coords, (self.re_lo, self.im_lo), (self.re_hi, self.im_hi))

    def max_dist_sq_to_point(self, p: DyadicPoint) -> Dyadic:
        x, y = p.coords
        dre = max(abs(self.re_lo - x), abs(self.re_hi - x))
        dim = max(abs(self.im_lo - y), abs(self.im_hi - y))
        return dre.square() + dim.square()

    def rad_upper(self, n: int) -> Dyadic:
        """Dyadic upper bound on the circumradius about the midpoint."""
        half_diag_sq = self.diam_sq().scaled(-2)
        return sqrt_bounds(half_diag_sq, n)[1]

    # rounding and division --------------------------------------------------

    def round_out(self, g: int) -> "Box":
        """Round endpoints outward to the grid 2**-g."""
        return Box(self.re_lo.floor_to(g), self.re_hi.ceil_to(g),
                   self.im_lo.floor_to(g), self.im_hi.ceil_to(g))

    def inflate(self, eps: Dyadic) -> "Box":
        return Box(self.re_lo - eps, self.re_hi + eps, self.im_lo - eps, self.im_hi + eps)

    def div_pos_interval(self, m: Dyadic, big: Dyadic, g: int) -> "Box":
        """self / [m, big] for a positive real interval, outward-rounded at 2**-g."""
        if m.sign <= 0:
            raise DomainError("division by an interval touching zero")

        def lo_div(e: Dyadic) -> Dyadic:
            q = e.as_fraction() / (big if e.sign >= 0 else m).as_fraction()
            return _frac_floor(q, g)

        def hi_div(e: Dyadic) -> Dyadic:
            q = e.as_fraction() / (m if e.sign >= 0 else big).as_fraction()
            return _frac_ceil(q, g)

        return Box(lo_div(self.re_lo), hi_div(self.re_hi),
                   lo_div(self.im_lo), hi_div(self.im_hi))

    def div(self, other: "Box", g: int) -> "Box":
        """Complex interval division via conj(other)/|other|^2; fails near 0."""
        den_lo, den_hi = other.mod_sq_bounds()
        if den_lo.sign <= 0:
            raise DomainError("divisor box meets zero")
        return (self * other.conj()).div_pos_interval(den_lo, den_hi, g)

    # misc -------------------------------------------------------------------

    def subdivide(self) -> List["Box"]:
        xm = (self.re_lo + self.re_hi).scaled(-1)
        ym = (self.im_lo + self.im_hi).scaled(-1)
        return [Box(self.re_lo, xm, self.im_lo, ym),
                Box(xm, self.re_hi, self.im_lo, ym),
                Box(self.re_lo, xm, ym, self.im_hi),
                Box(xm, self.re_hi, ym, self.im_hi)]

    def corners(self) -> Tuple[DyadicPoint, ...]:
        return (DyadicPoint((self.re_lo, self.im_lo)), DyadicPoint((self.re_hi, self.im_lo)),
                DyadicPoint((self.re_lo, self.im_hi)), DyadicPoint((self.re_hi, self.im_hi)))

    def to_floats(self) -> Tuple[float, float, float, float]:
        return (self.re_lo.float_down(), self.re_hi.float_up(),
                self.im_lo.float_down(), self.im_hi.float_up())

    def __eq__(self, other):
        return (isinstance(other, Box) and self.re_lo == other.re_lo
                and self.re_hi == other.re_hi and self.im_lo == other.im_lo
                and self.im_hi == other.im_hi)

    def __hash__(self):
        return hash((self.re_lo, self.re_hi, self.im_lo, self.im_hi))

    def __repr__(self):
        return (f"Box([{self.re_lo}, {self.re_hi}] + "
                f"[{self.im_lo}, {self.im_hi}]i)")


def _frac_floor(q: Fraction, g: int) -> Dyadic:
    return Dyadic((q.numerator << g) // q.denominator, g)


def _frac_ceil(q: Fraction, g: int) -> Dyadic:
    return Dyadic(-((-q.numerator << g) // q.denominator), g)
