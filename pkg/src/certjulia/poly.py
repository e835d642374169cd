"""Interval-certified polynomial evaluation, iteration, and escape radii."""
from __future__ import annotations

import threading
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, Tuple

from .config import DEFAULT_MAX_BITS, precision_schedule
from .dyadic import (Dyadic, DyadicPoint, ONE, TWO, ZERO, NumberLike,
                     as_fraction, sqrt_bounds)
from .errors import DomainError, InputError, WidthBlowup
from .intervals import Box
from .oracles import ComplexOracle

_COEFF_CHECK_BITS = 16


class PolyEnclosure:
    """Polynomial with oracle coefficients, ascending order a_0 .. a_d."""

    def __init__(self, coeff_oracles: Sequence[ComplexOracle], name: str = ""):
        coeff_oracles = list(coeff_oracles)
        if len(coeff_oracles) < 3:
            raise DomainError("degree must be at least 2")
        self.coeff_oracles = coeff_oracles
        self.degree = len(coeff_oracles) - 1
        self.name = name or f"degree-{self.degree} polynomial"
        self._box_memo: dict = {}
        self._lock = threading.Lock()
        self._radius: Optional[Dyadic] = None
        lead = self.coeff_boxes(_COEFF_CHECK_BITS)[-1]
        if lead.mod_sq_bounds()[0].sign <= 0:
            raise DomainError("leading coefficient enclosure meets zero")
        self._exact_quad = self._detect_exact_quadratic()

    # constructors -----------------------------------------------------------

    @staticmethod
    def exact(*coeffs: NumberLike) -> "PolyEnclosure":
        """Exact dyadic coefficients, ascending; reals or (re, im) pairs."""
        oracles = []
        for a in coeffs:
            if isinstance(a, tuple):
                oracles.append(ComplexOracle.exact(*a))
            else:
                oracles.append(ComplexOracle.exact(a))
        return PolyEnclosure(oracles)

    @staticmethod
    def quadratic(c) -> "PolyEnclosure":
        """z^2 + c; c may be a ComplexOracle, a number, or an (re, im) pair."""
        if not isinstance(c, ComplexOracle):
            if isinstance(c, tuple):
                c = ComplexOracle.of_numbers(*c)
            else:
                c = ComplexOracle.of_numbers(c)
        one = ComplexOracle.exact(1)
        zero = ComplexOracle.exact(0)
        return PolyEnclosure([c, zero, one], name=f"z^2 + ({c.name})")

    # coefficients -----------------------------------------------------------

    def coeff_boxes(self, n: int) -> List[Box]:
        """Coefficient rectangles of width < 2**(-n+1), memoized per n."""
        with self._lock:
            got = self._box_memo.get(n)
        if got is not None:
            return got
        boxes = []
        half = Dyadic(1, n + 1)
        for o in self.coeff_oracles:
            p = o.exact_point
            if p is not None:
                boxes.append(Box.point(p))
            else:
                boxes.append(Box.around(o.query(n), half))
        with self._lock:
            self._box_memo[n] = boxes
        return boxes

    def _detect_exact_quadratic(self) -> Optional[DyadicPoint]:
        if self.degree != 2:
            return None
        c, b, a = (o.exact_point for o in self.coeff_oracles)
        if c is None or b is None or a is None:
            return None
        if a == DyadicPoint.of(1, 0) and b == DyadicPoint.of(0, 0):
            return c
        return None

    def is_exact_quadratic(self) -> Optional[DyadicPoint]:
        """The exact c when the polynomial is literally z^2 + c, else None."""
        return self._exact_quad

    def derivative_boxes(self, n: int) -> List[Box]:
        """Coefficient rectangles of p', ascending (degree drops by one)."""
        boxes = self.coeff_boxes(n)
        return [boxes[i].scale_int(i) for i in range(1, self.degree + 1)]

    def float_coeff_discs(self, n: int) -> List[Tuple[complex, float]]:
        """Descending-order (center, radius) discs covering each coefficient."""
        discs = []
        for box in reversed(self.coeff_boxes(n)):
            re_lo, re_hi, im_lo, im_hi = box.to_floats()
            cx = 0.5 * (re_lo + re_hi)
            cy = 0.5 * (im_lo + im_hi)
            dx = max(cx - re_lo, re_hi - cx, 0.0)
            dy = max(cy - im_lo, im_hi - cy, 0.0)
            rad = ((dx * dx + dy * dy) ** 0.5) * (1.0 + 1e-12) + 1e-290
            discs.append((complex(cx, cy), rad))
        return discs

    # evaluation ---------------------------------------------------------------

    def enclose_eval(self, z: Box, n: int) -> Box:
        """Rectangle containing p(w) for all w in z and all consistent p."""
        if n < 0:
            raise InputError("precision must be nonnegative")
        g = n + 24
        c = self.is_exact_quadratic()
        if c is not None:
            # square() tracks the re/im dependency, so this is tighter
            # (and cheaper) than the generic Horner product
            return z.square().add_point(c).round_out(g)
        boxes = self.coeff_boxes(n)
        acc = boxes[-1]
        for b in reversed(boxes[:-1]):
            acc = (acc * z + b).round_out(g)
        return acc

    def eval_point(self, w: DyadicPoint, n: int) -> Box:
        return self.enclose_eval(Box.point(w), n)

    def escape_radius(self) -> Dyadic:
        """R with |p(z)| >= 2|z| for |z| >= R, so the filled set is in B(0,R).

        R*|a_d| >= 1 + sum|a_i| + max(1, |a_d|) forces |a_d| R - sum >= 2,
        and then |p(z)| >= |z|^(d-1) (|a_d||z| - sum) >= 2|z| beyond R >= 1.
        """
        if self._radius is not None:
            return self._radius
        boxes = self.coeff_boxes(_COEFF_CHECK_BITS)
        total = ZERO
        for b in boxes[:-1]:
            total = total + sqrt_bounds(b.mod_sq_bounds()[1], _COEFF_CHECK_BITS)[1]
        lead_lo = sqrt_bounds(boxes[-1].mod_sq_bounds()[0], _COEFF_CHECK_BITS)[0]
        if lead_lo.sign <= 0:
            raise DomainError("leading coefficient enclosure meets zero")
        floor_term = lead_lo if lead_lo > ONE else ONE
        quotient = (ONE + total + floor_term).as_fraction() / lead_lo.as_fraction()
        r = Dyadic(-((-quotient.numerator << _COEFF_CHECK_BITS) // quotient.denominator),
                   _COEFF_CHECK_BITS)
        if r < TWO:
            r = TWO
        self._radius = r
        return r

    def blowup_diameter(self) -> Dyadic:
        return self.escape_radius().scaled(1) + ONE

    def enclose_orbit(self, z: Box, k: int, n: int) -> Box:
        """Rectangle containing p^k(w) for all w in z.

        Internal precision climbs a doubling schedule until the output is
        2**-n wide or extra precision stops paying; a diameter past the
        blowup guard raises WidthBlowup so the caller can subdivide z.
        """
        if k < 0:
            raise InputError("iterate count must be nonnegative")
        if k == 0:
            return z
        target = Dyadic(1, n) if n >= 0 else Dyadic(1 << -n)
        cap = self.blowup_diameter()
        prev_width: Optional[Dyadic] = None
        best: Optional[Box] = None
        for t in precision_schedule(max(n + 8, 8)):
            acc = z
            for _ in range(k):
                acc = self.enclose_eval(acc, t)
                if acc.width() > cap:
                    raise WidthBlowup("orbit enclosure exceeded the escape frame",
                                      bits=t)
            w = acc.width()
            best = acc
            if w <= target:
                return acc
            if prev_width is not None and w.scaled(3) >= prev_width.scaled(2):
                # more bits no longer shrink the box: true width dominates
                return acc
            prev_width = w
        return best

    def certify_escape(self, z: Box, max_steps: int, n: int) -> Tuple[bool, int]:
        """(True, steps) once the whole box orbit certifiably leaves B(0, R)."""
        r_sq = self.escape_radius().square()
        cap = self.blowup_diameter()
        acc = z
        for step in range(max_steps):
            if acc.mod_sq_bounds()[0] > r_sq:
                return True, step
            if acc.width() > cap:
                return False, step
            acc = self.enclose_eval(acc, n)
        return False, max_steps

    def orbit_approx(self, z: ComplexOracle, k: int, m: int) -> DyadicPoint:
        """Point within 2**-m of p^k(z), by adaptive interval iteration."""
        if k < 0 or m < 0:
            raise InputError("iterate count and precision must be nonnegative")
        target = Dyadic(1, m + 1)
        cap = self.blowup_diameter()
        exact = z.exact_point
        for t in precision_schedule(m + 8):
            start = Box.point(exact) if exact is not None else \
                Box.around(z.query(t), Dyadic(1, t))
            acc = start
            ok = True
            for _ in range(k):
                acc = self.enclose_eval(acc, t)
                if acc.width() > cap:
                    ok = False
                    break
            if ok and acc.width() <= target:
                return acc.mid()
        raise WidthBlowup("orbit point needs more precision than the cap allows",
                          bits=DEFAULT_MAX_BITS)


# text format ------------------------------------------------------------------


def poly_from_text(text: str,
                   resolver: Optional[Callable[[str], ComplexOracle]] = None
                   ) -> PolyEnclosure:
    """Parse `POLY d=<degree>` plus coefficient lines, or `QUAD c=<re> <im>`."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise InputError("empty polynomial text")
    head = lines[0].split()
    if head[0] == "QUAD":
        if len(head) != 3 or not head[1].startswith("c="):
            raise InputError(f"bad quadratic header: {lines[0]!r}")
        re_part = head[1].removeprefix("c=")
        return PolyEnclosure.quadratic((re_part, head[2]))
    if head[0] != "POLY" or len(head) != 2 or not head[1].startswith("d="):
        raise InputError(f"bad polynomial header: {lines[0]!r}")
    try:
        degree = int(head[1].removeprefix("d="))
    except ValueError as e:
        raise InputError(f"bad degree in {lines[0]!r}") from e
    if len(lines) - 1 != degree + 1:
        raise InputError(f"expected {degree + 1} coefficient lines")
    oracles = []
    for ln in lines[1:]:
        if ln.startswith("oracle:"):
            if resolver is None:
                raise InputError("oracle coefficients need a resolver")
            oracles.append(resolver(ln.removeprefix("oracle:")))
            continue
        parts = ln.split()
        if len(parts) != 2:
            raise InputError(f"bad coefficient line: {ln!r}")
        oracles.append(ComplexOracle.of_numbers(parts[0], parts[1]))
    return PolyEnclosure(oracles)
