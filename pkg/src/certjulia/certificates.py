"""Orbit certificates: non-repelling orbit data supplied alongside a polynomial.

A certificate lists periodic orbits with isolating balls and, per orbit,
either an attracting domain (balls), parabolic petals (sectors), or a Siegel
companion descriptor. The library validates structure; dynamical truth of
the domains is the supplier's contract, exactly like oracle accuracy.
"""
from __future__ import annotations

import json
from enum import Enum
from typing import List, Sequence, Union

from .dyadic import Dyadic, DyadicPoint, ONE, sqrt_bounds
from .errors import CertificateInvalid
from .geometry import Ball
from .intervals import Box

_SQRT_BITS = 24


class OrbitKind(Enum):
    ATTRACTING = "attracting"
    PARABOLIC = "parabolic"
    SIEGEL = "siegel"


USE_BETA = "use-beta-fixed-point"


class Sector:
    """Closed circular sector: vertex, direction axis, half-angle by cosine.

    Membership of z means |z - vertex| <= radius and the angle between
    z - vertex and axis is at most arccos(cos_half). All tests are exact
    dyadic comparisons on squared forms.
    """

    __slots__ = ("vertex", "axis", "cos_half", "radius")

    def __init__(self, vertex: DyadicPoint, axis: DyadicPoint, cos_half: Dyadic,
                 radius: Dyadic):
        if radius.sign <= 0:
            raise CertificateInvalid("sector radius must be positive")
        if axis.coords[0].is_zero() and axis.coords[1].is_zero():
            raise CertificateInvalid("sector axis must be nonzero")
        if cos_half.sign < 0 or cos_half > ONE:
            raise CertificateInvalid("cos_half must lie in [0, 1]")
        self.vertex = vertex
        self.axis = axis
        self.cos_half = cos_half
        self.radius = radius

    def _slack_lower(self, z: DyadicPoint) -> Dyadic:
        """Lower bound of dot(w, axis) - cos_half |w| |axis|, w = z - vertex."""
        w = z - self.vertex
        dot = (w.coords[0] * self.axis.coords[0]
               + w.coords[1] * self.axis.coords[1])
        prod_sq = w.dist_sq(DyadicPoint.of(0, 0)) * \
            self.axis.dist_sq(DyadicPoint.of(0, 0))
        prod_hi = sqrt_bounds(prod_sq, _SQRT_BITS)[1]
        return dot - self.cos_half * prod_hi

    def contains_point(self, z: DyadicPoint) -> bool:
        if not z.within(self.vertex, self.radius):
            return False
        return self._slack_lower(z).sign >= 0

    def contains_ball(self, center: DyadicPoint, r: Dyadic) -> bool:
        """Whole closed ball inside the sector, by Lipschitz slack.

        The slack function is (1 + cos_half)-Lipschitz per unit axis length,
        so slack >= 2 r |axis| at the center keeps the ball in the cone.
        """
        if r.sign < 0:
            return False
        inner = self.radius - r
        if inner.sign < 0 or not center.within(self.vertex, inner):
            return False
        axis_hi = sqrt_bounds(self.axis.dist_sq(DyadicPoint.of(0, 0)),
                              _SQRT_BITS)[1]
        return self._slack_lower(center) >= r.scaled(1) * axis_hi

    def contains_box(self, x: Box) -> bool:
        """Corner test; valid since the slack is concave and |w| convex."""
        r_sq = self.radius.square()
        for corner in x.corners():
            if corner.dist_sq(self.vertex) > r_sq:
                return False
            if self._slack_lower(corner).sign < 0:
                return False
        return True

    def to_json(self) -> dict:
        return {"vertex": [str(c) for c in self.vertex.coords],
                "axis": [str(c) for c in self.axis.coords],
                "cos_half": str(self.cos_half),
                "radius": str(self.radius)}

    @staticmethod
    def from_json(obj: dict) -> "Sector":
        try:
            vertex = DyadicPoint([Dyadic.parse(s) for s in obj["vertex"]])
            axis = DyadicPoint([Dyadic.parse(s) for s in obj["axis"]])
            return Sector(vertex, axis, Dyadic.parse(obj["cos_half"]),
                          Dyadic.parse(obj["radius"]))
        except (KeyError, TypeError, ValueError) as e:
            raise CertificateInvalid(f"bad sector object: {e}") from e


Domain = Union[Ball, Sector]


def _ball_to_json(b: Ball) -> dict:
    return {"center": [str(c) for c in b.center.coords],
            "radius": str(b.radius)}


def _ball_from_json(obj: dict) -> Ball:
    try:
        center = DyadicPoint([Dyadic.parse(s) for s in obj["center"]])
        return Ball(center, Dyadic.parse(obj["radius"]))
    except (KeyError, TypeError, ValueError) as e:
        raise CertificateInvalid(f"bad ball object: {e}") from e


class OrbitSpec:
    """One certified orbit: period, isolating balls, kind, domain data."""

    __slots__ = ("period", "balls", "kind", "domains", "siegel_companion")

    def __init__(self, period: int, balls: Sequence[Ball], kind: OrbitKind,
                 domains: Sequence[Domain] = (),
                 siegel_companion: Union[str, Sequence[Ball], None] = None):
        if period < 1:
            raise CertificateInvalid("period must be at least 1")
        balls = list(balls)
        if len(balls) != period:
            raise CertificateInvalid(
                f"period {period} orbit needs {period} isolating balls, "
                f"got {len(balls)}")
        for b in balls:
            if b.dim != 2:
                raise CertificateInvalid("isolating balls must be planar")
            if b.radius.sign <= 0:
                raise CertificateInvalid("isolating balls need positive radius")
        domains = list(domains)
        if kind is OrbitKind.ATTRACTING:
            if not domains or not all(isinstance(d, Ball) for d in domains):
                raise CertificateInvalid("attracting orbit needs domain balls")
            if siegel_companion is not None:
                raise CertificateInvalid("companion only belongs to siegel kind")
        elif kind is OrbitKind.PARABOLIC:
            if not domains or not all(isinstance(d, Sector) for d in domains):
                raise CertificateInvalid("parabolic orbit needs petal sectors")
            if siegel_companion is not None:
                raise CertificateInvalid("companion only belongs to siegel kind")
        elif kind is OrbitKind.SIEGEL:
            if domains:
                raise CertificateInvalid("siegel orbit carries no domain cover")
            if siegel_companion is None:
                raise CertificateInvalid("siegel orbit needs a companion")
            if siegel_companion != USE_BETA:
                siegel_companion = list(siegel_companion)
                if not siegel_companion or \
                        not all(isinstance(b, Ball) for b in siegel_companion):
                    raise CertificateInvalid(
                        "companion must be isolating balls or the beta marker")
        self.period = period
        self.balls = balls
        self.kind = kind
        self.domains = domains
        self.siegel_companion = siegel_companion


class OrbitCertificate:
    """Finite certificate for all non-repelling orbits of a polynomial."""

    __slots__ = ("orbits",)

    def __init__(self, orbits: Sequence[OrbitSpec]):
        self.orbits = list(orbits)

    @property
    def periods(self) -> List[int]:
        return [o.period for o in self.orbits]

    def to_json(self) -> str:
        periods, balls, kinds, domains, companions = [], [], [], [], []
        for o in self.orbits:
            periods.append(o.period)
            balls.append([_ball_to_json(b) for b in o.balls])
            kinds.append(o.kind.value)
            if o.kind is OrbitKind.PARABOLIC:
                domains.append([s.to_json() for s in o.domains])
            elif o.kind is OrbitKind.ATTRACTING:
                domains.append([_ball_to_json(b) for b in o.domains])
            else:
                domains.append(None)
            if o.kind is OrbitKind.SIEGEL:
                if o.siegel_companion == USE_BETA:
                    companions.append(USE_BETA)
                else:
                    companions.append([_ball_to_json(b)
                                       for b in o.siegel_companion])
            else:
                companions.append(None)
        return json.dumps({"periods": periods, "balls": balls, "kind": kinds,
                           "domains": domains, "siegel_companion": companions},
                          indent=2)

    @staticmethod
    def from_json(text: str) -> "OrbitCertificate":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as e:
            raise CertificateInvalid(f"certificate is not valid JSON: {e}") from e
        if not isinstance(obj, dict):
            raise CertificateInvalid("certificate must be a JSON object")
        try:
            periods = obj["periods"]
            balls = obj["balls"]
            kinds = obj["kind"]
            domains = obj["domains"]
            companions = obj["siegel_companion"]
        except KeyError as e:
            raise CertificateInvalid(f"missing certificate field {e}") from e
        counts = {len(periods), len(balls), len(kinds), len(domains),
                  len(companions)}
        if len(counts) != 1:
            raise CertificateInvalid("certificate field lengths disagree")
        orbits = []
        for period, blist, kind_s, dlist, comp in zip(periods, balls, kinds,
                                                      domains, companions):
            try:
                kind = OrbitKind(kind_s)
            except ValueError as e:
                raise CertificateInvalid(f"unknown orbit kind {kind_s!r}") from e
            orbit_balls = [_ball_from_json(b) for b in blist]
            if kind is OrbitKind.PARABOLIC:
                doms: List[Domain] = [Sector.from_json(d) for d in (dlist or [])]
            elif kind is OrbitKind.ATTRACTING:
                doms = [_ball_from_json(d) for d in (dlist or [])]
            else:
                doms = []
            if comp is None or comp == USE_BETA:
                companion = comp
            else:
                companion = [_ball_from_json(b) for b in comp]
            orbits.append(OrbitSpec(period, orbit_balls, kind, doms, companion))
        return OrbitCertificate(orbits)


def empty_certificate() -> OrbitCertificate:
    """No non-repelling orbits (hyperbolic-with-attractor-at-infinity case)."""
    return OrbitCertificate([])


def parabolic_quarter_certificate() -> OrbitCertificate:
    """Hand certificate for z^2 + 1/4: one petal at 1/2 opening toward 0.

    The petal {|w| <= 1/4, angle(w, -1) <= arccos(23/32)} for w = z - 1/2 is
    forward invariant under w -> w + w^2 and attracted to 0: the modulus of
    1 + w stays below 1 on it and the argument drifts toward the axis.
    """
    half = Dyadic(1, 1)
    vertex = DyadicPoint.of(half, 0)
    sector = Sector(vertex, DyadicPoint.of(-1, 0), Dyadic(23, 5), Dyadic(1, 2))
    ball = Ball(vertex, Dyadic(1, 3))
    return OrbitCertificate([
        OrbitSpec(1, [ball], OrbitKind.PARABOLIC, [sector])])
