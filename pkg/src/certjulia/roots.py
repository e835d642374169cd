"""Certified isolation and classification of periodic points.

All certification paths use exact dyadic interval arithmetic. A float disc
prefilter (fastball) only discards boxes it can certify root-free; it never
admits anything the exact path would reject, so rigor is unaffected.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import fastball
from .config import DEFAULT_CONFIG, EngineConfig, max_bits
from .dyadic import Dyadic, DyadicPoint, ONE
from .errors import (CertificateInvalid, DomainError, InputError,
                     MultipleRootUnresolved, PeriodCapExceeded)
from .certificates import OrbitCertificate
from .intervals import Box
from .poly import PolyEnclosure


class StabilityClass(Enum):
    REPELLING = "Repelling"
    ATTRACTING = "Attracting"
    MAYBE_INDIFFERENT = "Indifferent?"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class PeriodicPointRecord:
    period: int
    location: Box
    multiplier: Box
    cls: StabilityClass
    certified: bool  # True: location isolates exactly one solution


def classify_multiplier(mult: Box) -> StabilityClass:
    lo_sq, hi_sq = mult.mod_sq_bounds()
    if lo_sq > ONE:
        return StabilityClass.REPELLING
    if hi_sq < ONE:
        return StabilityClass.ATTRACTING
    if mult.width() < Dyadic(1, 4):
        return StabilityClass.MAYBE_INDIFFERENT
    return StabilityClass.UNKNOWN


# exact interval Newton -------------------------------------------------------


def _eval_boxes(coeff_boxes: Sequence[Box], z: Box, g: int) -> Box:
    acc = coeff_boxes[-1]
    for b in reversed(coeff_boxes[:-1]):
        acc = (acc * z + b).round_out(g)
    return acc


def _orbit_chain(p: PolyEnclosure, x: Box, m: int, t: int,
                 frame: Optional[Box]) -> Optional[List[Box]]:
    """[x, p(x), ..., p^m(x)], optionally clamped to the frame.

    With a frame, each stage is intersected with it; points whose orbit
    leaves the frame are not periodic, so clamped enclosures stay sound
    for root exclusion. Returns None if some stage leaves the frame whole.
    """
    chain = [x]
    acc = x
    for _ in range(m):
        acc = p.enclose_eval(acc, t)
        if frame is not None:
            acc = acc.intersection(frame)
            if acc is None:
                return None
        chain.append(acc)
    return chain


def _derivative_product(p: PolyEnclosure, chain: Sequence[Box], t: int) -> Box:
    g = t + 24
    if p.is_exact_quadratic() is not None:
        acc = chain[0].scale_int(2)
        for x in chain[1:-1]:
            acc = (acc * x.scale_int(2)).round_out(g)
        return acc
    der = p.derivative_boxes(t)
    acc = Box.point(DyadicPoint.of(1, 0))
    for x in chain[:-1]:
        acc = (acc * _eval_boxes(der, x, g)).round_out(g)
    return acc


_CERTIFIED = "certified"
_EXCLUDED = "excluded"
_SPLIT = "split"


def _float_newton_gate(centers: Sequence[complex], mid: complex, w: float,
                       m: int) -> bool:
    """Predict whether exact interval Newton can contract on this box.

    Purely advisory: a False only defers to subdivision, which is always
    sound, so float roundoff here cannot taint any certificate. For z^2 + c
    the derivative-product disc is modeled so the prediction tracks the
    exact image halfwidth; other polynomials get a plain step threshold.
    """
    if not (w > 1e-9):
        return True  # below float resolution; let the exact step decide
    quad = (len(centers) == 3 and centers[0] == 1.0 and centers[1] == 0.0)
    z = mid
    dc = complex(1.0, 0.0)  # derivative-product disc: center and halfwidth
    dr = 0.0
    rad = 1.07 * w  # circumradius of the inflated box the exact step uses
    for _ in range(m):
        if quad:
            az = abs(z)
            dr = dr * 2.0 * (az + rad) + abs(dc) * 2.0 * rad
            dc = dc * (2.0 * z)
            rad = (2.0 * az + rad) * rad
            z = z * z + centers[2]
        else:
            pv = centers[0]
            dv = complex(0.0, 0.0)
            for c in centers[1:]:
                dv = dv * z + pv
                pv = pv * z + c
            dc *= dv
            z = pv
        if not (abs(z.real) + abs(z.imag) < 1e18):
            return False
    deriv = dc - 1.0
    ad = abs(deriv)
    if not (1e-300 < ad < 1e18):
        return False
    f = z - mid
    if not quad:
        return abs(f) <= 0.75 * w * ad
    if not (dr < 0.7 * ad):
        return False  # the exact derivative enclosure will straddle zero
    step = f / deriv
    h = abs(f) * dr / (ad * (ad - dr))  # image halfwidth after disc division
    bound = 0.72 * w
    if abs(step.real) + h <= bound and abs(step.imag) + h <= bound:
        return True  # image predicted strictly inside: certification likely
    if max(abs(step.real), abs(step.imag)) >= 0.85 * w + h:
        return True  # image predicted disjoint: exclusion likely
    return False


def _newton_step(p: PolyEnclosure, x: Box, m: int, t: int) -> Tuple[str, Optional[Box]]:
    """One interval Newton pass for p^m(z) - z = 0 on the box x.

    Mean value form: any root in x lies in mid - f(mid)/f'(x); an image
    strictly inside x proves existence and uniqueness of one root.
    """
    chain = _orbit_chain(p, x, m, t, None)
    deriv = _derivative_product(p, chain, t) - Box.point(DyadicPoint.of(1, 0))
    if deriv.mod_sq_bounds()[0].sign <= 0:
        return _SPLIT, None
    mid = x.mid()
    mid_box = Box.point(mid)
    acc = mid_box
    for _ in range(m):
        acc = p.enclose_eval(acc, t)
    f_mid = acc - mid_box
    newton = mid_box - f_mid.div(deriv, t + 8)
    shrunk = newton.intersection(x)
    if shrunk is None:
        return _EXCLUDED, None
    if x.contains_box_strictly(newton):
        return _CERTIFIED, shrunk
    return _SPLIT, shrunk


def _newton_refine(p: PolyEnclosure, x: Box, m: int, t: int,
                   target: Dyadic) -> Optional[Tuple[Box, Box, int]]:
    """Shrink a certified box to the target width; returns (box, mult, bits)."""
    cap = max_bits()
    while True:
        if x.width() <= target:
            chain = _orbit_chain(p, x, m, t, None)
            return x, _derivative_product(p, chain, t), t
        status, shrunk = _newton_step(p, x, m, t)
        if status == _EXCLUDED:
            return None
        if shrunk is not None and shrunk.width().scaled(3) < x.width().scaled(2):
            x = shrunk
            continue
        if shrunk is not None:
            x = shrunk
        if t >= cap:
            return None
        t = min(2 * t, cap)


# float screening --------------------------------------------------------------


def _screen_level(discs: Sequence[Tuple[complex, float]], boxes: Sequence[Box],
                  m: int, radius_hi: float) -> Tuple[np.ndarray, np.ndarray]:
    """(excluded, newton_worthy) flags for one subdivision level.

    A box is excluded when its disc orbit certifiably escapes or the final
    disc of p^m(x) - x omits zero. Newton-worthy means the same disc
    plausibly contains zero, so the exact Newton attempt is likely to pay.
    """
    n = len(boxes)
    zc = np.empty(n, dtype=complex)
    zr = np.empty(n, dtype=float)
    for i, b in enumerate(boxes):
        re_lo, re_hi, im_lo, im_hi = b.to_floats()
        cx, cy = 0.5 * (re_lo + re_hi), 0.5 * (im_lo + im_hi)
        zc[i] = complex(cx, cy)
        dx = max(cx - re_lo, re_hi - cx, 0.0)
        dy = max(cy - im_lo, im_hi - cy, 0.0)
        zr[i] = ((dx * dx + dy * dy) ** 0.5) * (1.0 + 1e-12) + 1e-290
    excluded = np.zeros(n, dtype=bool)
    alive = np.ones(n, dtype=bool)
    c, r = zc.copy(), zr.copy()
    bar = radius_hi * (1.0 + 1e-12)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(m):
            esc = alive & (fastball.mod_lower(c, r) > bar)
            excluded |= esc
            alive &= ~esc
            blown = alive & ((r > 1e12) | ~np.isfinite(c) | ~np.isfinite(r))
            alive &= ~blown
            idx = np.nonzero(alive)[0]
            if idx.size == 0:
                break
            nc, nr = fastball.poly_eval(discs, c[idx], r[idx])
            c[idx], r[idx] = nc, nr
        idx = np.nonzero(alive)[0]
        newton_worthy = np.zeros(n, dtype=bool)
        if idx.size:
            fc = c[idx] - zc[idx]
            fr = r[idx] + zr[idx]
            fr = (fr + np.abs(fc) * 1e-12 + 1e-290) * (1.0 + 1e-12)
            gap = np.abs(fc) * (1.0 - 1e-12) - fr
            ok = np.isfinite(gap)
            excluded[idx[ok & (gap > 0.0)]] = True
            newton_worthy[idx] = ok & (np.abs(fc) <= 2.0 * fr)
    newton_worthy &= ~excluded
    return excluded, newton_worthy


# isolation ---------------------------------------------------------------------


def _cluster_residuals(residual: List[Box], gap: Dyadic) -> List[Box]:
    """Merge residual boxes within `gap` of each other into hulls.

    Borderline exclusion leaves thin root-free rings between stalled boxes
    around one root cluster, so touch-only merging would fragment it.
    """
    n = len(residual)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    grown = [b.inflate(gap) for b in residual]
    for i in range(n):
        for j in range(i + 1, n):
            if grown[i].intersects(residual[j]):
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[ri] = rj
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(residual[i])
    hulls = [Box.hull_of(g) for g in groups.values()]
    merged = True
    while merged and len(hulls) > 1:
        merged = False
        for i in range(len(hulls)):
            for j in range(i + 1, len(hulls)):
                if hulls[i].intersects(hulls[j]):
                    hulls[i] = Box.hull_of([hulls[i], hulls[j]])
                    hulls.pop(j)
                    merged = True
                    break
            if merged:
                break
    return hulls


def _frame_box(p: PolyEnclosure) -> Box:
    r = p.escape_radius() + ONE
    return Box(-r, r, -r, r)


def _mid_complex(box: Box) -> complex:
    mx, my = box.mid()
    return complex(float(mx), float(my))


_BOX_BUDGET = 2_000_000


def _isolation_pass(p: PolyEnclosure, m: int, eps: Dyadic,
                    t: int) -> Tuple[List[Tuple[Box, Box, int]], List[Box]]:
    """One full subdivision sweep; returns (certified triples, residual boxes)."""
    frame = _frame_box(p)
    radius_hi = p.escape_radius().float_up()
    discs = p.float_coeff_discs(max(t, 24))
    centers = [c for c, _ in discs]
    target = eps if eps < Dyadic(1, 3) else Dyadic(1, 3)
    # certify uniqueness before boxes shrink below the stall width
    stall_width = Dyadic(1, max(t - 4, eps.exp + 12))
    newton_width = Dyadic(1, 2)
    level: List[Box] = [Box(frame.re_lo, frame.re_hi, frame.im_lo, frame.im_hi)]
    certified: List[Tuple[Box, Box, int, Box]] = []
    residual: List[Box] = []
    seen = 0
    while level:
        seen += len(level)
        if seen > _BOX_BUDGET:
            raise MultipleRootUnresolved(
                f"period {m} subdivision exhausted its box budget")
        excluded, worthy = _screen_level(discs, level, m, radius_hi)
        nxt: List[Box] = []
        for i, x in enumerate(level):
            if excluded[i]:
                continue
            box = x
            if (worthy[i] and box.width() <= newton_width
                    and _float_newton_gate(centers, _mid_complex(box),
                                           box.width().float_up(), m)):
                # roots sitting exactly on grid lines can never be interior
                # to a grid box, so certify on a slightly inflated copy
                grown = box.inflate(box.width().scaled(-2))
                status, shrunk = _newton_step(p, grown, m, t)
                if status == _EXCLUDED:
                    continue
                if status == _CERTIFIED:
                    refined = _newton_refine(p, shrunk, m, t, target)
                    if refined is not None:
                        certified.append(refined + (grown,))
                        continue
                    residual.append(shrunk)
                    continue
                if shrunk is not None:
                    clipped = shrunk.intersection(box)
                    if clipped is None:
                        continue
                    box = clipped
            if box.width() <= stall_width:
                residual.append(box)
                continue
            nxt.extend(box.subdivide())
        level = nxt
    return _dedupe_certified(certified), residual


def _dedupe_certified(certified: List[Tuple[Box, Box, int, Box]]
                      ) -> List[Tuple[Box, Box, int]]:
    """Drop repeat certifications of one root from neighboring grid boxes.

    Two entries describe the same root when one refined box lies inside the
    other's certified-unique region, where exactly one root exists.
    """
    order = sorted(range(len(certified)),
                   key=lambda i: (certified[i][0].re_lo.as_fraction(),
                                  certified[i][0].im_lo.as_fraction()))
    kept: List[Tuple[Box, Box, int, Box]] = []
    active: List[int] = []  # indices into kept, pruned by x-extent
    for idx in order:
        box, mult, bits, region = certified[idx]
        duplicate = False
        alive = []
        for j in active:
            kbox, _, _, kregion = kept[j]
            if kbox.re_hi < box.re_lo:
                continue
            alive.append(j)
            if duplicate or not kbox.intersects(box):
                continue
            if kregion.contains_box(box) or region.contains_box(kbox):
                duplicate = True
        active = alive
        if not duplicate:
            kept.append((box, mult, bits, region))
            active.append(len(kept) - 1)
    return [(box, mult, bits) for box, mult, bits, _ in kept]


def isolate_periodic(p: PolyEnclosure, m: int, eps: Dyadic,
                     period_cap: Optional[int] = None,
                     config: EngineConfig = DEFAULT_CONFIG
                     ) -> List[PeriodicPointRecord]:
    """Isolate all solutions of p^m(z) = z inside the escape ball.

    Simple roots come back certified with width <= eps and a classified
    multiplier enclosure; root clusters that resist separation come back
    as one Unknown record each (tight but not isolating).
    """
    if m < 1:
        raise InputError("period must be at least 1")
    if eps.sign <= 0:
        raise DomainError("isolation width must be positive")
    cap = period_cap if period_cap is not None else config.period_cap
    if m > cap:
        raise PeriodCapExceeded(f"period {m} above cap {cap}")

    t = max(24, eps.exp + 8, 4 * m)
    bits_cap = max_bits()
    while True:
        certified, residual = _isolation_pass(p, m, eps, t)
        clusters = _cluster_residuals(residual, eps)
        wide = eps.scaled(2)
        if all(c.width() <= wide for c in clusters) or t >= bits_cap:
            break
        t = min(2 * t, bits_cap)
    if any(c.width() > eps.scaled(4) for c in clusters):
        raise MultipleRootUnresolved(
            f"period {m} root cluster not separable at {t} bits")

    # a certified box overlapping a cluster hull cannot stay isolating;
    # fold it into the cluster so record boxes remain pairwise disjoint
    kept = []
    for triple in certified:
        box = triple[0]
        hit = next((k for k, c in enumerate(clusters)
                    if c.intersects(box)), None)
        if hit is None:
            kept.append(triple)
        else:
            clusters[hit] = Box.hull_of([clusters[hit], box])
    certified = kept

    records = []
    for box, mult, _bits in certified:
        records.append(PeriodicPointRecord(
            period=m, location=box, multiplier=mult,
            cls=classify_multiplier(mult), certified=True))
    for hull in clusters:
        chain = _orbit_chain(p, hull, m, t, None)
        mult = _derivative_product(p, chain, t)
        records.append(PeriodicPointRecord(
            period=m, location=hull, multiplier=mult,
            cls=StabilityClass.UNKNOWN, certified=False))
    records.sort(key=lambda rec: (rec.location.re_lo.as_fraction(),
                                  rec.location.im_lo.as_fraction()))
    return records


# enumeration -------------------------------------------------------------------


@dataclass(frozen=True)
class PeriodCapMarker:
    cap: int


IsolateFn = Callable[[PolyEnclosure, int, Dyadic], List[PeriodicPointRecord]]


def enumerate_repelling(p: PolyEnclosure, eps: Dyadic,
                        period_cap: Optional[int] = None,
                        config: EngineConfig = DEFAULT_CONFIG,
                        isolate: Optional[IsolateFn] = None
                        ) -> Iterator[Union[DyadicPoint, PeriodCapMarker]]:
    """Stream centers of repelling records, stage m = 1, 2, ...

    Points of period dividing m reappear at stage m; the stream ends with
    a PeriodCapMarker once the stage cap is reached.
    """
    cap = period_cap if period_cap is not None else config.period_cap
    if isolate is None:
        isolate = lambda poly, m, e: isolate_periodic(poly, m, e,
                                                      period_cap=cap,
                                                      config=config)
    for m in range(1, cap + 1):
        for rec in isolate(p, m, eps):
            if rec.cls is StabilityClass.REPELLING:
                yield rec.location.mid()
    yield PeriodCapMarker(cap)


def group_orbits(p: PolyEnclosure,
                 records: Sequence[PeriodicPointRecord]
                 ) -> List[Tuple[int, ...]]:
    """Group record indices into cycles by following box images under p.

    Each certified record's location is mapped through p; the unique record
    box meeting the image is its successor. Cycle length is the exact period
    (divisor-period points close early). Uncertified cluster records come
    back as singletons since their boxes cannot be linked rigorously.
    """
    if not records:
        return []
    scale = 0
    for r in records:
        w = r.location.width()
        if w.sign > 0:
            scale = max(scale, w.exp - abs(w.num).bit_length() + 1)
    t = max(24, scale + 8)
    succ: dict = {}
    for i, rec in enumerate(records):
        if not rec.certified:
            continue
        img = p.enclose_eval(rec.location, t)
        hits = [j for j, other in enumerate(records)
                if other.certified and other.location.intersects(img)]
        if len(hits) != 1:
            raise MultipleRootUnresolved(
                "record boxes too wide to link into orbits; isolate tighter")
        succ[i] = hits[0]
    orbits: List[Tuple[int, ...]] = []
    done = set()
    for i, rec in enumerate(records):
        if i in done:
            continue
        if not rec.certified:
            orbits.append((i,))
            done.add(i)
            continue
        cycle = [i]
        done.add(i)
        j = succ[i]
        while j != i:
            if j in done:
                raise MultipleRootUnresolved(
                    "orbit linking collided; isolate with smaller width")
            cycle.append(j)
            done.add(j)
            j = succ[j]
        if records[i].period % len(cycle) != 0:
            raise MultipleRootUnresolved(
                "linked cycle length does not divide the stage period")
        orbits.append(tuple(cycle))
    return orbits


# certificate orbit refinement ----------------------------------------------------


def _mean_value_excludes(p: PolyEnclosure, x: Box, m: int, t: int) -> bool:
    """Certify p^m(z) != z on x via f(mid) + f'(x)(x - mid).

    The centered form keeps its accuracy at multiple roots, where the plain
    chain enclosure of p^m(x) - x is too loose to exclude anything nearby.
    """
    chain = _orbit_chain(p, x, m, t, None)
    deriv = _derivative_product(p, chain, t) - Box.point(DyadicPoint.of(1, 0))
    mid_box = Box.point(x.mid())
    acc = mid_box
    for _ in range(m):
        acc = p.enclose_eval(acc, t)
    value = (acc - mid_box) + (deriv * (x - mid_box)).round_out(t + 8)
    return value.mod_sq_bounds()[0].sign > 0


def _exclusion_shrink(p: PolyEnclosure, start: Box, m: int, n: int) -> Box:
    """Tighten a root ball by pure subdivision exclusion (parabolic fallback)."""
    frame = _frame_box(p)
    target = Dyadic(1, n + 1)
    bits_cap = max_bits()
    t = max(24, 2 * n + 10)
    stall = Dyadic(1, n + 6)
    while True:
        level = [start]
        residual: List[Box] = []
        steps = 0
        while level:
            if steps > 200_000:
                # out of budget: keep every live box so the hull stays sound
                residual.extend(level)
                break
            nxt = []
            for x in level:
                steps += 1
                chain = _orbit_chain(p, x, m, t, frame)
                if chain is None:
                    continue
                value = chain[-1] - x
                if value.mod_sq_bounds()[0].sign > 0:
                    continue
                if _mean_value_excludes(p, x, m, t):
                    continue
                if x.width() <= stall:
                    residual.append(x)
                else:
                    nxt.extend(x.subdivide())
            level = nxt
        if not residual:
            raise CertificateInvalid("isolating ball contains no orbit point")
        hull = Box.hull_of(residual)
        if hull.width() <= target:
            return hull
        if t >= bits_cap:
            raise CertificateInvalid(
                "orbit ball does not shrink at the precision cap")
        t = min(2 * t, bits_cap)


def refine_certificate_orbit(p: PolyEnclosure, cert: OrbitCertificate, i: int,
                             n: int, config: EngineConfig = DEFAULT_CONFIG
                             ) -> List[DyadicPoint]:
    """The period-k_i orbit of certificate orbit i, to within 2**-n each."""
    if not 0 <= i < len(cert.orbits):
        raise InputError(f"certificate has no orbit {i}")
    orbit = cert.orbits[i]
    m = orbit.period
    target = Dyadic(1, n + 1)
    points = []
    for ball in orbit.balls:
        x = Box.around(ball.center, ball.radius)
        t = max(24, n + 8, 4 * m)
        status, shrunk = _newton_step(p, x, m, t)
        refined: Optional[Box] = None
        if status == _CERTIFIED:
            got = _newton_refine(p, shrunk, m, t, target)
            if got is not None:
                refined = got[0]
        elif status == _EXCLUDED:
            raise CertificateInvalid("isolating ball contains no orbit point")
        if refined is None:
            refined = _exclusion_shrink(p, x, m, n)
        points.append(refined.mid())
    return points
