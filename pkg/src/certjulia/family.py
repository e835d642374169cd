"""Certified queries against the closure of the repelling-orbit surface.

The target set is the closure of {(z, c) : z in the Julia set of z^2 + c}
over a bounded parameter slab. Repelling periodic points are dense in
each Julia set, so the union over m of the period-m repelling surfaces
S_m = {(z, c) : f_c^m(z) = z, |multiplier| > 1} is dense in the target
set and certified grid covers of the S_m approximate it from inside.
Three query routes share that stage machinery:

  * a1_enumerate streams the 4-d stage covers at pitch 2**-(n+3);
  * m1_near_check semi-decides proximity to a stage cover, halting
    only with bit 1;
  * m2_basin_check semi-decides convergence to an attracting cycle or
    to infinity, which certifies positive distance from the target set,
    halting only with bit 0;
  * bbj_query dovetails the two and returns the first halting bit.
"""

import threading
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

from .config import DEFAULT_CONFIG, EngineConfig
from .dyadic import ONE, Dyadic, DyadicPoint, dist_sq_point_rect, sqrt_bounds
from .errors import (Inconclusive, InputError, PeriodCapExceeded,
                     PrecisionExhausted, WidthBlowup)
from .geometry import Ball, Cover
from .intervals import Box
from .machines import SemiVerdict, _Engine, attracting_trap_balls
from .oracles import ComplexOracle
from .poly import PolyEnclosure
from .roots import PeriodCapMarker

__all__ = [
    "FamilyPoint", "a1_enumerate",
    "m1_near_check", "m2_basin_check",
    "bbj_query", "bbj_slice_render",
]

_ORIGIN = DyadicPoint.of(0, 0)
_ONE_BOX = Box.point(DyadicPoint.of(1, 0))


@dataclass(frozen=True)
class FamilyPoint:
    """Query pair (z, c) for the parameter-family closure set."""

    z: ComplexOracle
    c: ComplexOracle


def _pow2_at_least(k: int) -> int:
    return 1 << (k - 1).bit_length()


# interval orbit algebra at one shared precision -----------------------------------


def _orbit_chain(z: Box, c: Box, m: int, g: int,
                 abort_sq: Optional[Dyadic] = None) -> Optional[List[Box]]:
    """Boxes [z, f(z), ..., f^m(z)] for f = w^2 + c, rounded out at 2**-g.

    With abort_sq set, returns None as soon as some iterate is certified
    to exceed that squared modulus: from there the orbit grows forever,
    so nothing in the input boxes can be m-periodic. Rounding at a fixed
    g keeps every box inclusion monotone in (z, c), so both the chain and
    the abort verdict are consistent across subdivision.
    """
    chain = [z]
    acc = z
    for _ in range(m):
        acc = (acc.square() + c).round_out(g)
        if abort_sq is not None and acc.mod_sq_bounds()[0] >= abort_sq:
            return None
        chain.append(acc)
    return chain


def _mult_box(chain: Sequence[Box], g: int) -> Box:
    """Multiplier enclosure prod 2 w_j over the first m chain entries."""
    acc = _ONE_BOX
    for w in chain[:-1]:
        acc = (acc * w.scale_int(2)).round_out(g)
    return acc


def _dc_box(chain: Sequence[Box], g: int) -> Box:
    """Enclosure of the c-derivative of f_c^m(z) along the chain.

    Follows s -> 2 w s + 1 from s = 0, the derivative recurrence of
    w -> w^2 + c in c at fixed z.
    """
    acc = Box.point(_ORIGIN)
    for w in chain[:-1]:
        acc = (acc * w.scale_int(2) + _ONE_BOX).round_out(g)
    return acc


def _newton_fiber(fixed: DyadicPoint, start: DyadicPoint, m: int, r: Dyadic,
                  g: int, tol: Dyadic, solve_c: bool
                  ) -> Optional[Tuple[Box, Box]]:
    """Certified unique m-periodic solution along one coordinate fiber.

    solve_c False: solve f_c^m(z) = z for z with c = fixed;
    solve_c True:  solve f_c^m(z) = z for c with z = fixed.
    Returns (root box, multiplier box) once interval Newton certifies
    existence and uniqueness inside the square around start of halfwidth
    r, then contracts to width tol; None when certification fails.
    """

    def chain_over(x: Box) -> Optional[List[Box]]:
        if solve_c:
            return _orbit_chain(Box.point(fixed), x, m, g)
        return _orbit_chain(x, Box.point(fixed), m, g)

    x = Box.around(start, r)
    certified = False
    for _ in range(24):
        chain = chain_over(x)
        if solve_c:
            deriv = _dc_box(chain, g)
        else:
            deriv = _mult_box(chain, g) - _ONE_BOX
        if deriv.mod_sq_bounds()[0].sign <= 0:
            return None
        mid = x.mid()
        mid_chain = chain_over(Box.point(mid))
        resid = mid_chain[-1] - Box.point(fixed if solve_c else mid)
        shot = Box.point(mid) - resid.div(deriv, g)
        if x.contains_box_strictly(shot):
            certified = True
        nxt = shot.intersection(x)
        if nxt is None:
            return None    # Newton image misses x entirely: no root here
        if certified and nxt.width() <= tol:
            x = nxt
            break
        if nxt.width() == x.width() and certified:
            x = nxt
            break
        x = nxt
    if not certified:
        return None
    return x, _mult_box(chain_over(x), g)


# one period stage of the surface cover --------------------------------------------


class _Stage:
    """Deterministic emission set for one period stage at one resolution.

    The logical definition is cellwise: scan the 4-d dyadic grid of pitch
    2**-(n+3) over z in the padded escape window and c in the slab square,
    and emit a cell's center iff the cell passes the keep test below.
    Subdivision only accelerates the scan: all enclosures use one shared
    precision, so they are inclusion monotone and a discarded region
    discards exactly cells that would fail their own keep test.

    Keep test, in order:
      1. the enclosure of f_c^m(z) - z over the cell must contain 0;
      2. the multiplier enclosure over the cell must not certify modulus
         <= 1 (a cell all of whose periodic points are non-repelling
         contributes nothing to this stage);
      3. interval Newton along one coordinate fiber through the center
         (z at the center's c, then c at the center's z, radius 11/8 of
         the pitch) must certify a periodic point whose multiplier
         enclosure reaches above modulus 1 - 2**-(n+6); when both fibers
         fail or certify only borderline-attracting points, the cell is
         kept iff its own multiplier enclosure straddles modulus 1 and,
         when no fiber point was certified at all, the center residual is
         small enough to be explained by the cell's gradient bound.

    Emitting borderline-multiplier cells is deliberate one-sided safety:
    indifferent cycles lie in the closure of the repelling surfaces, so
    such centers stay within the proximity machine's distance budget.
    """

    def __init__(self, n: int, m: int, slab: int):
        self.n = n
        self.m = m
        self.h = Dyadic(1, n + 3)
        self.g = n + 4 * m + 19
        cb = _pow2_at_least(slab)    # power-of-two sides keep the pitch exact
        zb = 2 * cb                  # covers |z| <= max(2, |c|) + 1 over the slab
        self.z_root = Box(Dyadic(-zb), Dyadic(zb), Dyadic(-zb), Dyadic(zb))
        self.c_root = Box(Dyadic(-cb), Dyadic(cb), Dyadic(-cb), Dyadic(cb))
        self.abort_sq = Dyadic(4 * zb * zb)
        self._wit_thr_sq = (ONE - Dyadic(1, n + 6)).square()
        self._newton_r = Dyadic(11, n + 6)
        self._newton_tol = Dyadic(1, n + 10)
        self._lock = threading.Lock()
        self._emissions: List[DyadicPoint] = []
        self._scan: Optional[Iterator[DyadicPoint]] = None
        self._done = False

    # cell predicates -------------------------------------------------------

    def _keep(self, zr: Box, cr: Box) -> Optional[Tuple[List[Box], Box]]:
        """Chain and multiplier when the region may meet the stage surface."""
        chain = _orbit_chain(zr, cr, self.m, self.g, self.abort_sq)
        if chain is None:
            return None
        if not (chain[-1] - zr).contains_point(_ORIGIN):
            return None
        mult = _mult_box(chain, self.g)
        if not mult.mod_sq_bounds()[1] > ONE:
            return None
        return chain, mult

    def _decide(self, zr: Box, cr: Box, chain: List[Box], mult: Box
                ) -> Optional[DyadicPoint]:
        """Emission center when the leaf cell passes the full keep test."""
        qz = zr.mid()
        qc = cr.mid()
        wit_z = _newton_fiber(qc, qz, self.m, self._newton_r, self.g,
                              self._newton_tol, solve_c=False)
        if self._accept(wit_z):
            return DyadicPoint(qz.coords + qc.coords)
        wit_c = _newton_fiber(qz, qc, self.m, self._newton_r, self.g,
                              self._newton_tol, solve_c=True)
        if self._accept(wit_c):
            return DyadicPoint(qz.coords + qc.coords)
        if mult.mod_sq_bounds()[0] > ONE:
            return None
        if wit_z is None and wit_c is None and \
                not self._residual_small(qz, qc, chain, mult):
            return None
        return DyadicPoint(qz.coords + qc.coords)

    def _accept(self, witness: Optional[Tuple[Box, Box]]) -> bool:
        return witness is not None and \
            witness[1].mod_sq_bounds()[1] > self._wit_thr_sq

    def _residual_small(self, qz: DyadicPoint, qc: DyadicPoint,
                        chain: List[Box], mult: Box) -> bool:
        """Center residual explainable by the gradient over the cell."""
        center = _orbit_chain(Box.point(qz), Box.point(qc), self.m, self.g)
        resid_sq = (center[-1] - Box.point(qz)).mod_sq_bounds()[1]
        grad_z = sqrt_bounds((mult - _ONE_BOX).mod_sq_bounds()[1], 24)[1]
        grad_c = sqrt_bounds(_dc_box(chain, self.g).mod_sq_bounds()[1], 24)[1]
        bound = (grad_z + grad_c) * self.h    # h = the cell half-diagonal
        return not resid_sq > bound.square()

    # traversal ---------------------------------------------------------------

    def _children(self, zr: Box, cr: Box) -> List[Tuple[Box, Box]]:
        if cr.width() > zr.width():
            return [(zr, q) for q in cr.subdivide()]
        return [(q, cr) for q in zr.subdivide()]

    def _is_leaf(self, zr: Box, cr: Box) -> bool:
        return zr.width() <= self.h and cr.width() <= self.h

    def _scan_iter(self) -> Iterator[DyadicPoint]:
        stack = [(self.z_root, self.c_root)]
        while stack:
            zr, cr = stack.pop()
            kept = self._keep(zr, cr)
            if kept is None:
                continue
            if self._is_leaf(zr, cr):
                got = self._decide(zr, cr, *kept)
                if got is not None:
                    yield got
                continue
            stack.extend(reversed(self._children(zr, cr)))

    def stream(self) -> Iterator[DyadicPoint]:
        """Shared scan: every consumer sees the same deterministic prefix."""
        i = 0
        while True:
            with self._lock:
                if i < len(self._emissions):
                    item = self._emissions[i]
                elif self._done:
                    return
                else:
                    if self._scan is None:
                        self._scan = self._scan_iter()
                    try:
                        item = next(self._scan)
                    except StopIteration:
                        self._done = True
                        return
                    self._emissions.append(item)
            yield item
            i += 1

    def near(self, p4: DyadicPoint, radius: Dyadic
             ) -> Tuple[List[DyadicPoint], int]:
        """Emissions within radius of the 4-d point, plus nodes visited.

        Windowing is a pure restriction: regions certifiably farther than
        radius hold no qualifying centers, and the cell predicate itself
        never depends on the window, so the result equals filtering the
        full stream. Node counts pay for the machine steps charged.
        """
        r_sq = radius.square()
        pz, pc = p4.coords[:2], p4.coords[2:]
        hits: List[DyadicPoint] = []
        nodes = 0

        def visit(zr: Box, cr: Box):
            nonlocal nodes
            nodes += 1
            gap_sq = dist_sq_point_rect(pz, (zr.re_lo, zr.im_lo),
                                        (zr.re_hi, zr.im_hi)) + \
                dist_sq_point_rect(pc, (cr.re_lo, cr.im_lo),
                                   (cr.re_hi, cr.im_hi))
            if gap_sq > r_sq:
                return
            kept = self._keep(zr, cr)
            if kept is None:
                return
            if self._is_leaf(zr, cr):
                got = self._decide(zr, cr, *kept)
                if got is not None and not got.dist_sq(p4) > r_sq:
                    hits.append(got)
                return
            for child in self._children(zr, cr):
                visit(*child)

        visit(self.z_root, self.c_root)
        return hits, nodes


_stage_memo: Dict[Tuple[int, int, int], _Stage] = {}
_stage_lock = threading.Lock()


def _stage_for(n: int, m: int, slab: int) -> _Stage:
    with _stage_lock:
        key = (n, m, slab)
        stage = _stage_memo.get(key)
        if stage is None:
            stage = _Stage(n, m, slab)
            _stage_memo[key] = stage
        return stage


# enumeration and the two semi-decision machines ------------------------------------


def a1_enumerate(n: int, config: EngineConfig = DEFAULT_CONFIG,
                 slab: int = 2) -> Iterator[Union[DyadicPoint, PeriodCapMarker]]:
    """Stream 4-d emission centers, period stage by period stage.

    Stage m emits the centers of all pitch 2**-(n+3) cells passing the
    stage keep test, so the balls B(center, 2**-(n+2)) cover the stage
    surface while every center lies within 2**-(n+2) of a certified
    periodic point, up to the documented borderline-multiplier slack.
    The stream is finite and ends with a PeriodCapMarker recording the
    configured period cap.
    """
    if n < 0:
        raise InputError("resolution exponent must be nonnegative")
    if slab < 1:
        raise InputError("parameter slab bound must be at least 1")
    cap = config.family_period_cap
    for m in range(1, cap + 1):
        yield from _stage_for(n, m, slab).stream()
    yield PeriodCapMarker(cap)


class _M1Engine(_Engine):
    """Halts 1 when a stage emission lands within 2**-(n+2) of the query."""

    def __init__(self, pt: FamilyPoint, n: int, config: EngineConfig,
                 slab: int):
        super().__init__()
        if n < 0:
            raise InputError("resolution exponent must be nonnegative")
        zq = pt.z.query(n + 5)
        cq = pt.c.query(n + 5)
        self._p4 = DyadicPoint(zq.coords + cq.coords)
        self._thr = Dyadic(1, n + 2)
        self._n = n
        self._slab = slab
        self._next = 1
        self._cap = config.family_period_cap

    def _advance(self, budget: int):
        spent = 0
        while spent < budget and self._bit is None:
            if self._next > self._cap:
                self._dead = True
                break
            stage = _stage_for(self._n, self._next, self._slab)
            hits, nodes = stage.near(self._p4, self._thr)
            spent += nodes + 16
            if hits:
                self._bit = 1
            self._next += 1
        self._steps += spent


class _M2Engine(_Engine):
    """Halts 0 when the orbit certifiably escapes or enters a trap ball."""

    def __init__(self, pt: FamilyPoint, config: EngineConfig,
                 poly: Optional[PolyEnclosure] = None):
        super().__init__()
        self.p = poly if poly is not None else PolyEnclosure.quadratic(pt.c)
        self._z0 = pt.z
        self._config = config
        self._radius = self.p.escape_radius()
        self._balls: List[Ball] = []
        self._k = 1
        self._period = 0
        self._cap = config.family_period_cap

    def _advance(self, budget: int):
        spent = 0
        while spent < budget and self._bit is None and not self._dead:
            if self._period < self._cap and self._period * 4 < self._k:
                self._period += 1
                spent += 2048 * self._period
                try:
                    self._balls.extend(attracting_trap_balls(
                        self.p, self._period, self._config))
                except (PrecisionExhausted, WidthBlowup, PeriodCapExceeded):
                    pass    # this period stays trapless, orbit probing goes on
                continue
            k = self._k
            try:
                z = self.p.orbit_approx(self._z0, k, k)
            except WidthBlowup:
                spent += 8
                self._dead = True
                break
            spent += 4 * k + 8
            err = Dyadic(1, k)
            if z.dist_sq(_ORIGIN) > (self._radius + err).square():
                self._bit = 0    # certified escape past the growth radius
            elif self._landed(z, err.scaled(1)):
                self._bit = 0
            self._k += 1
        self._steps += spent

    def _landed(self, z: DyadicPoint, pad: Dyadic) -> bool:
        for ball in self._balls:
            slack = ball.radius - pad
            if slack.sign > 0 and z.within(ball.center, slack):
                return True
        return False


def m1_near_check(pt: FamilyPoint, n: int, budget: int,
                  config: EngineConfig = DEFAULT_CONFIG,
                  slab: int = 2) -> SemiVerdict:
    """Proximity machine: halts 1 when a stage emission is near (z, c).

    Queries the oracles once at precision n + 5, then walks the stage
    streams; a halt certifies distance at most 2**-n from the target set,
    and no halt ever occurs when the distance exceeds 2**-n.
    """
    return _M1Engine(pt, n, config, slab).run(budget)


def m2_basin_check(pt: FamilyPoint, budget: int,
                   config: EngineConfig = DEFAULT_CONFIG,
                   poly: Optional[PolyEnclosure] = None) -> SemiVerdict:
    """Basin machine: halts 0 when z certifiably avoids the Julia set of c.

    Orbit points attracted to a certified cycle or past the escape radius
    lie in open basins disjoint from the Julia set, so a halt certifies
    (z, c) sits at positive distance from the target set's slice.
    """
    return _M2Engine(pt, config, poly).run(budget)


def bbj_query(pt: FamilyPoint, n: int,
              config: EngineConfig = DEFAULT_CONFIG, slab: int = 2,
              poly: Optional[PolyEnclosure] = None) -> int:
    """Membership bit for the family closure set at resolution n.

    Dovetails the proximity and basin machines under doubling budgets;
    the first halting bit wins and both honor the two-sided distance
    contract. Exhausting the global step grant raises Inconclusive, and
    a parameter certifiably outside the slab is an input error.
    """
    if n < 0:
        raise InputError("resolution exponent must be nonnegative")
    _check_slab(pt.c, slab)
    engines = [_M1Engine(pt, n, config, slab), _M2Engine(pt, config, poly)]
    for budget in config.budgets():
        for engine in engines:
            verdict = engine.run(budget)
            if verdict.halted:
                return verdict.bit
    raise Inconclusive(
        f"neither family machine halted within {config.global_steps} "
        f"granted steps at n={n}")


def _check_slab(c: ComplexOracle, slab: int) -> None:
    if slab < 1:
        raise InputError("parameter slab bound must be at least 1")
    approx = c.query(8)
    limit = Dyadic(slab) + Dyadic(1, 8)
    if approx.dist_sq(_ORIGIN) > limit.square():
        raise InputError(f"parameter lies outside the slab |c| <= {slab}")


def bbj_slice_render(c: ComplexOracle, n: int, window: Box,
                     config: EngineConfig = DEFAULT_CONFIG,
                     slab: int = 2) -> Cover:
    """Grid sweep of bbj_query at one parameter; 1-cells become balls.

    A rendering convenience: the picture tracks the slice of the 4-d
    closure set at this parameter, which can be strictly fatter than the
    Julia set of c, so no two-sided Hausdorff bound is claimed. Pitch is
    2**-(n+2) over the window, balls get radius 2**-(n+1), and any
    Inconclusive cell aborts the sweep rather than guessing.
    """
    _check_slab(c, slab)
    p = PolyEnclosure.quadratic(c)
    g = n + 2
    i_lo, i_hi = window.re_lo.floor_index(g), window.re_hi.floor_index(g) + 1
    j_lo, j_hi = window.im_lo.floor_index(g), window.im_hi.floor_index(g) + 1
    balls = []
    for i in range(i_lo, i_hi + 1):
        for j in range(j_lo, j_hi + 1):
            center = DyadicPoint.of(Dyadic(i, g), Dyadic(j, g))
            pt = FamilyPoint(ComplexOracle.exact(*center.coords), c)
            if bbj_query(pt, n, config, slab, poly=p) == 1:
                balls.append(Ball(center, Dyadic(1, n + 1)))
    return Cover(balls)
