"""Budgeted semi-decision machines answering filled-set membership queries.

Each machine inspects one query point d at resolution n and tries to halt
with a bit that is always compatible with the two-sided distance contract:
a 0 is emitted only when dist(d, K) >= 2**-n and a 1 only when
dist(d, K) < 2 * 2**-n. Machines that cannot decide simply keep running;
the combiner dovetails all five under doubling budgets. One step charges
roughly one interval or disc application of the map.
"""

import math
import weakref
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .certificates import USE_BETA, OrbitCertificate, OrbitKind, OrbitSpec, Sector
from .config import DEFAULT_CONFIG, EngineConfig
from .dyadic import ZERO, Dyadic, DyadicPoint, dist_sq_point_rect, sqrt_bounds
from .errors import (CertificateInvalid, DomainError, Inconclusive, InputError,
                     MultipleRootUnresolved, WidthBlowup)
from .fastball import ESCAPED, certify_escape_batch
from .geometry import Ball, raster_separated
from .intervals import Box
from .oracles import ComplexOracle
from .poly import PolyEnclosure
from .roots import (PeriodCapMarker, PeriodicPointRecord, StabilityClass,
                    enumerate_repelling, group_orbits, isolate_periodic,
                    refine_certificate_orbit)

__all__ = [
    "QueryPoint", "SemiVerdict",
    "m_ext", "m_jul", "m_hyp", "m_par", "m_sieg",
    "filled_query", "quadratic_autopilot", "shared_isolate",
    "certified_cycles", "attracting_trap_balls",
]

_ORIGIN = DyadicPoint.of(0, 0)


@dataclass(frozen=True)
class QueryPoint:
    """A dyadic query point with its resolution exponent."""

    d: DyadicPoint
    n: int

    def __post_init__(self):
        if len(self.d.coords) != 2:
            raise InputError("query points live in the plane")
        if self.n < 0:
            raise InputError("resolution exponent must be nonnegative")


class SemiVerdict:
    """Outcome of a budgeted run: a halted bit or a resumable pending state."""

    __slots__ = ("bit", "steps", "_engine")

    def __init__(self, bit: Optional[int], steps: int, engine=None):
        self.bit = bit
        self.steps = steps
        self._engine = engine

    @property
    def halted(self) -> bool:
        return self.bit is not None

    def resume(self, budget: int) -> "SemiVerdict":
        """Run further; a halted verdict is sticky and returns itself."""
        if self.bit is not None:
            return self
        if self._engine is None:
            raise InputError("verdict carries no resumable state")
        return self._engine.run(budget)

    def __repr__(self):
        state = f"bit={self.bit}" if self.halted else "pending"
        return f"SemiVerdict({state}, steps={self.steps})"


class _Engine:
    """Shared budget loop; subclasses implement _advance."""

    def __init__(self):
        self._bit: Optional[int] = None
        self._steps = 0
        self._dead = False

    def run(self, budget: int) -> SemiVerdict:
        if budget <= 0:
            raise InputError("budget must be positive")
        if self._bit is None and not self._dead:
            self._advance(budget)
        return SemiVerdict(self._bit, self._steps, self)

    def _advance(self, budget: int):
        raise NotImplementedError


# shared stage-isolation cache ----------------------------------------------------

_isolate_memo: "weakref.WeakKeyDictionary[PolyEnclosure, Dict]" = \
    weakref.WeakKeyDictionary()


def shared_isolate(p: PolyEnclosure, m: int, eps: Dyadic,
                   config: EngineConfig = DEFAULT_CONFIG
                   ) -> List[PeriodicPointRecord]:
    """isolate_periodic with a per-map memo shared across machines."""
    table = _isolate_memo.get(p)
    if table is None:
        table = {}
        _isolate_memo[p] = table
    key = (m, eps.num, eps.exp)
    records = table.get(key)
    if records is None:
        records = isolate_periodic(p, m, eps, period_cap=m, config=config)
        table[key] = records
    return records


def certified_cycles(p: PolyEnclosure, m: int, eps: Dyadic,
                     config: EngineConfig = DEFAULT_CONFIG
                     ) -> List[List[PeriodicPointRecord]]:
    """Certified full-length period-m cycles, grouped from the shared memo.

    Cycles that cannot be grouped unambiguously, that collapse to a lower
    period, or that contain any uncertified record are dropped.
    """
    records = shared_isolate(p, m, eps, config)
    try:
        cycles = group_orbits(p, records)
    except MultipleRootUnresolved:
        return []
    out: List[List[PeriodicPointRecord]] = []
    for cycle in cycles:
        if len(cycle) != m:
            continue
        recs = [records[i] for i in cycle]
        if all(rec.certified for rec in recs):
            out.append(recs)
    return out


# escape certification over the query ball ----------------------------------------


class _ExtEngine(_Engine):
    """Halts 0 once every kept cell near d is certified to escape.

    Kept cells start as the pitch 2**-(n+4) grid squares meeting both the
    escape ball and the closed ball B(d, 7/6 * 2**-n); cells certified to
    escape are dropped, stubborn ones are split. The kept union always
    contains every filled-set point of the query ball, so an empty kept
    set certifies dist(d, K) >= 2**-n * (7/6 - sqrt(2)/16) > 2**-n.
    """

    _CELL_CAP = 262_144
    _ALLOWANCE_CAP = 1 << 14

    def __init__(self, p: PolyEnclosure, d: DyadicPoint, n: int,
                 config: EngineConfig = DEFAULT_CONFIG):
        super().__init__()
        QueryPoint(d, n)
        self.p = p
        self.d = d
        self.n = n
        radius = p.escape_radius()
        self._r_sq = radius.square()
        self._radius_hi = radius.float_up()
        self._blow_cap = p.blowup_diameter().float_up()
        self._coeff_discs = p.float_coeff_discs(48)
        self._ball_sq_bound = Dyadic(49, 2 * n)
        self._cells: Optional[List[Tuple[Box, int]]] = None
        self._allowance = 48

    def _meets_query_ball(self, box: Box) -> bool:
        dist_sq = dist_sq_point_rect(self.d.coords,
                                     (box.re_lo, box.im_lo),
                                     (box.re_hi, box.im_hi))
        return Dyadic(36) * dist_sq <= self._ball_sq_bound

    def _meets_frame(self, box: Box) -> bool:
        dist_sq = dist_sq_point_rect(_ORIGIN.coords,
                                     (box.re_lo, box.im_lo),
                                     (box.re_hi, box.im_hi))
        return dist_sq <= self._r_sq

    def _initial_cells(self) -> List[Tuple[Box, int]]:
        g = self.n + 4
        # 75/64 is a dyadic upper bound for the ball radius factor 7/6
        rad = Dyadic(75, self.n + 6)
        x, y = self.d.coords
        i_lo, i_hi = (x - rad).floor_index(g), (x + rad).floor_index(g)
        j_lo, j_hi = (y - rad).floor_index(g), (y + rad).floor_index(g)
        cells = []
        for i, j in self._window_indices(g, i_lo, i_hi, j_lo, j_hi):
            box = Box(Dyadic(i, g), Dyadic(i + 1, g),
                      Dyadic(j, g), Dyadic(j + 1, g))
            cells.append((box, 0))
        return cells

    def _window_indices(self, g: int, i_lo: int, i_hi: int,
                        j_lo: int, j_hi: int) -> List[Tuple[int, int]]:
        """Scan-order indices of cells meeting the query ball and frame.

        A padded float screen settles clear cases and everything within
        the pad of either threshold is retested exactly, so the output
        matches the all-exact scan cell for cell.
        """
        if self.n > 30 or g + int(self._radius_hi).bit_length() > 48:
            return [(i, j)
                    for i in range(i_lo, i_hi + 2)
                    for j in range(j_lo, j_hi + 2)
                    if self._meets_pair(i, j, g)]
        ii = np.arange(i_lo, i_hi + 2, dtype=np.int64)
        jj = np.arange(j_lo, j_hi + 2, dtype=np.int64)
        h = math.ldexp(1.0, -g)
        xf = float(self.d.coords[0])
        yf = float(self.d.coords[1])
        dx = np.maximum(np.maximum(ii * h - xf, xf - (ii + 1) * h), 0.0)
        dy = np.maximum(np.maximum(jj * h - yf, yf - (jj + 1) * h), 0.0)
        lhs = 36.0 * (dx[:, None] ** 2 + dy[None, :] ** 2)
        rhs = math.ldexp(49.0, -2 * self.n)
        band = rhs * 1e-5
        ox = np.maximum(np.maximum(ii * h, -(ii + 1) * h), 0.0)
        oy = np.maximum(np.maximum(jj * h, -(jj + 1) * h), 0.0)
        osq = ox[:, None] ** 2 + oy[None, :] ** 2
        r_sq = self._r_sq.float_up()
        o_band = max(r_sq, 1.0) * 1e-9
        ball_in = lhs <= rhs - band
        ball_out = lhs > rhs + band
        frame_in = osq <= r_sq - o_band
        frame_out = osq > r_sq + o_band
        keep = ball_in & frame_in
        settled = keep | ball_out | frame_out
        out = []
        for a in range(lhs.shape[0]):
            for b in np.nonzero(~settled[a] | keep[a])[0]:
                i, j = int(ii[a]), int(jj[b])
                if keep[a, b] or self._meets_pair(i, j, g):
                    out.append((i, j))
        return out

    def _meets_pair(self, i: int, j: int, g: int) -> bool:
        box = Box(Dyadic(i, g), Dyadic(i + 1, g),
                  Dyadic(j, g), Dyadic(j + 1, g))
        return self._meets_query_ball(box) and self._meets_frame(box)

    def _batch(self, per_cell: int) -> Tuple[set, int]:
        cells = self._cells
        float_idx, exact_idx = [], []
        for idx, (box, _depth) in enumerate(cells):
            if box.width().float_up() > 1e-12:
                float_idx.append(idx)
            else:
                exact_idx.append(idx)
        escaped: set = set()
        used = 0
        if float_idx:
            centers = np.empty(len(float_idx), dtype=complex)
            rads = np.empty(len(float_idx))
            for pos, idx in enumerate(float_idx):
                re_lo, re_hi, im_lo, im_hi = cells[idx][0].to_floats()
                cx = 0.5 * (re_lo + re_hi)
                cy = 0.5 * (im_lo + im_hi)
                half = max(cx - re_lo, re_hi - cx, cy - im_lo, im_hi - cy)
                centers[pos] = complex(cx, cy)
                rads[pos] = half * math.sqrt(2.0) * (1 + 1e-12) + 1e-290
            status, spent = certify_escape_batch(
                self._coeff_discs, centers, rads,
                self._radius_hi, per_cell, self._blow_cap)
            used += spent
            flat = np.asarray(status).ravel()
            for pos, idx in enumerate(float_idx):
                if flat[pos] == ESCAPED:
                    escaped.add(idx)
        for idx in exact_idx:
            box, depth = cells[idx]
            ok, spent = self.p.certify_escape(box, per_cell,
                                              self.n + 12 + depth)
            used += spent + 1
            if ok:
                escaped.add(idx)
        return escaped, used

    def _advance(self, budget: int):
        spent = 0
        if self._cells is None:
            self._cells = self._initial_cells()
            spent += max(len(self._cells), 1)
        while spent < budget:
            if not self._cells:
                self._bit = 0
                break
            count = len(self._cells)
            slice_cap = max(16, (budget - spent) // count)
            per_cell = min(self._allowance, slice_cap)
            escaped, used = self._batch(per_cell)
            spent += used + count
            full_power = per_cell >= self._allowance
            can_split = full_power and count < self._CELL_CAP
            nxt: List[Tuple[Box, int]] = []
            for idx, (box, depth) in enumerate(self._cells):
                if idx in escaped:
                    continue
                if can_split:
                    for child in box.subdivide():
                        if (self._meets_query_ball(child)
                                and self._meets_frame(child)):
                            nxt.append((child, depth + 1))
                else:
                    nxt.append((box, depth))
            self._cells = nxt
            if full_power:
                self._allowance = min(self._allowance * 2,
                                      self._ALLOWANCE_CAP)
        self._steps += spent


def m_ext(p: PolyEnclosure, d: DyadicPoint, n: int, budget: int,
          config: EngineConfig = DEFAULT_CONFIG) -> SemiVerdict:
    """Escape machine: halts 0 when the query ball is certified outside K."""
    return _ExtEngine(p, d, n, config).run(budget)


# repelling-point proximity ---------------------------------------------------------


class _JulEngine(_Engine):
    """Halts 1 once an enumerated repelling point lands near d.

    Repelling periodic points lie on the Julia set, so any stream point y
    within its 2**-(n+3) isolation error of J satisfying
    dist(d, y) < 11/6 * 2**-n certifies dist(d, K) < 2 * 2**-n.
    """

    def __init__(self, p: PolyEnclosure, d: DyadicPoint, n: int,
                 config: EngineConfig = DEFAULT_CONFIG, isolate=None):
        super().__init__()
        QueryPoint(d, n)
        self.d = d
        self._near_sq_bound = Dyadic(121, 2 * n)
        if isolate is None:
            isolate = lambda poly, m, e: shared_isolate(poly, m, e, config)
        self._stream = enumerate_repelling(p, Dyadic(1, n + 3),
                                           period_cap=config.period_cap,
                                           config=config, isolate=isolate)

    def _advance(self, budget: int):
        spent = 0
        while spent < budget:
            item = next(self._stream)
            if isinstance(item, PeriodCapMarker):
                self._dead = True
                spent += 1
                break
            spent += 32
            if Dyadic(36) * self.d.dist_sq(item) < self._near_sq_bound:
                self._bit = 1
                break
        self._steps += spent


def m_jul(p: PolyEnclosure, d: DyadicPoint, n: int, budget: int,
          config: EngineConfig = DEFAULT_CONFIG) -> SemiVerdict:
    """Proximity machine: halts 1 when d is provably near the Julia set."""
    return _JulEngine(p, d, n, config).run(budget)


# certified orbit entry into invariant regions -------------------------------------


class _OrbitEntryEngine(_Engine):
    """Halts 1 once the orbit of d certifiably enters an invariant region.

    Probe k approximates the k-th orbit point to within 2**-k and asks for
    a landing margin of another 2**-k, so a halt certifies the true orbit
    point is inside a region whose forward invariance keeps the orbit
    bounded; hence d is in K exactly, and any bit 1 is contract-valid.
    """

    def __init__(self, p: PolyEnclosure, z0: ComplexOracle,
                 balls: Sequence[Ball], sectors: Sequence[Sector]):
        super().__init__()
        self.p = p
        self._z0 = z0
        self._balls = list(balls)
        self._sectors = list(sectors)
        self._radius = p.escape_radius()
        self._k = 1
        if not self._balls and not self._sectors:
            self._dead = True

    def _landed(self, z: DyadicPoint, pad: Dyadic) -> bool:
        for ball in self._balls:
            slack = ball.radius - pad
            if slack.sign > 0 and z.within(ball.center, slack):
                return True
        for sector in self._sectors:
            if sector.contains_ball(z, pad):
                return True
        return False

    def _advance(self, budget: int):
        spent = 0
        while spent < budget and self._bit is None and not self._dead:
            k = self._k
            try:
                z = self.p.orbit_approx(self._z0, k, k)
            except WidthBlowup:
                self._dead = True
                spent += 8
                break
            spent += 4 * k + 8
            err = Dyadic(1, k)
            if self._landed(z, err + err):
                self._bit = 1
            elif z.dist_sq(_ORIGIN) > (self._radius + err).square():
                # the true orbit is certifiably past the escape radius and
                # can only grow; no landing is possible any more
                self._dead = True
            self._k += 1
        self._steps += spent


def _attracting_balls(cert: OrbitCertificate) -> List[Ball]:
    balls: List[Ball] = []
    for orbit in cert.orbits:
        if orbit.kind is OrbitKind.ATTRACTING:
            balls.extend(orbit.domains)
    return balls


def _parabolic_sectors(cert: OrbitCertificate) -> List[Sector]:
    sectors: List[Sector] = []
    for orbit in cert.orbits:
        if orbit.kind is OrbitKind.PARABOLIC:
            sectors.extend(orbit.domains)
    return sectors


def _query_oracle(d: DyadicPoint, n: int) -> ComplexOracle:
    QueryPoint(d, n)
    return ComplexOracle.exact(d.coords[0], d.coords[1])


def m_hyp(p: PolyEnclosure, cert: OrbitCertificate, d: DyadicPoint, n: int,
          budget: int) -> SemiVerdict:
    """Attraction machine: halts 1 when the orbit enters a certified trap."""
    return _OrbitEntryEngine(p, _query_oracle(d, n),
                             _attracting_balls(cert), ()).run(budget)


def m_par(p: PolyEnclosure, cert: OrbitCertificate, d: DyadicPoint, n: int,
          budget: int) -> SemiVerdict:
    """Convergence machine: halts 1 when the orbit enters a certified petal."""
    return _OrbitEntryEngine(p, _query_oracle(d, n), (),
                             _parabolic_sectors(cert)).run(budget)


# image sandwich around rotation-domain centers ------------------------------------


class _SiegCell:
    __slots__ = ("base", "work", "mid", "x", "chain", "deriv",
                 "stage", "depth", "frozen", "inside")

    def __init__(self, base: Box, d: DyadicPoint, rho_sq: Dyadic, depth: int):
        self.base = base
        self.work = base.inflate(base.width().scaled(-1))
        self.mid = self.work.mid()
        self.x = self.work
        self.chain = Box.point(self.mid)
        self.deriv = Box.point(DyadicPoint.of(1, 0))
        self.stage = 0
        self.depth = depth
        self.frozen = False
        self.inside = self.work.max_dist_sq_to_point(d) <= rho_sq


class _SiegEngine(_Engine):
    """Halts 1 via certified forward images of the query ball B(d, rho).

    rho = 85/64 * 2**-n, a dyadic radius below 4/3 * 2**-n, so both halt
    clauses certify dist(d, K) <= rho < 2 * 2**-n:
      * covers: a certified image ball contains a true orbit point of the
        certificate center or its companion, both of which lie in K, and a
        covered K-point has a preimage in B(d, rho);
      * separation: the certified image balls (each a subset of a true
        forward image, by a parametric Newton containment proof) separate
        the center from its companion on an inner-marked raster, which is
        impossible while B(d, rho) misses K when both ends sit in one
        component of K. Separation is only consulted when armed.
    """

    _CELL_CAP = 65_536
    _BALL_CAP = 40_960
    _DEPTH_CAP = 4
    _WINDOW = 8_192
    _SHRINKS = (Dyadic(7, 3), Dyadic(3, 2), Dyadic(1, 1), Dyadic(1, 2))

    def __init__(self, p: PolyEnclosure, cert: OrbitCertificate,
                 d: DyadicPoint, n: int,
                 config: EngineConfig = DEFAULT_CONFIG,
                 separation_armed: bool = True):
        super().__init__()
        QueryPoint(d, n)
        self.p = p
        self.cert = cert
        self.d = d
        self.n = n
        self.config = config
        self._sep_armed = separation_armed
        self._specs = [(idx, orbit) for idx, orbit in enumerate(cert.orbits)
                       if orbit.kind is OrbitKind.SIEGEL]
        if not self._specs:
            self._dead = True
        self.rho = Dyadic(85, n + 6)
        self._rho_sq = self.rho.square()
        self._xi = Dyadic(1, n + 6)
        self._r_sq = p.escape_radius().square()
        self._t = max(48, n + 24)
        self._w_gate = Dyadic(1, n + 1)
        self._quad_c = p.is_exact_quadratic()
        self._prepared = False
        self._targets: List[Tuple[DyadicPoint, Dyadic, DyadicPoint, Dyadic]] = []
        self._cells: List[_SiegCell] = []
        self._covers: List[Ball] = []
        self._cov_best: Dict[Tuple[int, int], Ball] = {}
        self._cov_cx: List[float] = []
        self._cov_cy: List[float] = []
        self._cov_r: List[float] = []
        self._admit(Ball(d, self.rho))
        self._pass_count = 0

    def _admit(self, ball: Ball) -> None:
        key = (ball.center.coords[0].floor_index(self.n + 3),
               ball.center.coords[1].floor_index(self.n + 3))
        best = self._cov_best.get(key)
        if best is not None and best.radius >= ball.radius:
            gap = best.radius - ball.radius
            if ball.center.dist_sq(best.center) <= gap.square():
                return
        if best is None or ball.radius > best.radius:
            self._cov_best[key] = ball
        self._covers.append(ball)
        self._cov_cx.append(float(ball.center.coords[0]))
        self._cov_cy.append(float(ball.center.coords[1]))
        self._cov_r.append(float(ball.radius))

    def _beta_point(self, n_bits: int) -> Optional[Tuple[DyadicPoint, Dyadic]]:
        eps = Dyadic(1, n_bits)
        records = shared_isolate(self.p, 1, eps, self.config)
        for rec in records:
            if rec.certified and rec.cls is StabilityClass.REPELLING:
                return rec.location.mid(), eps
        return None

    def _prepare(self) -> int:
        spent = 0
        for idx, orbit in self._specs:
            centers = refine_certificate_orbit(self.p, self.cert, idx,
                                               self.n + 6, self.config)
            spent += 64 * len(centers) + 64
            if orbit.siegel_companion == USE_BETA:
                got = self._beta_point(self.n + 6)
                spent += 256
                if got is None:
                    continue
                companions = [got]
            else:
                companions = [(ball.center, ball.radius)
                              for ball in orbit.siegel_companion]
            for center in centers:
                for companion, xi_y in companions:
                    self._targets.append((center, self._xi, companion, xi_y))
        if not self._targets:
            self._dead = True
            return spent
        g = self.n + 3
        x, y = self.d.coords
        i_lo, i_hi = (x - self.rho).floor_index(g), (x + self.rho).floor_index(g)
        j_lo, j_hi = (y - self.rho).floor_index(g), (y + self.rho).floor_index(g)
        for i in range(i_lo, i_hi + 2):
            for j in range(j_lo, j_hi + 2):
                base = Box(Dyadic(i, g), Dyadic(i + 1, g),
                           Dyadic(j, g), Dyadic(j + 1, g))
                dist_sq = dist_sq_point_rect(self.d.coords,
                                             (base.re_lo, base.im_lo),
                                             (base.re_hi, base.im_hi))
                if dist_sq <= self._rho_sq:
                    self._cells.append(_SiegCell(base, self.d,
                                                 self._rho_sq, 0))
        spent += len(self._cells)
        self._prepared = True
        return spent

    def _deriv_eval(self, x: Box) -> Box:
        if self._quad_c is not None:
            return x.scale_int(2)
        coeffs = self.p.derivative_boxes(self._t)
        acc = coeffs[-1]
        for low in reversed(coeffs[:-1]):
            acc = (acc * x + low).round_out(self._t + 24)
        return acc

    def _try_certify(self, cell: _SiegCell) -> Optional[Ball]:
        if not cell.inside or cell.stage < 1:
            return None
        if cell.x.width() > self._w_gate:
            return None
        if cell.deriv.mod_sq_bounds()[0].sign <= 0:
            return None
        mid_box = Box.point(cell.mid)
        for frac in self._SHRINKS:
            target = self._central_shrink(cell.x, frac)
            try:
                newton = mid_box - (cell.chain - target).div(cell.deriv,
                                                             self._t + 16)
            except DomainError:
                return None
            if cell.work.contains_box_strictly(newton):
                center = target.mid()
                half_w = (target.re_hi - target.re_lo).scaled(-1)
                half_h = (target.im_hi - target.im_lo).scaled(-1)
                radius = half_w if half_w <= half_h else half_h
                if radius.sign > 0:
                    return Ball(center, radius)
                return None
        return None

    @staticmethod
    def _central_shrink(box: Box, frac: Dyadic) -> Box:
        mid = box.mid()
        half_w = (box.re_hi - box.re_lo).scaled(-1) * frac
        half_h = (box.im_hi - box.im_lo).scaled(-1) * frac
        mx, my = mid.coords
        return Box(mx - half_w, mx + half_w, my - half_h, my + half_h)

    def _screen(self, pt: DyadicPoint) -> Tuple[np.ndarray, np.ndarray]:
        px, py = (float(c) for c in pt.coords)
        cx = np.asarray(self._cov_cx)
        cy = np.asarray(self._cov_cy)
        return (cx - px) ** 2 + (cy - py) ** 2, np.asarray(self._cov_r)

    def _covered(self, pt: DyadicPoint, xi: Dyadic) -> bool:
        """Is B(pt, xi) certifiably inside one admitted ball."""
        dist_sq, radius = self._screen(pt)
        slack_sq = np.maximum(radius - float(xi), 0.0) ** 2
        for idx in np.nonzero(dist_sq <= slack_sq + 1e-9)[0]:
            ball = self._covers[int(idx)]
            slack = ball.radius - xi
            if slack.sign >= 0 and pt.within(ball.center, slack):
                return True
        return False

    def _clear_of_marks(self, pt: DyadicPoint, xi: Dyadic) -> bool:
        """Does B(pt, xi) certifiably miss every admitted ball."""
        dist_sq, radius = self._screen(pt)
        reach_sq = (radius + float(xi) + 1e-9) ** 2
        for idx in np.nonzero(dist_sq < reach_sq + 1e-9)[0]:
            ball = self._covers[int(idx)]
            if pt.dist_sq(ball.center) < (ball.radius + xi).square():
                return False
        return True

    def _halt_tests(self) -> int:
        spent = 0
        for center, xi_c, companion, xi_y in self._targets:
            spent += 2
            if self._covered(center, xi_c) or self._covered(companion, xi_y):
                self._bit = 1
                return spent
        if not self._sep_armed or len(self._covers) < 2:
            return spent
        if self._pass_count % 4 != 1:
            return spent
        for center, xi_c, companion, xi_y in self._targets:
            # approximate endpoints must sit clear of every marked ball,
            # otherwise the raster could separate an approximation from
            # its own true point
            if not (self._clear_of_marks(center, xi_c)
                    and self._clear_of_marks(companion, xi_y)):
                continue
            spent += 4 * len(self._covers) + 64
            try:
                split = raster_separated(self._covers, center, companion,
                                         self.n + 4, inner=True)
            except DomainError:
                continue
            if split:
                self._bit = 1
                return spent
        return spent

    def _advance(self, budget: int):
        spent = 0
        if not self._prepared:
            spent += self._prepare()
            if self._dead:
                self._steps += spent
                return
            spent += self._halt_tests()
        while spent < budget and self._bit is None:
            self._pass_count += 1
            to_split: List[int] = []
            live = [idx for idx, cell in enumerate(self._cells)
                    if not cell.frozen]
            if len(live) > self._WINDOW:
                # advance the thinnest enclosures first: they are the ones
                # that can still certify image balls, while fat ones only
                # queue more splits
                live.sort(key=lambda idx: (self._cells[idx].x.width()
                                           .float_up(), idx))
                live = live[:self._WINDOW]
            for idx in live:
                cell = self._cells[idx]
                spent += 12
                deriv_step = self._deriv_eval(cell.x)
                try:
                    x_next = self.p.enclose_eval(cell.x, self._t)
                    chain_next = self.p.enclose_eval(cell.chain, self._t)
                except WidthBlowup:
                    cell.frozen = True
                    continue
                cell.deriv = (cell.deriv * deriv_step).round_out(self._t + 16)
                cell.x = x_next
                cell.chain = chain_next
                cell.stage += 1
                if x_next.mod_sq_bounds()[0] > self._r_sq:
                    # the whole image sits past the escape radius, so no
                    # later image of this cell can meet K again
                    cell.frozen = True
                    continue
                if x_next.width() > self._w_gate:
                    to_split.append(idx)
                    continue
                ball = self._try_certify(cell)
                spent += 16
                if ball is not None and len(self._covers) < self._BALL_CAP:
                    self._admit(ball)
            if to_split:
                room = self._CELL_CAP - len(self._cells)
                keep: List[_SiegCell] = []
                split_set = set(to_split)
                for idx, cell in enumerate(self._cells):
                    if (idx not in split_set or room < 3
                            or cell.depth >= self._DEPTH_CAP):
                        if idx in split_set and cell.depth >= self._DEPTH_CAP:
                            cell.frozen = True
                        keep.append(cell)
                        continue
                    room -= 3
                    for child in cell.base.subdivide():
                        dist_sq = dist_sq_point_rect(
                            self.d.coords,
                            (child.re_lo, child.im_lo),
                            (child.re_hi, child.im_hi))
                        if dist_sq <= self._rho_sq:
                            keep.append(_SiegCell(child, self.d,
                                                  self._rho_sq,
                                                  cell.depth + 1))
                    spent += 4
                self._cells = keep
            spent += self._halt_tests()
            if all(cell.frozen for cell in self._cells):
                self._dead = True
                break
        self._steps += spent


def m_sieg(p: PolyEnclosure, cert: OrbitCertificate, d: DyadicPoint, n: int,
           budget: int, config: EngineConfig = DEFAULT_CONFIG,
           separation_armed: bool = True) -> SemiVerdict:
    """Rotation machine: halts 1 via covered or separated certified images."""
    return _SiegEngine(p, cert, d, n, config, separation_armed).run(budget)


# the combiner ---------------------------------------------------------------------


def _build_engines(p: PolyEnclosure, cert: OrbitCertificate, d: DyadicPoint,
                   n: int, config: EngineConfig, separation_armed: bool,
                   isolate) -> List[_Engine]:
    z0 = _query_oracle(d, n)
    return [
        _ExtEngine(p, d, n, config),
        _JulEngine(p, d, n, config, isolate),
        _OrbitEntryEngine(p, z0, _attracting_balls(cert), ()),
        _OrbitEntryEngine(p, z0, (), _parabolic_sectors(cert)),
        _SiegEngine(p, cert, d, n, config, separation_armed),
    ]


def filled_query(p: PolyEnclosure, cert: OrbitCertificate, d: DyadicPoint,
                 n: int, config: EngineConfig = DEFAULT_CONFIG,
                 separation_armed: bool = True, isolate=None) -> int:
    """Dovetail the five machines under doubling budgets; first halt wins.

    Every emitted bit satisfies the distance contract at resolution n no
    matter which machine produced it. Exhausting the configured global
    step grant without a halt raises Inconclusive, never a wrong bit.
    """
    QueryPoint(d, n)
    engines = _build_engines(p, cert, d, n, config, separation_armed, isolate)
    for budget in config.budgets():
        for engine in engines:
            verdict = engine.run(budget)
            if verdict.halted:
                return verdict.bit
    raise Inconclusive(
        f"no machine halted within {config.global_steps} granted steps "
        f"at d={d}, n={n}")


# certificate autopilot for the quadratic family -----------------------------------


def _largest_step_radius(slope_hi: Dyadic, target: Dyadic,
                         cap: Dyadic) -> Dyadic:
    """Largest halving of cap with r * (slope + r) <= target."""
    r = cap
    for _ in range(26):
        if r * (slope_hi + r) <= target:
            return r
        r = r.scaled(-1)
    return ZERO


def _cycle_domain_radii(points: Sequence[DyadicPoint], c_box: Box
                        ) -> Optional[List[Dyadic]]:
    """Radii making each B(z_i, r_i) map into the next under z^2 + c.

    The image of B(z, r) under z^2 + c is contained in the disc around
    z^2 + c of radius 2|z| r + r^2, so the mapping condition is
    offset + 2|z_i| r_i + r_i^2 <= r_next with offset the distance from
    the exact image of the ball center to the next declared center.
    """
    m = len(points)
    offsets, slopes = [], []
    for i, z in enumerate(points):
        z_next = points[(i + 1) % m]
        image = Box.point(z).square() + c_box
        offsets.append(sqrt_bounds(image.max_dist_sq_to_point(z_next), 30)[1])
        slopes.append(sqrt_bounds(z.dist_sq(_ORIGIN), 30)[1].scaled(1))
    radii = [Dyadic(1, 1)] * m
    for _ in range(64):
        changed = False
        for i in range(m):
            target = radii[(i + 1) % m] - offsets[i]
            if target.sign <= 0:
                return None
            r = _largest_step_radius(slopes[i], target, radii[i])
            if r < radii[i]:
                radii[i] = r
                changed = True
        if not changed:
            break
    floor = Dyadic(1, 12)
    if any(r < floor for r in radii):
        return None
    return radii


def attracting_trap_balls(p: PolyEnclosure, m: int,
                          config: EngineConfig = DEFAULT_CONFIG) -> List[Ball]:
    """Invariant contraction balls around certified attracting m-cycles.

    Empty when period m carries no certified attracting cycle or no
    invariant radii can be synthesized at the working precision. Entering
    any returned ball certifies convergence to the enclosed cycle.
    """
    balls: List[Ball] = []
    c_box = p.coeff_boxes(48)[0]
    for recs in certified_cycles(p, m, Dyadic(1, 16), config):
        if not all(rec.cls is StabilityClass.ATTRACTING for rec in recs):
            continue
        centers = [rec.location.mid() for rec in recs]
        radii = _cycle_domain_radii(centers, c_box)
        if radii is not None:
            balls.extend(Ball(z, r) for z, r in zip(centers, radii))
    return balls


def quadratic_autopilot(c, parabolic_cert: Optional[OrbitCertificate] = None,
                        config: EngineConfig = DEFAULT_CONFIG,
                        scan_periods: int = 4
                        ) -> Tuple[PolyEnclosure, OrbitCertificate]:
    """Build z^2 + c with a certificate found by bounded cycle scanning.

    Certified attracting cycles get invariant ball domains synthesized in
    exact disc arithmetic; certified cycles whose multiplier may lie on
    the unit circle become rotation-domain candidates with the repelling
    fixed point as companion. Parabolic traps cannot be synthesized and
    are merged from the hand-built certificate when one is supplied.
    """
    p = PolyEnclosure.quadratic(c)
    eps = Dyadic(1, 16)
    c_box = p.coeff_boxes(48)[0]
    specs: List[OrbitSpec] = []
    have_attracting = False
    for m in range(1, scan_periods + 1):
        for recs in certified_cycles(p, m, eps, config):
            centers = [rec.location.mid() for rec in recs]
            balls = [Ball(rec.location.mid(), rec.location.width())
                     for rec in recs]
            if (not have_attracting
                    and all(rec.cls is StabilityClass.ATTRACTING
                            for rec in recs)):
                radii = _cycle_domain_radii(centers, c_box)
                if radii is None:
                    continue
                domains = [Ball(z, r) for z, r in zip(centers, radii)]
                specs.append(OrbitSpec(m, balls, OrbitKind.ATTRACTING,
                                       domains))
                have_attracting = True
            elif all(rec.cls is StabilityClass.MAYBE_INDIFFERENT
                     for rec in recs):
                specs.append(OrbitSpec(m, balls, OrbitKind.SIEGEL,
                                       siegel_companion=USE_BETA))
    if parabolic_cert is not None:
        specs.extend(parabolic_cert.orbits)
    return p, OrbitCertificate(tuple(specs))
