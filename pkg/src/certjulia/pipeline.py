"""Batched grid sweeps computing certified covers of filled Julia sets.

A full cover at resolution n asks for roughly a million grid bits, so the
per-point machine dovetail is reserved for stubborn points. The bulk of a
grid is decided by four vectorized rules, each emitting only bits that the
per-point contract already allows:

  * escape-0: the closed ball B(q, 2**-m) around the grid point is certified
    to escape, so dist(q, K) >= 2**-m and 0 is permitted;
  * interior-1: a certified disc orbit of q enters an invariant attracting
    ball, so q is in K exactly and 1 is always permitted;
  * near-1: a repelling periodic point (on the Julia set) lies provably
    within 2 * 2**-m of q, so 1 is permitted;
  * far-0: the query ball B(q, 65/64 * 2**-m) misses every cell of a
    global kept set containing K, so dist(q, K) > 2**-m and 0 is
    permitted.

All float screening is padded far beyond the attainable rounding error and
exactness of grid coordinates is guaranteed by construction, so a bit from
any rule is sound; points no rule decides go to filled_query.
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from .certificates import OrbitCertificate, OrbitKind
from .config import DEFAULT_CONFIG, EngineConfig
from .dyadic import Dyadic, DyadicPoint
from .errors import Inconclusive, InputError
from .fastball import ESCAPED, certify_escape_batch
from .geometry import Ball, Cover
from .machines import filled_query, shared_isolate
from .poly import PolyEnclosure
from .roots import StabilityClass

__all__ = ["FilledGrid", "FilledContext", "filled_grid", "filled_cover"]

_PAD = 1e-9


@dataclass(frozen=True)
class FilledGrid:
    """Grid verdicts for one sweep: bit[i - i_lo, j - j_lo] answers the
    query at ((i) * 2**-g, (j) * 2**-g) with precision exponent m.

    exhausted counts points where every machine ran out of budget and the
    bit defaulted to 0; a default never places a ball, so the cover side
    of the distance guarantee is untouched by it."""

    n: int
    g: int
    m: int
    i_lo: int
    j_lo: int
    bits: np.ndarray
    exhausted: int = 0

    def ones(self) -> List[Tuple[int, int]]:
        """Grid indices answering 1, in deterministic scan order."""
        out = []
        ni, nj = self.bits.shape
        for di in range(ni):
            row = self.bits[di]
            for dj in np.nonzero(row == 1)[0]:
                out.append((self.i_lo + di, self.j_lo + int(dj)))
        return out


def _quadratic_float(p: PolyEnclosure) -> Optional[Tuple[complex, float]]:
    """(c, radius) float disc enclosing the constant term of z^2 + c.

    The leading and linear discs must pin 1 and 0 up to vacuous slack,
    which is folded into the returned radius at the escape-ball scale.
    """
    coeffs = p.float_coeff_discs(48)
    if len(coeffs) != 3:
        return None
    (lead, lead_r), (lin, lin_r), (const, const_r) = coeffs
    if lead != 1 or lin != 0 or lead_r > 1e-80 or lin_r > 1e-80:
        return None
    bound = p.escape_radius().float_up() + 2.0
    return const, const_r + lead_r * bound * bound + lin_r * bound


def _disc_entry_batch(c: complex, c_rad: float, z0: np.ndarray,
                      centers: np.ndarray, radii: np.ndarray,
                      bail: float, max_steps: int) -> np.ndarray:
    """Which starting points' true orbits certifiably enter a domain ball.

    Tracks the orbit of the disc B(z, r) under z^2 + c with r grown
    pessimistically each step, so the true orbit point always lies within
    r of the float iterate; entry requires |z - center| + r to clear the
    ball radius by a pad dominating every rounding effect.
    """
    z = z0.astype(complex)
    r = np.zeros(len(z0))
    entered = np.zeros(len(z0), dtype=bool)
    alive = np.ones(len(z0), dtype=bool)
    slack = 1 + 2.0 ** -40
    for _ in range(max_steps):
        if not alive.any():
            break
        zs = z[alive]
        rs = r[alive]
        mod = np.abs(zs)
        landed = np.zeros(len(zs), dtype=bool)
        for ctr, rad in zip(centers, radii):
            landed |= (np.abs(zs - ctr) + rs) < (rad - _PAD)
        gone = mod - rs > bail
        idx = np.nonzero(alive)[0]
        entered[idx[landed]] = True
        alive[idx[landed | gone]] = False
        keep = ~(landed | gone)
        zk, rk = zs[keep], rs[keep]
        r_new = ((2 * np.abs(zk) + rk) * rk * slack + c_rad) * slack + 1e-300
        z_new = zk * zk + c
        sub = idx[keep]
        z[sub] = z_new
        r[sub] = r_new
        overflow = r[sub] > 1.0
        alive[sub[overflow]] = False
    return entered


class FilledContext:
    """Shared certified state for deciding many query points of one map."""

    _KEPT_CAP = 600_000

    def __init__(self, p: PolyEnclosure, cert: OrbitCertificate, m: int,
                 config: EngineConfig = DEFAULT_CONFIG,
                 separation_armed: bool = True):
        if m < 0:
            raise InputError("precision exponent must be nonnegative")
        self.p = p
        self.cert = cert
        self.m = m
        self.config = config
        self.separation_armed = separation_armed
        radius = p.escape_radius()
        self._radius = radius
        self._radius_hi = radius.float_up()
        self._blow_cap = p.blowup_diameter().float_up()
        self._coeff_discs = p.float_coeff_discs(48)
        self._quad = _quadratic_float(p)
        self._domains = self._domain_floats()
        self._rep_tree: Optional[cKDTree] = None
        self._rep_pts: List[Tuple[float, float]] = []
        self._rep_stage = 0
        self._rep_eps = 0.0
        self._kept_trees: Optional[List[Tuple[cKDTree, float]]] = None
        self.exhausted = 0

    # certified data builders ------------------------------------------------

    def _domain_floats(self) -> Tuple[np.ndarray, np.ndarray]:
        centers, radii = [], []
        for orbit in self.cert.orbits:
            if orbit.kind is not OrbitKind.ATTRACTING:
                continue
            for ball in orbit.domains:
                centers.append(complex(float(ball.center.coords[0]),
                                       float(ball.center.coords[1])))
                radii.append(ball.radius.float_down())
        return np.asarray(centers, dtype=complex), np.asarray(radii)

    def _extend_repelling(self, upto: int) -> None:
        """Enumerate certified repelling periodic points through stage upto."""
        eps = Dyadic(1, self.m + 3)
        grew = False
        while self._rep_stage < upto:
            self._rep_stage += 1
            for rec in shared_isolate(self.p, self._rep_stage, eps,
                                      self.config):
                if rec.certified and rec.cls is StabilityClass.REPELLING:
                    mid = rec.location.mid()
                    self._rep_pts.append((float(mid.coords[0]),
                                          float(mid.coords[1])))
                    grew = True
        if grew or self._rep_tree is None:
            self._rep_eps = eps.float_up() + 1e-12
            self._rep_tree = (cKDTree(np.asarray(self._rep_pts))
                              if self._rep_pts else None)

    def _repelling_tree(self) -> Tuple[Optional[cKDTree], float]:
        if self._rep_stage == 0:
            self._extend_repelling(self.config.period_cap)
        return self._rep_tree, self._rep_eps

    def _kept_set(self) -> List[Tuple[cKDTree, float]]:
        """KD-trees of kept-cell centers per level; kept cells cover K.

        Cells certified to escape or to sit outside the escape ball are
        dropped; the rest split level by level. Once the population gets
        large, only frontier cells (those missing a kept neighbor) keep
        splitting and landlocked cells freeze at their level, so the
        refinement effort tracks the boundary instead of the area.
        """
        if self._kept_trees is not None:
            return self._kept_trees
        g0 = 0
        while Dyadic(1, g0).scaled(4) > self._radius:
            g0 += 1
        target = self.m + 4 + self.config.ext_extra_depth
        soft_cap = 150_000
        span = int(math.ceil(self._radius_hi * (1 << g0))) + 1
        ii, jj = np.meshgrid(np.arange(-span, span + 1),
                             np.arange(-span, span + 1), indexing="ij")
        cells = np.stack([ii.ravel(), jj.ravel()], axis=1).astype(np.int64)
        trees: List[Tuple[cKDTree, float]] = []
        frozen_total = 0
        g = g0
        while True:
            h = math.ldexp(1.0, -g)
            half_diag = h * math.sqrt(2.0) / 2 * (1 + 1e-12)
            centers = (cells + 0.5) * h
            inside = (np.hypot(centers[:, 0], centers[:, 1])
                      <= self._radius_hi + half_diag + _PAD)
            cells = cells[inside]
            if len(cells) == 0:
                break
            centers = centers[inside]
            zc = centers[:, 0] + 1j * centers[:, 1]
            status, _ = certify_escape_batch(
                self._coeff_discs, zc, half_diag, self._radius_hi,
                288, self._blow_cap)
            survived = np.asarray(status).ravel() != ESCAPED
            cells = cells[survived]
            if len(cells) == 0:
                break
            if g >= target:
                trees.append((cKDTree((cells + 0.5) * h), half_diag))
                break
            if len(cells) * 4 > soft_cap:
                frontier = self._frontier_mask(cells)
                landlocked = cells[~frontier]
                if len(landlocked):
                    trees.append((cKDTree((landlocked + 0.5) * h),
                                  half_diag))
                    frozen_total += len(landlocked)
                cells = cells[frontier]
            if (len(cells) == 0
                    or frozen_total + len(cells) * 4 > self._KEPT_CAP):
                if len(cells):
                    trees.append((cKDTree((cells + 0.5) * h), half_diag))
                break
            children = np.empty((len(cells) * 4, 2), dtype=np.int64)
            base = cells * 2
            children[0::4] = base
            children[1::4] = base + np.array([0, 1])
            children[2::4] = base + np.array([1, 0])
            children[3::4] = base + np.array([1, 1])
            cells = children
            g += 1
        if not trees:
            # every cell escaped: the kept set is empty and K was missed
            # entirely, which cannot happen for a monic polynomial; keep a
            # single frame cell so far-0 stays conservative
            trees.append((cKDTree(np.zeros((1, 2))), self._radius_hi))
        self._kept_trees = trees
        return trees

    @staticmethod
    def _frontier_mask(cells: np.ndarray, depth: int = 3) -> np.ndarray:
        """Cells with a missing neighbor within Chebyshev distance depth.

        Depth keeps the band that straddles the set boundary refining even
        while the strictly exterior fringe evaporates a level later.
        """
        i_min = cells[:, 0].min() - depth - 1
        j_min = cells[:, 1].min() - depth - 1
        width = int(cells[:, 1].max() - j_min + depth + 2)
        keys = (cells[:, 0] - i_min) * width + (cells[:, 1] - j_min)
        frontier = np.zeros(len(cells), dtype=bool)
        for di in range(-depth, depth + 1):
            for dj in range(-depth, depth + 1):
                if di == 0 and dj == 0:
                    continue
                nbr = keys + di * width + dj
                frontier |= ~np.isin(nbr, keys, assume_unique=True)
        return frontier

    # decision stages ----------------------------------------------------------

    def _stage_escape(self, pts: np.ndarray, pending: np.ndarray,
                      bits: np.ndarray, allowance: int) -> None:
        idx = np.nonzero(pending)[0]
        if len(idx) == 0:
            return
        zr = math.ldexp(1.0, -self.m)
        status, _ = certify_escape_batch(
            self._coeff_discs, pts[idx], zr, self._radius_hi,
            allowance, self._blow_cap)
        escaped = np.asarray(status).ravel() == ESCAPED
        bits[idx[escaped]] = 0
        pending[idx[escaped]] = False

    def _stage_interior(self, pts: np.ndarray, pending: np.ndarray,
                        bits: np.ndarray) -> None:
        centers, radii = self._domains
        if self._quad is None or len(centers) == 0:
            return
        idx = np.nonzero(pending)[0]
        if len(idx) == 0:
            return
        c, c_rad = self._quad
        entered = _disc_entry_batch(c, c_rad, pts[idx], centers, radii,
                                    self._radius_hi + 1.0, 512)
        bits[idx[entered]] = 1
        pending[idx[entered]] = False

    def _stage_near(self, pts: np.ndarray, pending: np.ndarray,
                    bits: np.ndarray) -> None:
        tree, eps = self._repelling_tree()
        if tree is None:
            return
        idx = np.nonzero(pending)[0]
        if len(idx) == 0:
            return
        query = np.stack([pts[idx].real, pts[idx].imag], axis=1)
        dist, _ = tree.query(query, k=1)
        bound = math.ldexp(1.0, -self.m + 1)
        near = dist * (1 + 1e-12) + eps + _PAD < bound
        bits[idx[near]] = 1
        pending[idx[near]] = False

    def _stage_far(self, pts: np.ndarray, pending: np.ndarray,
                   bits: np.ndarray) -> None:
        trees = self._kept_set()
        idx = np.nonzero(pending)[0]
        if len(idx) == 0:
            return
        query = np.stack([pts[idx].real, pts[idx].imag], axis=1)
        # 65/64 > 1 makes the clearance radius strictly wider than 2**-m
        reach = 65.0 / 64.0 * math.ldexp(1.0, -self.m)
        clear = np.ones(len(idx), dtype=bool)
        for tree, half_diag in trees:
            dist, _ = tree.query(query, k=1)
            clear &= dist > reach * (1 + _PAD) + half_diag + _PAD
        bits[idx[clear]] = 0
        pending[idx[clear]] = False

    # public interface ----------------------------------------------------------

    def decide_indices(self, ij: Sequence[Tuple[int, int]], g: int
                       ) -> np.ndarray:
        """Bits for grid points (i * 2**-g, j * 2**-g), one per pair."""
        if g > 45:
            raise InputError("grid pitch finer than exact float range")
        arr = np.asarray(list(ij), dtype=np.int64)
        if arr.size == 0:
            return np.zeros(0, dtype=np.int8)
        h = math.ldexp(1.0, -g)
        pts = arr[:, 0] * h + 1j * (arr[:, 1] * h)
        bits = np.full(len(arr), -1, dtype=np.int8)
        pending = np.ones(len(arr), dtype=bool)
        self._stage_escape(pts, pending, bits, 224)
        self._stage_interior(pts, pending, bits)
        self._stage_near(pts, pending, bits)
        self._stage_escape(pts, pending, bits, 2048)
        self._stage_far(pts, pending, bits)
        while pending.any() and (self._rep_stage
                                 < self.config.pipeline_period_cap):
            self._extend_repelling(self._rep_stage + 1)
            self._stage_near(pts, pending, bits)
            self._stage_far(pts, pending, bits)
        fallback = self.config.replace(
            global_steps=min(self.config.global_steps, 120_000))
        for pos in np.nonzero(pending)[0]:
            i, j = int(arr[pos, 0]), int(arr[pos, 1])
            d = DyadicPoint.of(Dyadic(i, g), Dyadic(j, g))
            try:
                bits[pos] = filled_query(
                    self.p, self.cert, d, self.m, fallback,
                    separation_armed=self.separation_armed,
                    isolate=lambda poly, mm, e: shared_isolate(
                        poly, mm, e, self.config))
            except Inconclusive:
                bits[pos] = 0
                self.exhausted += 1
        return bits


def filled_grid(p: PolyEnclosure, cert: OrbitCertificate, n: int,
                config: EngineConfig = DEFAULT_CONFIG,
                separation_armed: bool = True) -> FilledGrid:
    """Answer the membership query on the pitch 2**-(n+2) grid over the
    escape ball, at query precision m = n + 2."""
    if n < 0:
        raise InputError("resolution exponent must be nonnegative")
    g = n + 2
    m = n + 2
    bound = p.escape_radius() + Dyadic(1, m)
    lo = (-bound).floor_index(g)
    hi = bound.floor_index(g) + 1
    ctx = FilledContext(p, cert, m, config, separation_armed)
    limit_sq = bound.float_up() ** 2 * (1 + 1e-12) + _PAD
    h = math.ldexp(1.0, -g)
    pairs = []
    for i in range(lo, hi + 1):
        x_sq = (i * h) ** 2
        for j in range(lo, hi + 1):
            if x_sq + (j * h) ** 2 <= limit_sq:
                pairs.append((i, j))
    bits_flat = ctx.decide_indices(pairs, g)
    ni = nj = hi - lo + 1
    bits = np.full((ni, nj), -1, dtype=np.int8)
    for (i, j), bit in zip(pairs, bits_flat):
        bits[i - lo, j - lo] = bit
    return FilledGrid(n=n, g=g, m=m, i_lo=lo, j_lo=lo, bits=bits,
                      exhausted=ctx.exhausted)


def filled_cover(p: PolyEnclosure, cert: OrbitCertificate, n: int,
                 config: EngineConfig = DEFAULT_CONFIG,
                 separation_armed: bool = True) -> Cover:
    """A union of radius 2**-(n+1) balls within Hausdorff distance 2**-n
    of the filled set.

    Every grid point within 2**-(n+2) of K answers 1 and its ball covers
    the nearby K points; every 1-ball's center is within 2 * 2**-(n+2) of
    K, so the cover stays within 2**-(n+1) + 2**-(n+1) = 2**-n.
    """
    grid = filled_grid(p, cert, n, config, separation_armed)
    radius = Dyadic(1, n + 1)
    balls = [Ball(DyadicPoint.of(Dyadic(i, grid.g), Dyadic(j, grid.g)), radius)
             for i, j in grid.ones()]
    return Cover(tuple(balls))
