"""Balls, covers, Hausdorff distance, and the planar separation test."""
from __future__ import annotations

import heapq
from enum import Enum
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage

from .dyadic import (Dyadic, DyadicPoint, ZERO, as_fraction, dist_sq_point_rect,
                     sqrt_bounds)
from .errors import DomainError, InputError

NumberLike = object


class Ball:
    """Closed ball with dyadic center and radius."""

    __slots__ = ("center", "radius")

    def __init__(self, center: DyadicPoint, radius: Dyadic):
        if radius.sign < 0:
            raise DomainError("negative radius")
        self.center = center
        self.radius = radius

    @staticmethod
    def of(radius: NumberLike, *coords: NumberLike) -> "Ball":
        r = Dyadic.from_fraction(as_fraction(radius))
        return Ball(DyadicPoint.of(*coords), r)

    @property
    def dim(self) -> int:
        return self.center.dim

    def contains_point(self, p: DyadicPoint) -> bool:
        return p.within(self.center, self.radius)

    def bbox(self) -> Tuple[Tuple[Dyadic, ...], Tuple[Dyadic, ...]]:
        r = self.radius
        lo = tuple(x - r for x in self.center.coords)
        hi = tuple(x + r for x in self.center.coords)
        return lo, hi

    def key(self) -> tuple:
        return tuple((d.num, d.exp) for d in self.center.coords) + (self.radius.num, self.radius.exp)

    def __eq__(self, other):
        return isinstance(other, Ball) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"Ball({self.center}, r={self.radius})"


class Cover:
    """Finite union of closed balls of one common dimension."""

    __slots__ = ("balls", "_dim")

    def __init__(self, balls: Iterable[Ball], dim: Optional[int] = None):
        balls = tuple(balls)
        if balls:
            d = balls[0].dim
            for b in balls:
                if b.dim != d:
                    raise DomainError("mixed dimensions in one cover")
            if dim is not None and dim != d:
                raise DomainError("declared dimension disagrees with balls")
            dim = d
        elif dim is None:
            dim = 2
        self.balls = balls
        self._dim = dim

    @property
    def dim(self) -> int:
        return self._dim

    def is_empty(self) -> bool:
        return not self.balls

    def __len__(self) -> int:
        return len(self.balls)

    def __iter__(self):
        return iter(self.balls)

    def union(self, other: "Cover") -> "Cover":
        if self.is_empty():
            return other
        if other.is_empty():
            return self
        return Cover(self.balls + other.balls)

    def contains_point(self, p: DyadicPoint) -> bool:
        return any(b.contains_point(p) for b in self.balls)

    def dist_bounds_to_point(self, p: DyadicPoint, n: int) -> Tuple[Dyadic, Dyadic]:
        """Exact dyadic [lo, hi] around dist(p, union), hi - lo <= 2**-n."""
        if self.is_empty():
            raise DomainError("distance to an empty cover")
        best_lo: Optional[Dyadic] = None
        best_hi: Optional[Dyadic] = None
        for b in self.balls:
            s_lo, s_hi = sqrt_bounds(p.dist_sq(b.center), n + 1)
            lo = s_lo - b.radius
            hi = s_hi - b.radius
            if lo.sign < 0:
                lo = ZERO
            if hi.sign < 0:
                hi = ZERO
            if best_lo is None or lo < best_lo:
                best_lo = lo
            if best_hi is None or hi < best_hi:
                best_hi = hi
            if best_hi.is_zero():
                return ZERO, ZERO
        if best_hi < best_lo:
            best_lo = best_hi
        return best_lo, best_hi

    def bbox(self) -> Tuple[Tuple[Dyadic, ...], Tuple[Dyadic, ...]]:
        if self.is_empty():
            raise DomainError("bbox of an empty cover")
        los, his = zip(*(b.bbox() for b in self.balls))
        lo = tuple(min(l[k] for l in los) for k in range(self._dim))
        hi = tuple(max(h[k] for h in his) for k in range(self._dim))
        return lo, hi

    # serialization ----------------------------------------------------------

    def serialize(self) -> str:
        lines = [f"COVER dim={self._dim} count={len(self.balls)}"]
        for b in self.balls:
            parts = [str(x) for x in b.center.coords]
            parts.append(str(b.radius))
            lines.append(" ".join(parts))
        return "\n".join(lines) + "\n"

    @staticmethod
    def parse(text: str) -> "Cover":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise InputError("empty cover text")
        head = lines[0].split()
        if len(head) != 3 or head[0] != "COVER":
            raise InputError(f"bad cover header: {lines[0]!r}")
        try:
            dim = int(head[1].removeprefix("dim="))
            count = int(head[2].removeprefix("count="))
        except ValueError as e:
            raise InputError(f"bad cover header: {lines[0]!r}") from e
        if dim not in (2, 4):
            raise InputError(f"unsupported dimension {dim}")
        if len(lines) - 1 != count:
            raise InputError(f"expected {count} balls, found {len(lines) - 1}")
        balls = []
        for ln in lines[1:]:
            parts = ln.split()
            if len(parts) != dim + 1:
                raise InputError(f"bad ball line: {ln!r}")
            vals = [Dyadic.parse(p) for p in parts]
            balls.append(Ball(DyadicPoint(vals[:dim]), vals[dim]))
        return Cover(balls, dim=dim)

    def __eq__(self, other):
        return (isinstance(other, Cover) and self._dim == other._dim
                and self.balls == other.balls)

    def __repr__(self):
        return f"Cover(dim={self._dim}, count={len(self.balls)})"


# Hausdorff distance ---------------------------------------------------------


def _clamp_point(p: DyadicPoint, lo: Sequence[Dyadic], hi: Sequence[Dyadic]) -> DyadicPoint:
    out = []
    for x, a, b in zip(p.coords, lo, hi):
        if x < a:
            x = a
        elif x > b:
            x = b
        out.append(x)
    return DyadicPoint(out)


def _max_dist_sq_rect(p: DyadicPoint, lo: Sequence[Dyadic], hi: Sequence[Dyadic]) -> Dyadic:
    total = ZERO
    for x, a, b in zip(p.coords, lo, hi):
        d1, d2 = abs(a - x), abs(b - x)
        total = total + (d1 if d1 > d2 else d2).square()
    return total


def _dist_lower_to_union(p: DyadicPoint, balls: Sequence[Ball], g: int) -> Dyadic:
    best: Optional[Dyadic] = None
    for b in balls:
        lo = sqrt_bounds(p.dist_sq(b.center), g)[0] - b.radius
        if lo.sign < 0:
            lo = ZERO
        if best is None or lo < best:
            best = lo
        if best.is_zero():
            break
    return best


def _sup_dist_bracket(src: Cover, dst: Cover, tol: Dyadic, g: int) -> Tuple[Dyadic, Dyadic]:
    """Bracket sup over the union src of dist(x, union dst), width <= tol."""
    dst_balls = dst.balls
    glo = ZERO
    heap: List[tuple] = []
    serial = 0
    for b in src.balls:
        lb = _dist_lower_to_union(b.center, dst_balls, g)
        if lb > glo:
            glo = lb
        # sup over one src ball against one dst ball is |ci-cj| + ri - rj,
        # so the min over dst balls bounds this src ball from above
        ub: Optional[Dyadic] = None
        for o in dst_balls:
            cand = sqrt_bounds(b.center.dist_sq(o.center), g)[1] + b.radius - o.radius
            if cand.sign < 0:
                cand = ZERO
            if ub is None or cand < ub:
                ub = cand
        lo_c, hi_c = b.bbox()
        heapq.heappush(heap, (-ub, serial, lo_c, hi_c, b))
        serial += 1

    while heap:
        neg_ub, _, lo_c, hi_c, b = heapq.heappop(heap)
        ub = -neg_ub
        if ub <= glo + tol:
            return glo, ub
        # subdivide the rect, keep only parts meeting the source ball
        mids = [(a + c).scaled(-1) for a, c in zip(lo_c, hi_c)]
        dim = len(lo_c)
        for mask in range(1 << dim):
            c_lo = tuple(lo_c[k] if not (mask >> k) & 1 else mids[k] for k in range(dim))
            c_hi = tuple(mids[k] if not (mask >> k) & 1 else hi_c[k] for k in range(dim))
            if dist_sq_point_rect(b.center.coords, c_lo, c_hi) > b.radius.square():
                continue
            witness = _clamp_point(b.center, c_lo, c_hi)
            lb = _dist_lower_to_union(witness, dst_balls, g)
            if lb > glo:
                glo = lb
            child_ub: Optional[Dyadic] = None
            for o in dst_balls:
                m = sqrt_bounds(_max_dist_sq_rect(o.center, c_lo, c_hi), g)[1] - o.radius
                if m.sign < 0:
                    m = ZERO
                if child_ub is None or m < child_ub:
                    child_ub = m
                    if child_ub <= glo:
                        break
            if child_ub <= glo:
                continue
            heapq.heappush(heap, (-child_ub, serial, c_lo, c_hi, b))
            serial += 1
    return glo, glo


def hausdorff_distance(a: Cover, b: Cover, n: int) -> Dyadic:
    """Dyadic r with |r - d_H(a, b)| <= 2**-n; exact on easy inputs."""
    if a.is_empty() or b.is_empty():
        raise DomainError("hausdorff distance needs nonempty covers")
    if a.dim != b.dim:
        raise DomainError("dimension mismatch")
    if sorted(x.key() for x in a.balls) == sorted(x.key() for x in b.balls):
        return ZERO
    if len(a) == 1 and len(b) == 1:
        ba, bb = a.balls[0], b.balls[0]
        s_lo, s_hi = sqrt_bounds(ba.center.dist_sq(bb.center), n + 2)
        gap = abs(ba.radius - bb.radius)
        if s_lo == s_hi:
            return s_lo + gap
        return (s_lo + s_hi).scaled(-1) + gap

    tol = Dyadic(1, n + 1)
    g = n + 4
    lo1, hi1 = _sup_dist_bracket(a, b, tol, g)
    lo2, hi2 = _sup_dist_bracket(b, a, tol, g)
    lo = lo1 if lo1 > lo2 else lo2
    hi = hi1 if hi1 > hi2 else hi2
    if lo == hi:
        return lo
    return (lo + hi).scaled(-1)


# separation test -------------------------------------------------------------


class SeparationResult(Enum):
    Separated = "Separated"
    NotSeparatedAtThisResolution = "NotSeparatedAtThisResolution"


_FLOAT_SLACK = 2.0 ** -30


def _mark_cells(grid: np.ndarray, balls: Sequence[Ball], g: int, i0: int, j0: int,
                inner: bool) -> None:
    """Mark cells meeting a ball (outer) or contained in one ball (inner).

    Cell (i, j) is [(i0+i)*h, (i0+i+1)*h] x [(j0+j)*h, (j0+j+1)*h], h = 2**-g.
    Float screening decides clear cases; borderline cells get an exact check.
    """
    h = 2.0 ** -g
    ni, nj = grid.shape
    for b in balls:
        cx, cy = b.center.coords
        r = b.radius
        if inner and r.sign <= 0:
            continue
        fi_lo = (cx - r).floor_index(g) - i0
        fi_hi = (cx + r).floor_index(g) - i0
        fj_lo = (cy - r).floor_index(g) - j0
        fj_hi = (cy + r).floor_index(g) - j0
        fi_lo, fi_hi = max(fi_lo, 0), min(fi_hi, ni - 1)
        fj_lo, fj_hi = max(fj_lo, 0), min(fj_hi, nj - 1)
        if fi_lo > fi_hi or fj_lo > fj_hi:
            continue
        ii = np.arange(fi_lo, fi_hi + 1)
        jj = np.arange(fj_lo, fj_hi + 1)
        x_lo = (ii + i0) * h
        y_lo = (jj + j0) * h
        cxf, cyf = float(cx), float(cy)
        rf_sq = float(r) ** 2
        if inner:
            dx = np.maximum(np.abs(x_lo - cxf), np.abs(x_lo + h - cxf))
            dy = np.maximum(np.abs(y_lo - cyf), np.abs(y_lo + h - cyf))
        else:
            dx = np.maximum(np.maximum(x_lo - cxf, cxf - (x_lo + h)), 0.0)
            dy = np.maximum(np.maximum(y_lo - cyf, cyf - (y_lo + h)), 0.0)
        dist_sq = dx[:, None] ** 2 + dy[None, :] ** 2
        sure = dist_sq <= rf_sq - _FLOAT_SLACK
        unsure = np.abs(dist_sq - rf_sq) < _FLOAT_SLACK
        if np.any(unsure):
            r_sq = r.square()
            for di, dj in zip(*np.nonzero(unsure)):
                i, j = int(fi_lo + di), int(fj_lo + dj)
                lo_pt = (Dyadic(i + i0, g), Dyadic(j + j0, g))
                hi_pt = (Dyadic(i + i0 + 1, g), Dyadic(j + j0 + 1, g))
                if inner:
                    far = _max_dist_sq_rect(b.center, lo_pt, hi_pt)
                    sure[di, dj] = far <= r_sq
                else:
                    near = dist_sq_point_rect(b.center.coords, lo_pt, hi_pt)
                    sure[di, dj] = near <= r_sq
        grid[fi_lo:fi_hi + 1, fj_lo:fj_hi + 1] |= sure


def raster_separated(balls: Sequence[Ball], a: DyadicPoint, b: DyadicPoint, g: int,
                     inner: bool = False) -> bool:
    """Flood-fill separation of a from b by the marked cells of the balls."""
    if not balls:
        return False
    pts = [a, b]
    xs = [p.coords[0] for p in pts]
    ys = [p.coords[1] for p in pts]
    for ball in balls:
        (blx, bly), (bhx, bhy) = ball.bbox()
        xs += [blx, bhx]
        ys += [bly, bhy]
    i0 = min(x.floor_index(g) for x in xs) - 2
    i1 = max(x.floor_index(g) for x in xs) + 3
    j0 = min(y.floor_index(g) for y in ys) - 2
    j1 = max(y.floor_index(g) for y in ys) + 3
    ni, nj = i1 - i0 + 1, j1 - j0 + 1
    if ni * nj > 80_000_000:
        raise DomainError("separation raster too large at this resolution")
    grid = np.zeros((ni, nj), dtype=bool)
    _mark_cells(grid, balls, g, i0, j0, inner)

    ia, ja = a.coords[0].floor_index(g) - i0, a.coords[1].floor_index(g) - j0
    ib, jb = b.coords[0].floor_index(g) - i0, b.coords[1].floor_index(g) - j0
    if grid[ia, ja] or grid[ib, jb]:
        return True
    labels, _ = ndimage.label(~grid)
    return labels[ia, ja] != labels[ib, jb]


def separates(e: Cover, a: DyadicPoint, b: DyadicPoint, g: int) -> SeparationResult:
    """Raster test: does the cover keep a and b in different free components."""
    if a.dim != 2 or b.dim != 2 or (not e.is_empty() and e.dim != 2):
        raise DomainError("separation test is planar")
    if g < 1:
        raise DomainError("resolution exponent must be >= 1")
    if e.is_empty():
        return SeparationResult.NotSeparatedAtThisResolution
    if raster_separated(e.balls, a, b, g, inner=False):
        return SeparationResult.Separated
    return SeparationResult.NotSeparatedAtThisResolution
