"""Certified disc arithmetic on float64 batches.

Discs are (center, radius) pairs, vectorized with numpy. Every operation
inflates the radius by a bound on its own floating-point error, so a batch
disc always contains the exact image of its inputs. The inflation constants
dominate IEEE double bounds by orders of magnitude: complex multiply errs by
at most ~5 ulp relative to |x||y|, a chain of radius updates errs
multiplicatively by ulp per op, and REL = 1e-12 with a per-product absolute
term REL*(|x||y|) swallows both for any chain shorter than ~1e4 ops.
Underflow is covered by ABS. Results are only used through one-sided bounds
(mod_lower, mod_upper), each fattened once more at the use site.
"""
from __future__ import annotations

from typing import Sequence, Tuple

import numpy as np

REL = 1e-12
ABS = 1e-290

Arr = np.ndarray


def _fatten(r: Arr, mag: Arr) -> Arr:
    return (r + mag * REL + ABS) * (1.0 + REL)


def disc_mul(c1: Arr, r1, c2: Arr, r2) -> Tuple[Arr, Arr]:
    """Product disc: center c1*c2, radius |c1|r2 + |c2|r1 + r1*r2 + fp slack."""
    a1, a2 = np.abs(c1), np.abs(c2)
    c = c1 * c2
    r = a1 * r2 + a2 * r1 + r1 * r2
    return c, _fatten(r, a1 * a2)


def disc_add(c1: Arr, r1, c2: Arr, r2) -> Tuple[Arr, Arr]:
    c = c1 + c2
    return c, _fatten(r1 + r2, np.abs(c))


def disc_square(c1: Arr, r1) -> Tuple[Arr, Arr]:
    a1 = np.abs(c1)
    c = c1 * c1
    r = 2.0 * a1 * r1 + r1 * r1
    return c, _fatten(r, a1 * a1)


def quad_step(zc: Arr, zr, cc, cr) -> Tuple[Arr, Arr]:
    """One disc image of z*z + c."""
    sc, sr = disc_square(zc, zr)
    return disc_add(sc, sr, cc, cr)


def poly_eval(coeffs: Sequence[Tuple[complex, float]], zc: Arr, zr) -> Tuple[Arr, Arr]:
    """Horner image of p(z) for disc coefficients, highest degree first."""
    ac = np.full_like(zc, coeffs[0][0])
    ar = np.full(zc.shape, coeffs[0][1], dtype=float)
    for cc, cr in coeffs[1:]:
        ac, ar = disc_mul(ac, ar, zc, zr)
        ac, ar = disc_add(ac, ar, np.asarray(cc), cr)
    return ac, ar


def mod_lower(c: Arr, r) -> Arr:
    return np.abs(c) * (1.0 - REL) - r - ABS


def mod_upper(c: Arr, r) -> Arr:
    return np.abs(c) * (1.0 + REL) + r + ABS


def dist_lower(c: Arr, r, point: complex) -> Arr:
    return np.abs(c - point) * (1.0 - REL) - r - ABS


def dist_upper(c: Arr, r, point: complex) -> Arr:
    return np.abs(c - point) * (1.0 + REL) + r + ABS


ESCAPED = 1
UNDECIDED = 0
BLOWN = -1


def certify_escape_batch(coeffs: Sequence[Tuple[complex, float]], zc: Arr, zr: Arr,
                         radius_hi: float, max_steps: int,
                         blow_cap: float) -> Tuple[Arr, int]:
    """Iterate discs under p, marking each as escaped / undecided / blown.

    ESCAPED means the whole disc orbit certifiably leaves the closed disk of
    the given escape radius, so every point inside escapes to infinity.
    BLOWN means radius growth drowned the estimate before a decision.
    Returns the status array and the number of disc iterations spent.
    """
    status = np.zeros(zc.shape, dtype=np.int8)
    act = np.arange(zc.size)
    c = zc.ravel().astype(complex)
    r = np.asarray(zr, dtype=float).ravel().copy()
    if r.size == 1 and c.size > 1:
        r = np.full(c.shape, float(r[0]))
    flat = status.ravel()
    spent = 0
    bar = radius_hi * (1.0 + REL)
    for _ in range(max_steps):
        if act.size == 0:
            break
        esc = mod_lower(c, r) > bar
        if np.any(esc):
            flat[act[esc]] = ESCAPED
            keep = ~esc
            act, c, r = act[keep], c[keep], r[keep]
        if act.size == 0:
            break
        blown = r > blow_cap
        if np.any(blown):
            flat[act[blown]] = BLOWN
            keep = ~blown
            act, c, r = act[keep], c[keep], r[keep]
        if act.size == 0:
            break
        c, r = poly_eval(coeffs, c, r)
        spent += act.size
    return status, spent


def orbit_float(coeffs: Sequence[complex], z0: Arr, k: int,
                bail: float = 1e10) -> Arr:
    """Plain float orbit for search heuristics; not certified."""
    z = np.asarray(z0, dtype=complex).copy()
    co = np.asarray(coeffs, dtype=complex)
    for _ in range(k):
        acc = np.full_like(z, co[0])
        for a in co[1:]:
            acc = acc * z + a
        z = acc
        big = ~np.isfinite(z.real) | ~np.isfinite(z.imag) | (np.abs(z) > bail)
        if np.any(big):
            z[big] = bail
    return z
