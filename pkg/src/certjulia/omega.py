"""Analytic circle-and-spokes covers exercising the Cover metric machinery.

For a finite bit list t = (0.d_1...d_K)_2 the modeled set is the unit
circle plus, for each k with d_k = 1, the radial spoke at angle 2*pi/k
spanning r in [1 - 1/k, 1]. Three certified covers are provided: the set
itself at resolution n, its filled version (the closed unit disk, the
same for every t), and the all-spokes slice bounding every t-set from
above. The geometry is elementary and exact, so these covers double as
fast fixtures for Cover and Hausdorff-distance machinery.
"""

from typing import List, Sequence, Tuple

import mpmath

from .dyadic import Dyadic, DyadicPoint
from .errors import InputError
from .geometry import Ball, Cover
from .oracles import ComplexOracle, circle_point

__all__ = ["BitList", "omega_cover", "omega_filled_cover", "w_slice_cover"]

_ORIGIN = DyadicPoint.of(0, 0)


class BitList:
    """Finite binary expansion t = (0.d_1...d_K)_2, trailing zeros dropped.

    Bits are explicit symbols rather than an oracle for t: extracting a
    binary digit from an approximation oracle is discontinuous at dyadic
    points, so the finite expansion is taken as the input itself.
    """

    __slots__ = ("bits",)

    def __init__(self, bits: Sequence[int]):
        data = []
        for b in bits:
            if b not in (0, 1):
                raise InputError("bits must be 0 or 1")
            data.append(int(b))
        while data and data[-1] == 0:
            data.pop()
        self.bits = tuple(data)

    @staticmethod
    def parse(text: str) -> "BitList":
        """Digits after the binary point, e.g. "101" for (0.101)_2."""
        if not set(text) <= {"0", "1"}:
            raise InputError("bit string must consist of 0s and 1s")
        return BitList([int(ch) for ch in text])

    def support(self) -> Tuple[int, ...]:
        """1-based indices k with d_k = 1, each owning one spoke."""
        return tuple(k for k, b in enumerate(self.bits, 1) if b)

    def value(self) -> Dyadic:
        """The expansion's exact dyadic value in [0, 1)."""
        num = 0
        for b in self.bits:
            num = (num << 1) | b
        return Dyadic(num, len(self.bits))

    def __eq__(self, other) -> bool:
        return isinstance(other, BitList) and self.bits == other.bits

    def __hash__(self) -> int:
        return hash(self.bits)

    def __repr__(self) -> str:
        return "BitList(0.%s)" % ("".join(map(str, self.bits)) or "0")


def _near(oracle: ComplexOracle, g: int) -> DyadicPoint:
    return oracle.query(g)


def _circle_balls(n: int) -> List[Ball]:
    """Radius 2**-(n+1) balls whose centers track S^1 within 2**-(n+3).

    2**(n+5) samples keep the chord spacing under 2**-(n+2), so every
    circle point lies inside some ball and every ball stays within
    2**-(n+1) + 2**-(n+3) of the circle.
    """
    count = 1 << (n + 5)
    radius = Dyadic(1, n + 1)
    return [Ball(_near(circle_point(j, count), n + 3), radius)
            for j in range(count)]


def _spoke_point(k: int, j: int, count: int) -> ComplexOracle:
    """Point (1 - 1/k + (j/count)/k) * e^(2*pi*i/k) on spoke k."""

    def compute():
        r = 1 - mpmath.mpf(count - j) / (k * count)
        return r * mpmath.exp(2j * mpmath.pi / k)

    return ComplexOracle.of_mpc(compute, name=f"spoke {k} sample {j}/{count}")


def _spoke_balls(k: int, n: int) -> List[Ball]:
    """Radius 2**-(n+1) balls along spoke k at pitch at most 2**-(n+2)."""
    if k < 1:
        raise InputError("spoke index must be positive")
    length_exp = max(0, k.bit_length() - 1)     # 1/k <= 2**-length_exp
    count = max(1, 1 << (n + 2 - min(n + 2, length_exp)))
    radius = Dyadic(1, n + 1)
    return [Ball(_near(_spoke_point(k, j, count), n + 3), radius)
            for j in range(count + 1)]


def omega_cover(t: BitList, n: int) -> Cover:
    """Cover of the circle-and-spokes set of t within Hausdorff 2**-n.

    The underlying set is S^1 together with the radial segment at angle
    2*pi/k over r in [1 - 1/k, 1] for every k in t's support.
    """
    if not isinstance(t, BitList):
        raise InputError("t must be a BitList of explicit binary digits")
    if n < 0:
        raise InputError("resolution exponent must be nonnegative")
    balls = _circle_balls(n)
    for k in t.support():
        balls.extend(_spoke_balls(k, n))
    return Cover(balls)


def omega_filled_cover(n: int) -> Cover:
    """Cover of the closed unit disk within Hausdorff 2**-n.

    Filling the circle-and-spokes set gives the disk for every t, so no
    bit list is taken: the filled set has one computable description.
    """
    if n < 0:
        raise InputError("resolution exponent must be nonnegative")
    g = n + 1
    radius = Dyadic(1, g)
    one = Dyadic(1)
    balls = []
    for i in range(-(1 << g), (1 << g) + 1):
        for j in range(-(1 << g), (1 << g) + 1):
            center = DyadicPoint.of(Dyadic(i, g), Dyadic(j, g))
            if not center.dist_sq(_ORIGIN) > one:
                balls.append(Ball(center, radius))
    return Cover(balls)


def w_slice_cover(n: int, k_max: int, t_level: int = 1) -> Cover:
    """Cover of the circle with every spoke attached, within 2**-n.

    This is the t_level = 1 slice of the parameter-indexed union: spokes
    at all k at once. Spokes beyond k_max are shorter than 1/k_max, so
    requiring k_max >= 2**(n+1) certifies the dropped tail stays within
    2**-(n+1) of the circle and inside the cover's tolerance.
    """
    if t_level != 1:
        raise InputError("only the t = 1 slice is modeled")
    if n < 0:
        raise InputError("resolution exponent must be nonnegative")
    if k_max < 1 << (n + 1):
        raise InputError(
            f"k_max={k_max} too small for n={n}: need at least {1 << (n + 1)} "
            f"so tail spokes are shorter than 2**-{n + 1}")
    balls = _circle_balls(n)
    for k in range(1, k_max + 1):
        balls.extend(_spoke_balls(k, n))
    return Cover(balls)
