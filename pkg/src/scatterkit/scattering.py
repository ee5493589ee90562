"""Scattering diagrams in the plane: walls, path-ordered products, completion.

A wall carries a primitive exponent direction ``m``, an affine support (a
full line or a half-line) and the logarithm of its automorphism.  Walls are
crossed along a small anticlockwise loop around a point.  A crossing at the
unit direction ``v`` contributes the wall's element when ``v`` points along
``m`` and its inverse when ``v`` points against it; the element crossed first
acts first, so the loop product is ``g_s . ... . g_1``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .lie import GroupElement, LieElement, bch, matrix_exp, matrix_log, to_text as lie_text
from .series import (RingSpec, format_coeff, Series, Vec, normal, pairing, primitive, series_exp,
                     series_log, wedge)

Point = tuple[Fraction, Fraction]
ORIGIN: Point = (Fraction(0), Fraction(0))


class NonCentral(ValueError):
    """A wall does not pass through the requested point."""


class OnWall(ValueError):
    pass


def _point(p) -> Point:
    return (Fraction(p[0]), Fraction(p[1]))


@dataclass(frozen=True)
class Wall:
    """One wall.  ``kind`` is ``"line"`` or ``"ray"``.

    A ray is ``base + R_{>=0} * direction``; a line is ``base + R * m``.
    ``direction`` defaults to ``m`` and may be ``-m`` for an incoming ray.
    """

    m: Vec
    kind: str
    base: Point
    log: LieElement
    direction: Vec | None = None
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "m", tuple(self.m))
        object.__setattr__(self, "base", _point(self.base))
        if self.kind not in ("line", "ray"):
            raise ValueError(f"unknown wall kind {self.kind!r}")
        if self.m == (0, 0) or primitive(self.m) != self.m:
            raise ValueError(f"wall direction {self.m} is not primitive")
        d = tuple(self.direction) if self.direction is not None else self.m
        if d not in (self.m, (-self.m[0], -self.m[1])):
            raise ValueError(f"support direction {d} is not parallel to {self.m}")
        if self.kind == "line":
            d = self.m
        object.__setattr__(self, "direction", d)
        for z in self.log.z_exponents():
            if wedge(z, self.m) or pairing(z, self.m) <= 0:
                raise ValueError(f"exponent {z} is off the ray spanned by {self.m}")

    @classmethod
    def from_functions(cls, m: Vec, kind: str, base, ring: RingSpec,
                       scalar: Series | None = None, matrix=None, **kw) -> "Wall":
        """Build a wall from its function pair (matrix series, scalar series)."""
        log = LieElement.zero(ring)
        if scalar is not None:
            log = log + LieElement.from_scalar_log(series_log(scalar), normal(m))
        if matrix is not None:
            log = log + matrix_log(matrix, ring)
        return cls(tuple(m), kind, base, log, **kw)

    @property
    def ring(self) -> RingSpec:
        return self.log.ring

    @property
    def element(self) -> GroupElement:
        return GroupElement(self.log)

    def scalar_function(self) -> Series:
        return series_exp(self.log.scalar_along(normal(self.m)))

    def matrix_function(self) -> dict:
        return matrix_exp(self.log)

    def contains(self, p: Point) -> bool:
        dx, dy = p[0] - self.base[0], p[1] - self.base[1]
        if dx * self.m[1] - dy * self.m[0]:
            return False
        if self.kind == "line":
            return True
        return dx * self.direction[0] + dy * self.direction[1] >= 0

    def directions_at(self, p: Point) -> list[Vec]:
        """Unit directions (as lattice vectors) of the support leaving ``p``."""
        if not self.contains(p):
            raise NonCentral(f"{self.describe()} misses {p}")
        neg = (-self.m[0], -self.m[1])
        if self.kind == "line" or p != self.base:
            if self.kind == "ray":
                return [self.direction, (-self.direction[0], -self.direction[1])]
            return [self.m, neg]
        return [self.direction]

    def translated(self, base) -> "Wall":
        return Wall(self.m, self.kind, base, self.log, self.direction, self.label)

    def with_log(self, log: LieElement) -> "Wall":
        return Wall(self.m, self.kind, self.base, log, self.direction, self.label)

    def sort_key(self):
        return (self.kind, self.base, self.direction, self.m, lie_text(self.log))

    def describe(self) -> str:
        b = ",".join(format_coeff(Fraction(c)) for c in self.base)
        return f"{self.kind} ({b}) dir {self.direction}"


@dataclass(frozen=True)
class ScatteringDiagram:
    ring: RingSpec
    walls: tuple[Wall, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "walls", tuple(self.walls))
        for w in self.walls:
            if w.ring != self.ring:
                raise ValueError("wall ring differs from diagram ring")

    def canonical(self) -> "ScatteringDiagram":
        """Drop trivial walls and sort the rest deterministically."""
        return ScatteringDiagram(self.ring, sorted((w for w in self.walls if w.log),
                                                   key=Wall.sort_key))

    def __eq__(self, other) -> bool:
        if not isinstance(other, ScatteringDiagram):
            return NotImplemented
        a, b = self.canonical(), other.canonical()
        return a.ring == b.ring and a.walls == b.walls

    def __hash__(self):
        return hash(self.canonical().walls)

    def added(self, walls: Iterable[Wall]) -> "ScatteringDiagram":
        return ScatteringDiagram(self.ring, self.walls + tuple(walls))

    def singular_points(self) -> list[Point]:
        pts = set()
        for w in self.walls:
            if w.kind == "ray":
                pts.add(w.base)
        for i, a in enumerate(self.walls):
            for b in self.walls[i + 1:]:
                p = intersection(a, b)
                if p is not None:
                    pts.add(p)
        return sorted(pts)


def intersection(a: Wall, b: Wall) -> Point | None:
    """Unique common point of two non-parallel supports, if any."""
    det = wedge(a.m, b.m)
    if not det:
        return None
    # a.base + s a.m = b.base + r b.m
    dx, dy = b.base[0] - a.base[0], b.base[1] - a.base[1]
    s = Fraction(dx * b.m[1] - dy * b.m[0], det)
    p = (a.base[0] + s * a.m[0], a.base[1] + s * a.m[1])
    if a.contains(p) and b.contains(p):
        return p
    return None


def _half(v: Vec) -> int:
    return 0 if v[1] > 0 or (v[1] == 0 and v[0] > 0) else 1


def _angle_cmp(u: Vec, v: Vec) -> int:
    hu, hv = _half(u), _half(v)
    if hu != hv:
        return hu - hv
    w = wedge(u, v)
    return -1 if w > 0 else (1 if w < 0 else 0)


def crossings(d: ScatteringDiagram, center=ORIGIN) -> list[tuple[Vec, int, Wall]]:
    """Crossings of the anticlockwise loop around ``center`` starting at angle 0.

    Each entry is ``(direction, sign, wall)``; ties keep the wall order.
    """
    center = _point(center)
    out = []
    for idx, w in enumerate(d.walls):
        if not w.log:
            continue
        for v in w.directions_at(center):
            sign = 1 if pairing(v, w.m) > 0 else -1
            out.append((idx, v, sign, w))
    out.sort(key=functools.cmp_to_key(
        lambda a, b: _angle_cmp(a[1], b[1]) or (a[0] - b[0])))
    return [(v, sign, w) for _idx, v, sign, w in out]


def path_ordered_product(d: ScatteringDiagram, order: int | None = None,
                         center=ORIGIN) -> GroupElement:
    """Product of the wall elements met along a small loop around ``center``.

    Raises :class:`NonCentral` when some wall misses ``center``; use
    :func:`local_diagram` first for diagrams with several singular points.
    """
    acc = LieElement.zero(d.ring)
    for _v, sign, w in crossings(d, center):
        g = w.log if sign > 0 else -w.log
        acc = bch(g, acc, order)
    return GroupElement(acc)


def local_diagram(d: ScatteringDiagram, p) -> ScatteringDiagram:
    p = _point(p)
    return ScatteringDiagram(d.ring, [w for w in d.walls if w.contains(p)])


@dataclass(frozen=True)
class ConsistencyReport:
    order: int
    defects: dict

    @property
    def consistent(self) -> bool:
        return not self.defects

    def describe(self) -> str:
        if self.consistent:
            return f"consistent to order {self.order}"
        lines = [f"inconsistent at {len(self.defects)} point(s) to order {self.order}"]
        for p, log in self.defects.items():
            lines.append(f"point ({p[0]},{p[1]}):")
            lines.extend("  " + s for s in lie_text(log).splitlines())
        return "\n".join(lines)


def check_consistency(d: ScatteringDiagram, order: int,
                      points: Sequence | None = None) -> ConsistencyReport:
    """Loop products around every singular point, modulo degree ``order + 1``."""
    if points is None:
        points = d.singular_points() or [ORIGIN]
    defects = {}
    for p in points:
        p = _point(p)
        theta = path_ordered_product(local_diagram(d, p), order, p)
        if theta.log:
            defects[p] = theta.log
    return ConsistencyReport(order, defects)


def _group_by_direction(x: LieElement) -> dict[Vec, LieElement]:
    groups: dict[Vec, dict] = {}
    for key, val in x.items():
        groups.setdefault(primitive(key[0]), {})[key] = val
    return {m: LieElement(x.ring, t) for m, t in sorted(groups.items())}


def complete_ks(d: ScatteringDiagram, order: int, center=ORIGIN) -> ScatteringDiagram:
    """Add rays from ``center`` until the diagram is consistent modulo degree ``order + 1``.

    At degree ``k`` the defect is central modulo degree ``k + 1``, so each
    primitive direction of it is cancelled by one ray carrying minus that part.
    Rays already present on the same support absorb the correction.
    """
    if order < 1:
        raise ValueError("order must be at least 1")
    center = _point(center)
    walls = list(d.walls)
    for w in walls:
        w.directions_at(center)
    added: dict[Vec, int] = {}
    for i, w in enumerate(walls):
        if w.kind == "ray" and w.base == center and w.direction == w.m:
            added.setdefault(w.m, i)
    for k in range(1, order + 1):
        theta = path_ordered_product(ScatteringDiagram(d.ring, walls), k, center)
        defect = theta.log.truncate(k)
        if defect.min_degree() is not None and defect.min_degree() < k:
            raise AssertionError(f"defect below degree {k} survived completion")
        for m, part in _group_by_direction(defect).items():
            if m in added:
                i = added[m]
                walls[i] = walls[i].with_log(bch(walls[i].log, -part, order))
            else:
                added[m] = len(walls)
                walls.append(Wall(m, "ray", center, -part))
    out = ScatteringDiagram(d.ring, walls)
    return ScatteringDiagram(d.ring, [w for w in out.walls if w.log])
