"""Rational tropical curves in the plane and their weighted counts.

Curves are counted two ways.  :func:`count_tropical` builds one line per end,
lets the perturbation machinery scatter them and reads multiplicities off the
rays whose index set uses every end.  :func:`oracle_enumerate` knows nothing
about Lie brackets: it splits the set of ends recursively and solves the
position constraints of each trivalent tree exactly.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from .lie import LieElement
from .perturbation import (Factor, GenericityError, PerturbedDiagram, PWall, complete_perturbed,
                           place)
from .scattering import Point
from .series import RingSpec, Vec, add, index, normal, primitive, wedge

@dataclass(frozen=True)
class TropicalCurve:
    """Vertices as exact points; edges as ``(tail, head, w)`` with ``w`` the
    weighted direction from tail to head.  ``None`` marks an unbounded side:
    ``(None, v, w)`` is an incoming end, ``(v, None, w)`` the outgoing one."""

    vertices: tuple[Point, ...]
    edges: tuple[tuple[int | None, int | None, Vec], ...]
    labels: tuple[str, ...] = ()

    def weight(self, e: int) -> int:
        return index(self.edges[e][2])

    def outgoing(self, v: int) -> list[Vec]:
        out = []
        for a, b, w in self.edges:
            if a == v:
                out.append(w)
            if b == v:
                out.append((-w[0], -w[1]))
        return out

    def check(self):
        bounded = sum(1 for a, b, _ in self.edges if a is not None and b is not None)
        if self.vertices and bounded != len(self.vertices) - 1:
            raise ValueError("curve is not a tree")
        for v in range(len(self.vertices)):
            vecs = self.outgoing(v)
            if (sum(x for x, _ in vecs), sum(y for _, y in vecs)) != (0, 0):
                raise ValueError(f"balancing fails at vertex {v}")

    def vertex_multiplicity(self, v: int) -> int:
        vecs = self.outgoing(v)
        if len(vecs) != 3:
            raise ValueError(f"vertex {v} has valence {len(vecs)}")
        a, b, c = vecs
        values = {abs(wedge(a, b)), abs(wedge(b, c)), abs(wedge(c, a))}
        if len(values) != 1:
            raise AssertionError(f"vertex {v} is not balanced")
        return values.pop()

    def ends(self) -> list[Vec]:
        return [w for a, _b, w in self.edges if a is None]

    def to_text(self) -> str:
        lines = [f"vertex {i} ({p[0]},{p[1]})" for i, p in enumerate(self.vertices)]
        for k, (a, b, w) in enumerate(self.edges):
            name = self.labels[k] if k < len(self.labels) else ""
            tail = "inf" if a is None else str(a)
            head = "inf" if b is None else str(b)
            lines.append(f"edge {tail} -> {head} w=({w[0]},{w[1]}) weight={index(w)} {name}".rstrip())
        return "\n".join(lines)


def multiplicity(c: TropicalCurve) -> int:
    """Product over vertices of ``|w1 ^ w2|`` for two of the three edge vectors."""
    out = 1
    for v in range(len(c.vertices)):
        out *= c.vertex_multiplicity(v)
    return out


# ---------------------------------------------------------------- from rays


def curve_from_ray(pd: PerturbedDiagram, ray: PWall) -> TropicalCurve:
    """The trivalent tree traced by the genealogy of ``ray``.

    Produced rays become vertices at their base points; leaf lines become
    incoming ends and ``ray`` itself the outgoing end.
    """
    if ray.is_line:
        return TropicalCurve((), ((None, None, ray.exponent),), ("leaf",))
    rays = [a for a in pd.ancestors(ray) if not a.is_line] + [ray]
    vid = {r.ident: k for k, r in enumerate(rays)}
    vertices = tuple(r.wall.base for r in rays)
    edges, labels = [], []
    for r in rays:
        for p in r.parents:
            parent = pd.walls[p]
            if parent.is_line:
                edges.append((None, vid[r.ident], parent.exponent))
                labels.append(f"end {sorted(parent.flags)}")
            else:
                edges.append((vid[p], vid[r.ident], parent.exponent))
                labels.append("")
    edges.append((vid[ray.ident], None, ray.exponent))
    labels.append("out")
    curve = TropicalCurve(vertices, tuple(edges), tuple(labels))
    curve.check()
    return curve


def ray_coefficient(ray: PWall) -> Fraction:
    """Scalar log coefficient of a single-term ray along its primitive normal."""
    (c,) = [c for _k, c in ray.wall.log.scalar_along(normal(ray.wall.m)).items()] or [Fraction(0)]
    return c


# ---------------------------------------------------------------- counting


def end_lines(w: Sequence[Vec], xi: Sequence[Point]) -> PerturbedDiagram:
    """One line per end ``w_r`` through ``xi_r``, with log ``l_r u_r z^{w_r}``."""
    ring = RingSpec(n=len(w), N=1, square_zero=True)
    factors = []
    for r, wr in enumerate(w, start=1):
        wr = tuple(wr)
        m = primitive(wr)
        log = LieElement.term(ring, wr, ring.u([(r, 1)]), deriv=normal(m), coeff=index(wr))
        factors.append(Factor(r, m, log, frozenset({(r, 1)}), wr))
    return place(factors, ring, xi)


def generic_points(s: int, seed: int) -> list[Point]:
    rng = random.Random(f"trop:{seed}")
    return [(Fraction(rng.randint(-997, 997), rng.randint(1, 61)),
             Fraction(rng.randint(-997, 997), rng.randint(1, 61))) for _ in range(s)]


def count_tropical(w: Sequence[Vec], seed: int = 0, retries: int = 8,
                   xi: Sequence[Point] | None = None) -> int:
    """Weighted number of rational curves with ends ``w`` through generic points."""
    w = [tuple(x) for x in w]
    if add_all(w) == (0, 0):
        raise ValueError("ends must not balance to zero")
    if len(w) == 1:
        return 1
    for attempt in range(retries + 1):
        points = xi if xi is not None else generic_points(len(w), seed * 1000 + attempt)
        try:
            pd = complete_perturbed(end_lines(w, points))
        except GenericityError:
            if xi is not None:
                raise
            continue
        full = frozenset((r, 1) for r in range(1, len(w) + 1))
        total = Fraction(0)
        for ray in pd.walls:
            if ray.flags == full:
                total += ray_coefficient(ray) / ray.weight
        if total.denominator != 1:
            raise AssertionError(f"non-integral count {total}")
        return int(total)
    raise GenericityError(f"no generic configuration after {retries + 1} draws")


def add_all(vs: Sequence[Vec]) -> Vec:
    out = (0, 0)
    for v in vs:
        out = add(out, v)
    return out


# ---------------------------------------------------------------- oracle


def _meet_lines(p: Point, u: Vec, q: Point, v: Vec) -> tuple[Fraction, Fraction]:
    """Parameters ``(a, b)`` with ``p + a u = q + b v`` for non-parallel ``u``, ``v``."""
    det = wedge(u, v)
    dx, dy = q[0] - p[0], q[1] - p[1]
    a = Fraction(dx * v[1] - dy * v[0], det)
    b = Fraction(dx * u[1] - dy * u[0], det)
    return a, b


def oracle_enumerate(w: Sequence[Vec], xi: Sequence[Point], max_ends: int = 5) -> list[TropicalCurve]:
    """All rational trivalent curves with incoming ends ``xi_r - R_{>=0} w_r``.

    Every subset ``S`` of ends with at least two elements is split as
    ``S1 | S2`` (the smallest index in ``S1``).  A single end constrains the
    joining vertex to its line; a subtree constrains it to the forward ray of
    the subtree's outgoing edge, strictly past the subtree's root.
    """
    w = [tuple(x) for x in w]
    xi = [(Fraction(p[0]), Fraction(p[1])) for p in xi]
    if len(w) > max_ends:
        raise ValueError(f"{len(w)} ends exceeds the exhaustive-search limit {max_ends}")
    if len(w) == 1:
        return [TropicalCurve((), ((None, None, w[0]),), ("end 1",))]

    def direction(S):
        return add_all([w[r] for r in S])

    def options(S):
        # a lone end is its whole line; a subtree is pinned at its root
        if len(S) == 1:
            (r,) = S
            return [(xi[r], False, (), (), r)]
        return [(vs[-1], True, vs, es, None) for vs, es in solve(S)]

    @lru_cache(maxsize=None)
    def solve(S: frozenset) -> tuple:
        items = sorted(S)
        first, rest = items[0], items[1:]
        out = []
        for mask in range(1 << len(rest)):
            S1 = frozenset([first] + [r for k, r in enumerate(rest) if not mask >> k & 1])
            S2 = S - S1
            if not S2:
                continue
            w1, w2 = direction(S1), direction(S2)
            if not wedge(w1, w2):
                continue
            for p, fwd1, vs1, es1, r1 in options(S1):
                for q, fwd2, vs2, es2, r2 in options(S2):
                    a, b = _meet_lines(p, w1, q, w2)
                    if (fwd1 and a <= 0) or (fwd2 and b <= 0):
                        continue
                    root = (p[0] + a * w1[0], p[1] + a * w1[1])
                    off = len(vs1)
                    top = off + len(vs2)
                    edges = list(es1)
                    edges += [(_shift(x, off), _shift(y, off), v, lab) for x, y, v, lab in es2]
                    for sub_vs, r, wS, shift in ((vs1, r1, w1, 0), (vs2, r2, w2, off)):
                        if r is not None:
                            edges.append((None, top, wS, f"end {r + 1}"))
                        else:
                            edges.append((shift + len(sub_vs) - 1, top, wS, ""))
                    out.append((vs1 + vs2 + (root,), tuple(edges)))
        return tuple(out)

    curves = []
    for vertices, edges in solve(frozenset(range(len(w)))):
        top = len(vertices) - 1
        es = [(x, y, v) for x, y, v, _l in edges] + [(top, None, direction(range(len(w))))]
        labels = [lab for *_e, lab in edges] + ["out"]
        c = TropicalCurve(vertices, tuple(es), tuple(labels))
        c.check()
        curves.append(c)
    return curves


def _shift(x, offset):
    return None if x is None else x + offset
