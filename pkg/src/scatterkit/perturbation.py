"""The deformation technique for standard diagrams.

A standard diagram has lines through the origin, each with its own parameter
``t_i``.  Over the square-zero ring every ``t_i`` splits into slots
``u_{i,1} + ... + u_{i,N}`` and the logarithm of each line breaks into
single-monomial factors.  Each factor is moved to its own generic parallel
line; the resulting diagram only ever sees pairwise collisions of
single-term walls, where the commutator is a single new ray.  Translating
every support back to the origin and merging recovers the consistent
completion of the original diagram.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Sequence

from .lie import LieElement, bch_many, bracket, collapse_lie, expand_lie, to_text as lie_text
from .scattering import ORIGIN, Point, ScatteringDiagram, Wall, intersection
from .series import RingSpec, Vec, index, primitive, t_ring, u_ring, wedge

Flag = tuple[int, int]


class GenericityError(RuntimeError):
    """Offsets put two interacting walls somewhere other than a plain crossing."""

    def __init__(self, msg: str, walls: Sequence[int] = ()):
        super().__init__(msg)
        self.walls = tuple(walls)


@dataclass(frozen=True)
class StandardDiagram:
    """Lines through the origin; line ``i`` (1-based) only uses ``t_i``."""

    ring: RingSpec
    lines: tuple[Wall, ...]

    def __post_init__(self):
        object.__setattr__(self, "lines", tuple(self.lines))
        if self.ring.square_zero or self.ring.total_order is not None:
            raise ValueError("standard diagrams live over the plain truncated ring")
        if len(self.lines) != self.ring.n:
            raise ValueError(f"{len(self.lines)} lines for {self.ring.n} parameters")
        for i, w in enumerate(self.lines, start=1):
            if w.kind != "line" or w.base != ORIGIN:
                raise ValueError(f"wall {i} is not a line through the origin")
            for (_z, (t, _u, _s)) in w.log.terms:
                if any(e for j, e in enumerate(t, start=1) if j != i) or not t[i - 1]:
                    raise ValueError(f"line {i} must depend on t{i} alone")

    @classmethod
    def from_functions(cls, ring: RingSpec, specs: Iterable) -> "StandardDiagram":
        """``specs`` holds ``(m, scalar, matrix)`` triples; either function may be None."""
        return cls(ring, tuple(Wall.from_functions(m, "line", ORIGIN, ring, scalar=s, matrix=a)
                               for m, s, a in specs))

    def as_scattering(self) -> ScatteringDiagram:
        return ScatteringDiagram(self.ring, self.lines)


@dataclass(frozen=True)
class PWall:
    """A wall of the perturbed diagram together with its genealogy."""

    ident: int
    wall: Wall
    flags: frozenset
    parents: tuple[int, ...] = ()
    round: int = 0
    source: tuple | None = None

    @property
    def is_line(self) -> bool:
        return self.wall.kind == "line"

    @property
    def exponent(self) -> Vec:
        (z,) = self.wall.log.z_exponents()
        return z

    @property
    def weight(self) -> int:
        return index(self.exponent)


@dataclass(frozen=True)
class Factor:
    """One single-monomial piece of a standard line, before it is placed."""

    line: int
    m: Vec
    log: LieElement
    flags: frozenset
    exponent: Vec


@dataclass(frozen=True)
class PerturbedDiagram:
    ring: RingSpec
    walls: tuple[PWall, ...]
    factors: tuple[Factor, ...]
    seed: int = 0
    attempt: int = 0
    explicit: bool = False
    events: tuple = field(default_factory=tuple)

    def by_id(self, ident: int) -> PWall:
        return self.walls[ident]

    def lines(self) -> list[PWall]:
        return [w for w in self.walls if w.is_line]

    def rays(self) -> list[PWall]:
        return [w for w in self.walls if not w.is_line]

    def rounds(self) -> list[list[PWall]]:
        last = max((w.round for w in self.walls), default=0)
        return [[w for w in self.walls if w.round == r] for r in range(1, last + 1)]

    def ancestors(self, w: PWall) -> list[PWall]:
        seen: dict[int, PWall] = {}
        stack = list(w.parents)
        while stack:
            p = self.walls[stack.pop()]
            if p.ident not in seen:
                seen[p.ident] = p
                stack.extend(p.parents)
        return [seen[k] for k in sorted(seen)]

    def leaves(self, w: PWall) -> list[PWall]:
        if w.is_line:
            return [w]
        return [a for a in self.ancestors(w) if a.is_line]

    def as_scattering(self) -> ScatteringDiagram:
        return ScatteringDiagram(self.ring, [w.wall for w in self.walls])

    def trace(self) -> str:
        """One line per produced ray: round, parents, point, child and its log."""
        out = []
        for rnd, a, b, p, c in self.events:
            log = lie_text(self.walls[c].wall.log).replace("\n", "; ")
            out.append(f"round {rnd}: #{a} x #{b} at ({p[0]},{p[1]}) -> #{c} {log}")
        return "\n".join(out)


# ---------------------------------------------------------------- factoring


def factorize(d: StandardDiagram) -> list[Factor]:
    """Split every expanded line log into pieces with one u-monomial and one exponent."""
    out = []
    for i, line in enumerate(d.lines, start=1):
        groups: dict = {}
        for key, val in expand_lie(line.log).items():
            z, (_t, u, _s) = key
            groups.setdefault((u, z), {})[key] = val
        ring = u_ring(d.ring)
        for (u, z) in sorted(groups, key=lambda k: (len(k[0]), k[1], k[0])):
            out.append(Factor(i, line.m, LieElement(ring, groups[(u, z)]), frozenset(u), z))
    return out


def _random_point(rng: random.Random) -> Point:
    return (Fraction(rng.randint(-997, 997), rng.randint(1, 61)),
            Fraction(rng.randint(-997, 997), rng.randint(1, 61)))


def place(factors: Sequence[Factor], ring: RingSpec, offsets: Sequence | None = None,
          seed: int = 0, attempt: int = 0) -> PerturbedDiagram:
    if offsets is not None:
        if len(offsets) != len(factors):
            raise ValueError(f"{len(offsets)} offsets for {len(factors)} factors")
        points = [(Fraction(p[0]), Fraction(p[1])) for p in offsets]
    else:
        rng = random.Random(f"{seed}:{attempt}")
        points = [_random_point(rng) for _ in factors]
    walls = tuple(PWall(k, Wall(f.m, "line", p, f.log), f.flags, (), 0, (f.line, f.exponent))
                  for k, (f, p) in enumerate(zip(factors, points)))
    return PerturbedDiagram(ring, walls, tuple(factors), seed, attempt, offsets is not None)


def deform(d: StandardDiagram, seed: int = 0, offsets: Sequence | None = None,
           attempt: int = 0) -> PerturbedDiagram:
    """Factor each line over the square-zero ring and move factors to generic offsets.

    ``offsets`` pins the base points explicitly, in :func:`factorize` order.
    """
    return place(factorize(d), u_ring(d.ring), offsets, seed, attempt)


# ---------------------------------------------------------------- scattering


def local_scatter(w1: Wall, w2: Wall) -> Wall | None:
    """The single ray produced where two single-term walls cross, or None.

    The log of the new ray is the bracket of the two logs taken in the
    orientation with ``m1 ^ m2 > 0``.  Both index sets must be disjoint for
    the result to be nonzero.
    """
    p = intersection(w1, w2)
    if p is None:
        return None
    for w in (w1, w2):
        if w.kind == "ray" and w.base == p:
            raise ValueError("walls meet at the base of a ray")
    if wedge(w1.m, w2.m) < 0:
        w1, w2 = w2, w1
    log = bracket(w1.log, w2.log)
    if not log:
        return None
    (z,) = log.z_exponents()
    return Wall(primitive(z), "ray", p, log)


def _overlap(a: Wall, b: Wall) -> bool:
    if wedge(a.m, b.m):
        return False
    return a.contains(b.base) or b.contains(a.base)


def genericity_violation(walls: Sequence[PWall]) -> GenericityError | None:
    """Check that every meeting point hosts at most one interacting pair.

    Walls sharing a ``u`` flag have vanishing bracket, so they may overlap or
    pass through each other's vertices freely.  Such coincidences are forced,
    not accidental: two trees on the same leaf lines put their outgoing rays on
    one line.  What must not happen is a second flag-disjoint pair at a point,
    or a flag-disjoint pair meeting at a ray base that is not its own vertex.
    """
    ws = [w.wall for w in walls]
    for i in range(len(ws)):
        for j in range(i + 1, len(ws)):
            if not (walls[i].flags & walls[j].flags) and _overlap(ws[i], ws[j]):
                return GenericityError("overlapping parallel walls", (i, j))
    at: dict[Point, set[int]] = {}
    for i in range(len(ws)):
        for j in range(i + 1, len(ws)):
            p = intersection(ws[i], ws[j])
            if p is not None:
                at.setdefault(p, set()).update((i, j))
    for p, s in at.items():
        members = sorted(s)
        live = {(a, b) for k, a in enumerate(members) for b in members[k + 1:]
                if not (walls[a].flags & walls[b].flags)}
        based = [k for k in members if ws[k].kind == "ray" and ws[k].base == p]
        if not based and len(live) <= 1:
            continue
        if len(based) == 1 and live <= {tuple(sorted(walls[based[0]].parents))}:
            continue
        return GenericityError(f"{len(s)} walls meet at ({p[0]},{p[1]})", members)
    return None


def _scatter_rounds(pd: PerturbedDiagram, max_rounds: int | None) -> PerturbedDiagram:
    walls = list(pd.walls)
    events = []
    newest = set(range(len(walls)))
    rnd = 0
    while newest and (max_rounds is None or rnd < max_rounds):
        rnd += 1
        fresh = []
        for b in sorted(newest):
            for a in range(len(walls)):
                if a in newest and a >= b:
                    continue
                wa, wb = walls[a], walls[b]
                if wa.flags & wb.flags:
                    continue
                p = intersection(wa.wall, wb.wall)
                if p is None:
                    continue
                if any(w.wall.kind == "ray" and w.wall.base == p for w in (wa, wb)):
                    continue
                child = local_scatter(wa.wall, wb.wall)
                if child is not None:
                    fresh.append((p, child.m, sorted(wa.flags | wb.flags), min(a, b), max(a, b),
                                  child))
        fresh.sort(key=lambda e: e[:5])
        newest = set()
        for p, _m, _f, a, b, child in fresh:
            k = len(walls)
            walls.append(PWall(k, child, walls[a].flags | walls[b].flags, (a, b), rnd))
            events.append((rnd, a, b, p, k))
            newest.add(k)
    return replace(pd, walls=tuple(walls), events=tuple(events))


def complete_perturbed(pd: PerturbedDiagram, retries: int = 8,
                       max_rounds: int | None = None) -> PerturbedDiagram:
    """Add pairwise scattering rays round by round until nothing new appears.

    Random offsets that turn out non-generic are re-drawn up to ``retries``
    times; pinned offsets fail immediately with :class:`GenericityError`.
    """
    attempt = pd.attempt
    while True:
        bad = genericity_violation(pd.walls)
        if bad is None:
            done = _scatter_rounds(pd, max_rounds)
            bad = genericity_violation(done.walls)
            if bad is None:
                return done
        if pd.explicit or attempt - pd.attempt >= retries:
            raise bad
        attempt += 1
        pd = place(pd.factors, pd.ring, None, pd.seed, attempt)


# ---------------------------------------------------------------- asymptotics


def asymptotic(pd: PerturbedDiagram) -> ScatteringDiagram:
    """Move every support to the origin, merge equal supports and return to ``t``.

    Merging multiplies the functions (a BCH product of logs in canonical wall
    order) before the symmetrising map sends ``u``-monomials back to powers of
    ``t``.  A merged log that is not symmetric in the slots signals a broken
    pipeline and raises.
    """
    groups: dict = {}
    for w in pd.walls:
        key = (w.wall.kind, w.wall.m if w.is_line else w.wall.direction)
        groups.setdefault(key, []).append(w.wall)
    out = []
    for (kind, direction), ws in sorted(groups.items()):
        ws = sorted(ws, key=Wall.sort_key)
        merged = bch_many([w.log for w in ws])
        log = collapse_lie(merged)
        if expand_lie(log) != merged:
            raise ValueError(f"merged {kind} along {direction} is not slot-symmetric")
        if log:
            out.append(Wall(ws[0].m, kind, ORIGIN, log, direction))
    return ScatteringDiagram(t_ring(pd.ring), out)


def perturbed_completion(d: StandardDiagram, seed: int = 0,
                         offsets: Sequence | None = None) -> tuple[PerturbedDiagram, ScatteringDiagram]:
    pd = complete_perturbed(deform(d, seed, offsets))
    return pd, asymptotic(pd)
