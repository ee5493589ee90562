"""Relative invariants from wall functions.

The combinatorial side: a tangency profile ``P`` on lines with directions
``m_i`` splits into partitions ``k``, each giving a tuple of weighted ends
``w(k)``.  Tropical counts, relative invariants of the toric surface and
invariants of the blow-up are related by the two exact formulas implemented
in :func:`trop_to_relative` and :func:`degenerate`.

The algebraic side: for seeds ``(1 + A_i t_i z^{m_i}, 1 + t_i z^{m_i})`` with
commuting ``A_i`` the scalar log of a ray is a generating function for the
blow-up invariants, and its matrix log is ``sum_w N_w V_w``.  The vectors
``V_w`` may be dependent; :func:`extract_from_wall` then reports which
coordinates are pinned and the residual system instead of guessing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Mapping, Sequence

import sympy

from .lie import LieElement, _matrix_series_mul
from .scattering import ScatteringDiagram
from .perturbation import StandardDiagram
from .series import RingSpec, Series, Vec, add, index, normal, primitive, scale
from .tropical import count_tropical

Matrix = dict  # (row, col) -> Series with z = 0 and no t


def R(l: int) -> Fraction:
    return Fraction((-1) ** (l - 1), l * l)


def _lam_factor(l: int) -> Fraction:
    return Fraction((-1) ** (l - 1), l)


# ---------------------------------------------------------------- partitions


def canonical_weights(w: Sequence[Vec]) -> tuple[Vec, ...]:
    """Sort weighted ends by primitive direction (``(1,0)`` before ``(0,1)``), then weight."""
    return tuple(sorted((tuple(v) for v in w),
                        key=lambda v: (tuple(-c for c in primitive(v)), index(v))))


@lru_cache(maxsize=None)
def integer_partitions(p: int) -> tuple[tuple[int, ...], ...]:
    """Multiplicity vectors ``(k_1, ..., k_p)`` with ``sum l k_l = p``.

    Ordered by the number of parts, most parts first, then lexicographically
    descending, so ``(p,)`` (all ones) comes first and ``(0, ..., 1)`` last.
    """
    if p == 0:
        return ((),)
    out = []

    def rec(remaining, largest, parts):
        if remaining == 0:
            k = [0] * p
            for x in parts:
                k[x - 1] += 1
            out.append(tuple(k))
            return
        for x in range(min(remaining, largest), 0, -1):
            rec(remaining - x, x, parts + [x])

    rec(p, p, [])
    out.sort(key=lambda k: (-sum(k), tuple(-x for x in k)))
    return tuple(out)


@dataclass(frozen=True)
class Partition:
    """``k = (k_1, ..., k_n)`` with ``k_j`` a multiplicity vector partitioning ``P_j``."""

    k: tuple[tuple[int, ...], ...]
    ms: tuple[Vec, ...]

    @property
    def P(self) -> tuple[int, ...]:
        return tuple(sum(l * c for l, c in enumerate(kj, start=1)) for kj in self.k)

    @property
    def s(self) -> int:
        return sum(sum(kj) for kj in self.k)

    @property
    def w(self) -> tuple[Vec, ...]:
        out = []
        for kj, m in zip(self.k, self.ms):
            for l, c in enumerate(kj, start=1):
                out.extend([scale(l, m)] * c)
        return tuple(out)

    @property
    def w_class(self) -> tuple[Vec, ...]:
        """``w(k)`` up to reordering."""
        return canonical_weights(self.w)

    def trop_divisor(self) -> int:
        out = 1
        for kj in self.k:
            for l, c in enumerate(kj, start=1):
                out *= l ** c
        return out

    def degeneration_weight(self) -> Fraction:
        out = Fraction(1)
        for kj in self.k:
            for l, c in enumerate(kj, start=1):
                out *= Fraction(l ** c, math.factorial(c)) * R(l) ** c
        return out

    def trop_weight(self) -> Fraction:
        out = Fraction(1)
        for kj in self.k:
            for l, c in enumerate(kj, start=1):
                out *= R(l) ** c / math.factorial(c)
        return out

    def lam(self) -> Fraction:
        out = Fraction(1)
        for kj in self.k:
            for l, c in enumerate(kj, start=1):
                out *= _lam_factor(l) ** c / math.factorial(c)
        return out


def enumerate_partitions(P: Sequence[int], ms: Sequence[Vec] | None = None) -> list[Partition]:
    """All ``k`` partitioning ``P``; the first line varies slowest."""
    P = tuple(P)
    if ms is None:
        ms = tuple((1, 0) if j == 0 else (0, 1) for j in range(len(P)))
    ms = tuple(tuple(m) for m in ms)
    if add_all(scale(p, m) for p, m in zip(P, ms)) == (0, 0):
        raise ValueError("profile balances to zero")
    return [Partition(tuple(k), ms) for k in product(*(integer_partitions(p) for p in P))]


def add_all(vs) -> Vec:
    out = (0, 0)
    for v in vs:
        out = add(out, v)
    return out


def format_weights(w: Sequence[Vec], names: Mapping[Vec, str] | None = None) -> str:
    names = names or {(1, 0): "m1", (0, 1): "m2"}
    parts = []
    for v in w:
        m = primitive(v)
        l = index(v)
        base = names.get(m, f"({m[0]},{m[1]})")
        parts.append((base, l, base if l == 1 else f"{l}{base}"))
    parts = [p[2] for p in sorted(parts)]
    return "(" + ",".join(parts) + ")"


def profile_report(P: Sequence[int], ms: Sequence[Vec]) -> str:
    """Tangency bookkeeping for a profile: ``l_P``, ``m_P`` and contact orders."""
    total = add_all(scale(p, m) for p, m in zip(P, ms))
    lines = [f"P = {tuple(P)}", f"l_P = {index(total)}, m_P = {primitive(total)}"]
    for j, (p, m) in enumerate(zip(P, ms), start=1):
        lines.append(f"line {j} direction {tuple(m)}: exceptional multiplicity {p}")
    lines.append(f"unprescribed contact of order {index(total)} along {primitive(total)}")
    return "\n".join(lines)


# ---------------------------------------------------------------- dictionary


def trop_to_relative(n_trop, k: Partition) -> Fraction:
    return Fraction(n_trop) / k.trop_divisor()


def degenerate(table: Mapping[tuple, Fraction], P: Sequence[int],
               ms: Sequence[Vec] | None = None) -> Fraction:
    """Blow-up invariant from toric relative invariants keyed by ``w`` class."""
    table = {canonical_weights(w): v for w, v in table.items()}
    total = Fraction(0)
    for k in enumerate_partitions(P, ms):
        if k.w_class not in table:
            raise KeyError(f"missing invariant for w = {k.w_class}")
        total += Fraction(table[k.w_class]) * k.degeneration_weight()
    return total


def solve_degenerate(table: Mapping[tuple, Fraction], P: Sequence[int], value,
                     ms: Sequence[Vec] | None = None) -> tuple[tuple[Vec, ...], Fraction]:
    """The one relative invariant absent from ``table`` that makes
    :func:`degenerate` return ``value``."""
    table = {canonical_weights(w): Fraction(v) for w, v in table.items()}
    weights: dict = {}
    for k in enumerate_partitions(P, ms):
        weights[k.w_class] = weights.get(k.w_class, Fraction(0)) + k.degeneration_weight()
    missing = [w for w in weights if w not in table]
    if len(missing) != 1:
        raise ValueError(f"expected exactly one unknown class, found {len(missing)}")
    (w,) = missing
    known = sum((table[v] * c for v, c in weights.items() if v != w), Fraction(0))
    return w, (Fraction(value) - known) / weights[w]


# ---------------------------------------------------------------- seeds


@dataclass(frozen=True)
class GWSeed:
    """Lines ``m_i R`` with functions ``(1 + A_i t_i z^{m_i}, 1 + t_i z^{m_i})``.

    ``matrices[i]`` is a square matrix of constant series (polynomials in the
    ring's commuting symbols), or None for a zero matrix part.
    """

    ring: RingSpec
    ms: tuple[Vec, ...]
    matrices: tuple

    @classmethod
    def symbolic(cls, ms: Sequence[Vec], N: int,
                 names: Sequence[str | None] | None = None) -> "GWSeed":
        """Rank one, with line ``i`` carrying the symbol ``names[i]`` (None for no matrix)."""
        names = tuple(names or [f"A{i}" for i in range(1, len(ms) + 1)])
        ring = RingSpec(n=len(ms), N=N, symbols=tuple(a for a in names if a), rank=1)
        mats = tuple({(0, 0): Series.monomial(ring, (0, 0), ring.sym(a))} if a else None
                     for a in names)
        return cls(ring, tuple(tuple(m) for m in ms), mats)

    @classmethod
    def concrete(cls, ms: Sequence[Vec], N: int, rank: int, matrices: Sequence) -> "GWSeed":
        ring = RingSpec(n=len(ms), N=N, rank=rank)
        mats = []
        for a in matrices:
            if a is None:
                mats.append(None)
            else:
                mats.append({ij: Series.monomial(ring, (0, 0), ring.unit, c)
                             for ij, c in a.items() if c})
        return cls(ring, tuple(tuple(m) for m in ms), tuple(mats))

    def standard(self) -> StandardDiagram:
        ring = self.ring
        specs = []
        one = Series.one(ring)
        for i, (m, a) in enumerate(zip(self.ms, self.matrices), start=1):
            tz = Series.monomial(ring, m, ring.t(i))
            mat = None
            if a and ring.rank:
                mat = {(r, r): one for r in range(ring.rank)}
                for ij, s in a.items():
                    mat[ij] = mat.get(ij, Series.zero(ring)) + s * tz
            specs.append((m, 1 + tz, mat))
        return StandardDiagram.from_functions(ring, specs)

    def names(self) -> dict[Vec, str]:
        out: dict = {}
        for m in self.ms:
            out.setdefault(m, f"m{len(out) + 1}")
        return out

    def power(self, i: int, l: int) -> dict:
        a = self.matrices[i]
        if not a:
            return {}
        out = a
        for _ in range(l - 1):
            out = _matrix_series_mul(out, a, self.ring)
        return out

    def profiles(self, target: Vec) -> list[tuple[int, ...]]:
        """All ``P`` with ``sum P_i m_i = target`` and every ``P_i <= N``."""
        out = []
        for P in product(range(self.ring.N + 1), repeat=len(self.ms)):
            if add_all(scale(p, m) for p, m in zip(P, self.ms)) == tuple(target):
                out.append(P)
        return out


def _t_monomial(ring: RingSpec, P: Sequence[int], z: Vec) -> Series:
    exps = tuple(P)
    return Series(ring, {(tuple(z), (exps, (), (0,) * len(ring.symbols))): Fraction(1)})


def e_vector(seed: GWSeed, k: Partition, z: Vec) -> dict:
    """``(sum_i sum_l l A_i^l k_il) prod t_i^{P_i} z^target`` as a matrix of series."""
    ring = seed.ring
    mono = _t_monomial(ring, k.P, z)
    out: dict = {}
    for i, kj in enumerate(k.k):
        for l, c in enumerate(kj, start=1):
            if not c:
                continue
            for ij, s in seed.power(i, l).items():
                out[ij] = out.get(ij, Series.zero(ring)) + s * mono * (l * c)
    return {ij: s for ij, s in out.items() if s}


def _coords(mat: dict) -> dict:
    out = {}
    for ij, s in mat.items():
        for key, c in s.items():
            out[(ij, key)] = c
    return out


def _combine(pairs, ring) -> dict:
    out: dict = {}
    for coeff, mat in pairs:
        for ij, s in mat.items():
            out[ij] = out.get(ij, Series.zero(ring)) + s * coeff
    return {ij: s for ij, s in out.items() if s}


def _rank(vectors: Sequence[dict]) -> tuple[int, list[list[Fraction]]]:
    """Rank and a rational basis of linear relations among coordinate dicts."""
    keys = sorted({k for v in vectors for k in v}, key=repr)
    if not vectors:
        return 0, []
    mat = sympy.Matrix(len(keys), len(vectors),
                       lambda r, c: sympy.Rational(vectors[c].get(keys[r], 0)))
    rank = mat.rank()
    rel = []
    for v in mat.nullspace():
        den = math.lcm(*[int(x.q) for x in v])
        rel.append([Fraction(int(x * den)) for x in v])
    return rank, rel


@dataclass
class WeightClass:
    w: tuple[Vec, ...]
    partitions: list[Partition]
    e: list[dict]
    lam: list[Fraction]
    class_sum: dict
    V: dict


@dataclass
class BasisAnalysis:
    target: Vec
    classes: list[WeightClass]
    rank_e: int
    rank_classes: int
    rank_V: int
    relations: list[list[Fraction]]   # among class sums
    relations_V: list[list[Fraction]]
    ring: RingSpec

    @property
    def independent(self) -> bool:
        return self.rank_classes == len(self.classes)

    def labels(self, names=None) -> list[str]:
        return [format_weights(c.w, names) for c in self.classes]

    def verify_relation(self, coeffs: Sequence, use: str = "class_sum") -> bool:
        total = _combine([(Fraction(c), getattr(cl, use)) for c, cl in zip(coeffs, self.classes)],
                         self.ring)
        return not total

    def report(self, names=None) -> str:
        lines = [f"target {self.target}: {len(self.classes)} weight classes"]
        for c in self.classes:
            lam = ", ".join(str(x) for x in c.lam)
            lines.append(f"  {format_weights(c.w, names)}: {len(c.partitions)} partition(s), "
                         f"lambda = [{lam}]")
        lines.append(f"  rank of class vectors {self.rank_classes} / {len(self.classes)}")
        lines.append(f"  rank of V vectors {self.rank_V} / {len(self.classes)}")
        lines.append(f"  rank of individual e vectors {self.rank_e}")
        for r in self.relations:
            terms = [f"{c}*e{format_weights(cl.w, names)}" for c, cl in zip(r, self.classes) if c]
            lines.append("  relation: " + " + ".join(terms) + " = 0")
        return "\n".join(lines)


def analyze_seed(seed: GWSeed, target: Vec) -> BasisAnalysis:
    """Build every ``e_k``, the class sums, ``V_w`` and their ranks at ``target``."""
    target = tuple(target)
    by_class: dict = {}
    for P in seed.profiles(target):
        for k in enumerate_partitions(P, seed.ms):
            by_class.setdefault(k.w_class, []).append(k)
    classes = []
    for w in sorted(by_class, key=lambda w: (-len(w), [(-v[0], -v[1]) for v in w])):
        ks = by_class[w]
        es = [e_vector(seed, k, target) for k in ks]
        lams = [k.lam() for k in ks]
        classes.append(WeightClass(w, ks, es, lams,
                                   _combine([(1, e) for e in es], seed.ring),
                                   _combine(list(zip(lams, es)), seed.ring)))
    all_e = [_coords(e) for c in classes for e in c.e]
    rank_e, _ = _rank(all_e)
    rank_c, rel_c = _rank([_coords(c.class_sum) for c in classes])
    rank_v, rel_v = _rank([_coords(c.V) for c in classes])
    return BasisAnalysis(target, classes, rank_e, rank_c, rank_v, rel_c, rel_v, seed.ring)


def grid_seed(ell1: int, ell2: int, N: int) -> GWSeed:
    """``ell1`` lines along ``(1,0)`` with ``A_i`` and ``ell2`` along ``(0,1)`` with ``Q_j``."""
    names = [f"A{i}" for i in range(1, ell1 + 1)] + [f"Q{j}" for j in range(1, ell2 + 1)]
    ms = [(1, 0)] * ell1 + [(0, 1)] * ell2
    return GWSeed.symbolic(ms, N, names)


def analyze_basis(ell1: int, ell2: int, target: Vec) -> BasisAnalysis:
    N = max(target)
    return analyze_seed(grid_seed(ell1, ell2, N), target)


def partial_monomials(ell1: int, ell2: int) -> dict[str, tuple]:
    """Designated extraction monomials ``(symbol exponents, t exponents)`` for the
    classes ``a``, ``b_j`` and ``c_j`` at target ``ell1 m1 + ell2 m2``."""
    n = ell1 + ell2
    out = {}
    syms = [0] * n
    syms[0] = 1
    out["a"] = (tuple(syms), tuple([1] * n))
    for j in range(2, ell1 + 1):
        syms = [0] * n
        syms[0] = j
        t = [0] * n
        t[0] = j
        for i in range(1, ell1 - j + 1):
            t[i] = 1
        for i in range(ell1, n):
            t[i] = 1
        out[f"b{j}"] = (tuple(syms), tuple(t))
    for j in range(2, ell2 + 1):
        syms = [0] * n
        syms[ell1] = j
        t = [0] * n
        for i in range(ell1):
            t[i] = 1
        t[ell1] = j
        for i in range(ell1 + 1, ell1 + 1 + ell2 - j):
            t[i] = 1
        out[f"c{j}"] = (tuple(syms), tuple(t))
    return out


def partial_classes(ell1: int, ell2: int) -> dict[str, tuple[Vec, ...]]:
    m1, m2 = (1, 0), (0, 1)
    out = {"a": canonical_weights([m1] * ell1 + [m2] * ell2)}
    for j in range(2, ell1 + 1):
        out[f"b{j}"] = canonical_weights([scale(j, m1)] + [m1] * (ell1 - j) + [m2] * ell2)
    for j in range(2, ell2 + 1):
        out[f"c{j}"] = canonical_weights([m1] * ell1 + [scale(j, m2)] + [m2] * (ell2 - j))
    return out


# ---------------------------------------------------------------- extraction


@dataclass
class InvariantTable:
    blowup: dict = field(default_factory=dict)     # P -> N_{0,P}
    relative: dict = field(default_factory=dict)   # w class -> N_{0,w}
    free: list = field(default_factory=list)       # w classes left undetermined
    residual: list = field(default_factory=list)   # textual residual equations

    def report(self, names=None) -> str:
        lines = []
        for P, v in sorted(self.blowup.items()):
            lines.append(f"N_{{0,({','.join(map(str, P))})}} = {v}")
        for w, v in sorted(self.relative.items()):
            lines.append(f"N_{{0,{format_weights(w, names)}}} = {v}")
        for w in self.free:
            lines.append(f"N_{{0,{format_weights(w, names)}}} undetermined")
        lines.extend(f"residual: {r}" for r in self.residual)
        return "\n".join(lines)


def _restrict(mat: dict, z: Vec) -> dict:
    out = {}
    for ij, s in mat.items():
        t = Series(s.ring, {k: c for k, c in s.items() if k[0] == z})
        if t:
            out[ij] = t
    return out


def find_ray(d: ScatteringDiagram, direction: Vec):
    direction = tuple(direction)
    for w in d.walls:
        if w.kind == "ray" and w.direction == direction:
            return w
    return None


def extract_from_wall(seed: GWSeed, d: ScatteringDiagram, direction: Vec,
                      l_out: int) -> InvariantTable:
    """Invariants carried by the ray ``direction`` of the completed diagram ``d``
    at the exponent ``l_out * direction``."""
    direction = tuple(direction)
    target = scale(l_out, direction)
    table = InvariantTable()
    ray = find_ray(d, direction)
    log = ray.log if ray is not None else LieElement.zero(d.ring)
    scalar = log.scalar_along(normal(direction))
    for P in seed.profiles(target):
        key = (target, (tuple(P), (), (0,) * len(d.ring.symbols)))
        table.blowup[tuple(P)] = scalar[key] / l_out
    analysis = analyze_seed(seed, target)
    if not d.ring.rank:
        return table
    mat = _restrict(log.matrix_part(), target)
    unknowns = sympy.symbols(f"N0:{len(analysis.classes)}")
    coords = [_coords(c.V) for c in analysis.classes]
    rhs = _coords(mat)
    keys = sorted(set(rhs) | {k for v in coords for k in v}, key=repr)
    eqs = [sum(sympy.Rational(v.get(key, 0)) * x for v, x in zip(coords, unknowns))
           - sympy.Rational(rhs.get(key, 0)) for key in keys]
    sol = sympy.linsolve(eqs, unknowns)
    if not sol:
        table.residual.append("matrix part is not in the span of the V vectors")
        return table
    (values,) = list(sol)
    label = {x: sympy.Symbol(f"N_{{0,{format_weights(cl.w, seed.names())}}}")
             for cl, x in zip(analysis.classes, unknowns)}
    for cl, x, v in zip(analysis.classes, unknowns, values):
        if v.free_symbols:
            table.free.append(cl.w)
            if v != x:
                table.residual.append(f"{label[x]} = {v.subs(label)}")
        else:
            table.relative[cl.w] = Fraction(int(v.p), int(v.q))
    return table


def partial_extraction(ell1: int, ell2: int, d: ScatteringDiagram) -> dict[str, Fraction]:
    """Read the classes ``a``, ``b_j``, ``c_j`` from their designated monomials."""
    target = (ell1, ell2)
    ray = find_ray(d, primitive(target))
    mat = _restrict(ray.log.matrix_part(), target)[(0, 0)] if ray is not None else None
    seed = grid_seed(ell1, ell2, d.ring.N)
    analysis = analyze_seed(seed, target)
    classes = {c.w: c for c in analysis.classes}
    out = {}
    for label, (syms, t) in partial_monomials(ell1, ell2).items():
        key = (target, (t, (), syms))
        w = partial_classes(ell1, ell2)[label]
        v = classes[w].V[(0, 0)][key]
        if not v:
            raise AssertionError(f"monomial for {label} absent from its V vector")
        for other, c in classes.items():
            if other != w and (0, 0) in c.V and c.V[(0, 0)][key]:
                raise AssertionError(f"monomial for {label} also appears in {other}")
        out[label] = (mat[key] if mat is not None else Fraction(0)) / v
    return out


# ---------------------------------------------------------------- tropical assembly


def tropical_table(ws, seed: int = 0) -> dict:
    cache: dict = {}
    for w in ws:
        if w not in cache:
            cache[w] = count_tropical(list(w), seed=seed)
    return cache


def assemble_f_trop(seed: GWSeed, direction: Vec, trop_seed: int = 0) -> LieElement:
    """The ray log predicted by tropical counts, over all multiples of ``direction``.

    Matrix part: ``sum_k Ntrop(w(k)) (sum l A_i^l k_il) prod R_l^k_il / k_il! t^P``.
    Scalar part: ``l_out`` times the same sum without the matrix factor.
    """
    ring = seed.ring
    direction = tuple(direction)
    n = normal(direction)
    total = LieElement.zero(ring)
    counts: dict = {}
    l_out = 1
    while True:
        target = scale(l_out, direction)
        profiles = seed.profiles(target)
        if not profiles and l_out > ring.N * len(seed.ms):
            break
        for P in profiles:
            for k in enumerate_partitions(P, seed.ms):
                if k.w_class not in counts:
                    counts[k.w_class] = count_tropical(list(k.w_class), seed=trop_seed)
                c = counts[k.w_class] * k.trop_weight()
                if not c:
                    continue
                mono = _t_monomial(ring, P, target)
                total = total + LieElement.from_scalar_log(mono * (c * l_out), n)
                if ring.rank:
                    e = e_vector(seed, k, target)
                    if e:
                        total = total + LieElement.from_matrix_log(
                            {ij: s * c for ij, s in e.items()})
        l_out += 1
    return total
