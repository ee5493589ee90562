"""Coupled 2d-4d wall-crossing in a pointed groupoid ring.

Objects are a finite set ``V`` plus the base object ``"o"``.  A morphism is
addressed as ``(source, target, shift)`` where ``shift`` in ``Z^2`` is its
offset from the chosen base point of its torsor.  Base points are taken as
``e_ij = e_i - e_j``, so shifts add under composition.  Loops at every object
with the same shift together form the central element ``X_gamma``.

Two automorphism types act on the truncated ring: ``S`` conjugates by
``1 - mu t^p X_a`` and ``K`` rescales ``X_a`` by ``(1 - t X_gamma)^(-omega)``.
Their generators live in the Lie ring ``L_Gamma``, whose elements here are
split into ``ad``-terms and ``kappa``-terms ``X_a -> <m(a), v> X_delta X_a``.
:func:`upsilon` sends them to the vertex Lie algebra.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterable, Mapping, Sequence

from .lie import LieElement, bracket, bch
from .scattering import ScatteringDiagram, Wall, complete_ks
from .series import RingSpec, Vec, add, normal, pairing, primitive, wedge

BASE = "o"
Morphism = tuple[str, str, Vec]


class NotComposable(ValueError):
    pass


class HypothesisError(ValueError):
    """The groupoid data violate the hypothesis needed for ``upsilon``."""


def _vec(v) -> Vec:
    return (int(v[0]), int(v[1]))


def _morph(a) -> Morphism:
    return (str(a[0]), str(a[1]), _vec(a[2]))


# ---------------------------------------------------------------- groupoid


@dataclass(frozen=True)
class GroupoidData:
    """Finite groupoid configuration.

    ``dirac`` is the antisymmetric matrix of the Dirac pairing, ``omega``
    gives ``Omega(gamma)`` (absent means 0), ``mu`` gives integer ``mu`` on
    morphisms.  ``twist`` selects the sign convention: ``"split"`` is
    ``(-1)^<,>_D`` on two loops and ``+1`` otherwise; ``"bilinear"`` is
    ``(-1)^<m(a), m(b)>_D`` for every composable pair.  The split twist is
    a cocycle only while the central elements in play pair evenly and no
    reverse pair ``(i, j), (j, i)`` occurs; :func:`check_cocycle` detects
    violations.
    """

    objects: tuple[str, ...]
    dirac: tuple[tuple[int, int], tuple[int, int]] = ((0, 1), (-1, 0))
    omega: Mapping[Vec, int] = field(default_factory=dict)
    mu: Mapping[Morphism, int] = field(default_factory=dict)
    twist_mode: str = "split"
    angles: Mapping[Morphism, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        objs = tuple(str(x) for x in self.objects)
        if BASE in objs or len(set(objs)) != len(objs):
            raise ValueError("objects must be distinct and exclude the base object")
        object.__setattr__(self, "objects", objs)
        d = tuple(tuple(int(x) for x in row) for row in self.dirac)
        if d[0][0] or d[1][1] or d[0][1] != -d[1][0]:
            raise ValueError("the Dirac pairing must be antisymmetric")
        object.__setattr__(self, "dirac", d)
        object.__setattr__(self, "omega", {_vec(k): int(v) for k, v in self.omega.items() if v})
        mu = {}
        for k, v in self.mu.items():
            k = _morph(k)
            self._check_object(k[0])
            self._check_object(k[1])
            mu[k] = int(v)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "angles", {_morph(k): Fraction(v) for k, v in self.angles.items()})
        if self.twist_mode not in ("split", "bilinear"):
            raise ValueError(f"unknown twist {self.twist_mode!r}")

    def _check_object(self, x: str):
        if x != BASE and x not in self.objects:
            raise ValueError(f"unknown object {x!r}")

    @property
    def all_objects(self) -> tuple[str, ...]:
        return self.objects + (BASE,)

    @property
    def rank(self) -> int:
        return len(self.objects)

    def index(self, x: str) -> int:
        return self.objects.index(x)

    # -- lattice data

    def dirac_pair(self, u: Vec, v: Vec) -> int:
        return self.dirac[0][1] * wedge(u, v)

    def Omega(self, g: Vec) -> int:
        return self.omega.get(_vec(g), 0)

    def omega_of(self, g: Vec, a: Morphism) -> int:
        """``omega(gamma, a) = Omega(gamma) <m(a), n_gamma>``."""
        return self.Omega(g) * pairing(a[2], normal(g))

    def hypothesis_holds(self) -> bool:
        """``omega(gamma, gamma') = Omega(gamma) <gamma, gamma'>_D`` on ``Gamma``."""
        return self.dirac[0][1] == 1 or not self.omega

    # -- morphisms

    @staticmethod
    def is_loop(a: Morphism) -> bool:
        return a[0] == a[1]

    def compose(self, a: Morphism, b: Morphism) -> Morphism | None:
        if a[1] != b[0]:
            return None
        return (a[0], b[1], add(a[2], b[2]))

    def twist(self, a: Morphism, b: Morphism) -> int:
        if a[1] != b[0]:
            raise NotComposable(f"{a} and {b} do not compose")
        if self.twist_mode == "bilinear" or (self.is_loop(a) and self.is_loop(b)):
            return -1 if self.dirac_pair(a[2], b[2]) % 2 else 1
        return 1

    def refinement(self, m: Vec) -> int:
        """A sign ``s`` with ``s(u + v) = s(u) s(v) (-1)^<u, v>_D``."""
        return -1 if (self.dirac[0][1] * m[0] * m[1]) % 2 else 1

    def morphisms(self, box: int = 1) -> list[Morphism]:
        shifts = [(x, y) for x in range(-box, box + 1) for y in range(-box, box + 1)]
        return [(s, t, m) for s in self.all_objects for t in self.all_objects for m in shifts]


def check_cocycle(gd: GroupoidData, morphisms: Sequence[Morphism]) -> list[tuple]:
    """Composable triples violating ``s(a,b+c) s(b,c) = s(a,b) s(a+b,c)``."""
    bad = []
    for a, b, c in product(morphisms, repeat=3):
        ab = gd.compose(a, b)
        bc = gd.compose(b, c)
        if ab is None or bc is None:
            continue
        if gd.twist(a, bc) * gd.twist(b, c) != gd.twist(a, b) * gd.twist(ab, c):
            bad.append((a, b, c))
    return bad


def check_symmetry(gd: GroupoidData, morphisms: Sequence[Morphism]) -> list[tuple]:
    bad = []
    for a, b in product(morphisms, repeat=2):
        if gd.compose(a, b) is not None and gd.compose(b, a) is not None:
            if gd.twist(a, b) != gd.twist(b, a):
                bad.append((a, b))
    return bad


def closure(gd: GroupoidData, gens: Iterable[Morphism], depth: int = 2) -> list[Morphism]:
    out = set(_morph(g) for g in gens)
    for _ in range(depth):
        new = set(out)
        for a, b in product(out, repeat=2):
            c = gd.compose(a, b)
            if c is not None:
                new.add(c)
        out = new
    return sorted(out)


def word_morphisms(gd: GroupoidData, words: Iterable[Sequence], depth: int = 2) -> list[Morphism]:
    """Morphisms of the ``S`` factors and loops of the ``K`` factors, closed under composition."""
    gens = []
    for w in words:
        for f in w:
            if isinstance(f, SFactor):
                gens.append(f.morphism)
            else:
                gens.extend((x, x, f.gamma) for x in gd.all_objects)
    return closure(gd, gens, depth)


def reverse_pairs(morphisms: Iterable[Morphism]) -> list[tuple[str, str]]:
    pairs = {(a[0], a[1]) for a in morphisms if a[0] != a[1]}
    return sorted((s, t) for s, t in pairs if (t, s) in pairs and s < t)


# ---------------------------------------------------------------- ring


class GroupoidElement:
    """Finite sum ``sum c X_a t^p`` truncated at ``t^order``."""

    __slots__ = ("gd", "order", "terms")

    def __init__(self, gd: GroupoidData, order: int, terms: Mapping | None = None):
        self.gd = gd
        self.order = order
        clean = {}
        for (a, p), c in (terms or {}).items():
            c = Fraction(c)
            if c and p <= order:
                clean[(_morph(a), int(p))] = c
        self.terms = clean

    @classmethod
    def basis(cls, gd, order, a: Morphism, p: int = 0, c=1) -> "GroupoidElement":
        return cls(gd, order, {(a, p): c})

    @classmethod
    def central(cls, gd, order, g: Vec, p: int = 0, c=1) -> "GroupoidElement":
        return cls(gd, order, {((x, x, _vec(g)), p): c for x in gd.all_objects})

    @classmethod
    def one(cls, gd, order) -> "GroupoidElement":
        return cls.central(gd, order, (0, 0))

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        return isinstance(other, GroupoidElement) and self.terms == other.terms

    def __add__(self, other: "GroupoidElement") -> "GroupoidElement":
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0) + c
        return GroupoidElement(self.gd, self.order, out)

    def __neg__(self):
        return self * -1

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other) -> "GroupoidElement":
        if not isinstance(other, GroupoidElement):
            c = Fraction(other)
            return GroupoidElement(self.gd, self.order, {k: c * v for k, v in self.terms.items()})
        out: dict = {}
        for (a, p), c in self.terms.items():
            for (b, q), d in other.terms.items():
                if p + q > self.order:
                    continue
                ab = self.gd.compose(a, b)
                if ab is None:
                    continue
                key = (ab, p + q)
                out[key] = out.get(key, 0) + self.gd.twist(a, b) * c * d
        return GroupoidElement(self.gd, self.order, out)

    __rmul__ = lambda self, c: self * c  # noqa: E731

    def min_t(self) -> int | None:
        return min((p for _a, p in self.terms), default=None)

    def at_t(self, p: int) -> dict:
        return {a: c for (a, q), c in self.terms.items() if q == p}

    def to_text(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for (a, p), c in sorted(self.terms.items(), key=lambda kv: (kv[0][1], kv[0][0])):
            t = "" if not p else (" t" if p == 1 else f" t^{p}")
            parts.append(f"{c} X[{a[0]},{a[1]},({a[2][0]},{a[2][1]})]{t}")
        return " + ".join(parts)


def _power_series_minus(gd, order, g: Vec, w: int) -> GroupoidElement:
    """``(1 - t X_g)^(-w)`` truncated."""
    one = GroupoidElement.one(gd, order)
    x = GroupoidElement.central(gd, order, g, 1)
    out = one
    term = one
    for k in range(1, order + 1):
        term = term * x
        # coefficient of y^k in (1 - y)^(-w)
        coeff = Fraction(1)
        for i in range(k):
            coeff *= Fraction(w + i, i + 1)
        if coeff:
            out = out + term * coeff
    return out


# ---------------------------------------------------------------- automorphisms


@dataclass(frozen=True)
class SFactor:
    morphism: Morphism
    mu: int
    power: int = 1

    def __post_init__(self):
        object.__setattr__(self, "morphism", _morph(self.morphism))
        if self.morphism[0] == self.morphism[1]:
            raise ValueError("S factors need a morphism between distinct objects")


@dataclass(frozen=True)
class KFactor:
    gamma: Vec

    def __post_init__(self):
        object.__setattr__(self, "gamma", _vec(self.gamma))


def apply_S(gd: GroupoidData, f: SFactor, x: GroupoidElement) -> GroupoidElement:
    left = GroupoidElement.one(gd, x.order) - GroupoidElement.basis(
        gd, x.order, f.morphism, f.power, f.mu)
    right = GroupoidElement.one(gd, x.order) + GroupoidElement.basis(
        gd, x.order, f.morphism, f.power, f.mu)
    return left * x * right


def apply_K(gd: GroupoidData, f: KFactor, x: GroupoidElement) -> GroupoidElement:
    out = GroupoidElement(gd, x.order)
    cache: dict = {}
    for (a, p), c in x.terms.items():
        w = gd.omega_of(f.gamma, a)
        if w not in cache:
            cache[w] = _power_series_minus(gd, x.order, f.gamma, w)
        out = out + cache[w] * GroupoidElement.basis(gd, x.order, a, p, c)
    return out


def apply_factor(gd: GroupoidData, f, x: GroupoidElement) -> GroupoidElement:
    return apply_S(gd, f, x) if isinstance(f, SFactor) else apply_K(gd, f, x)


def apply_word(gd: GroupoidData, word: Sequence, x: GroupoidElement) -> GroupoidElement:
    """Composite ``F_1 o F_2 o ... o F_k``: the rightmost factor acts first."""
    for f in reversed(word):
        x = apply_factor(gd, f, x)
    return x


# ---------------------------------------------------------------- L_Gamma


class LGamma:
    """Element of ``L_Gamma``: ``sum c t^p ad_{X_a} + sum t^p kappa(delta, v)``.

    ``kappa(delta, v)`` maps ``X_a`` to ``<m(a), v> X_delta X_a`` with
    ``X_delta`` central; ``v`` must be orthogonal to ``delta``.
    """

    __slots__ = ("gd", "ad", "kappa")

    def __init__(self, gd: GroupoidData, ad: Mapping | None = None, kappa: Mapping | None = None):
        self.gd = gd
        clean_ad = {}
        for (a, p), c in (ad or {}).items():
            c = Fraction(c)
            if c:
                a = _morph(a)
                if a[0] == a[1]:
                    raise ValueError("ad of a loop is outside L_Gamma")
                clean_ad[(a, int(p))] = c
        clean_k = {}
        for (d, p), v in (kappa or {}).items():
            v = (Fraction(v[0]), Fraction(v[1]))
            if v[0] or v[1]:
                d = _vec(d)
                if pairing(d, v):
                    raise ValueError(f"kappa vector {v} is not orthogonal to {d}")
                clean_k[(d, int(p))] = v
        self.ad = clean_ad
        self.kappa = clean_k

    def __bool__(self):
        return bool(self.ad or self.kappa)

    def __eq__(self, other):
        return isinstance(other, LGamma) and self.ad == other.ad and self.kappa == other.kappa

    def __add__(self, other: "LGamma") -> "LGamma":
        ad = dict(self.ad)
        for k, c in other.ad.items():
            ad[k] = ad.get(k, 0) + c
        kappa = dict(self.kappa)
        for k, v in other.kappa.items():
            u = kappa.get(k, (0, 0))
            kappa[k] = (u[0] + v[0], u[1] + v[1])
        return LGamma(self.gd, ad, kappa)

    def __mul__(self, c) -> "LGamma":
        c = Fraction(c)
        return LGamma(self.gd, {k: c * v for k, v in self.ad.items()},
                      {k: (c * v[0], c * v[1]) for k, v in self.kappa.items()})

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    def __sub__(self, other):
        return self + (-other)

    def truncate(self, order: int) -> "LGamma":
        return LGamma(self.gd, {k: v for k, v in self.ad.items() if k[1] <= order},
                      {k: v for k, v in self.kappa.items() if k[1] <= order})

    def __call__(self, x: GroupoidElement) -> GroupoidElement:
        gd, order = self.gd, x.order
        out = GroupoidElement(gd, order)
        for (a, p), c in self.ad.items():
            xa = GroupoidElement.basis(gd, order, a, p, c)
            out = out + xa * x - x * xa
        for (d, p), v in self.kappa.items():
            xd = GroupoidElement.central(gd, order, d, p)
            for (b, q), c in x.terms.items():
                w = pairing(b[2], v)
                if w:
                    out = out + xd * GroupoidElement.basis(gd, order, b, q, c * w)
        return out

    def exp_apply(self, x: GroupoidElement) -> GroupoidElement:
        out = x
        term = x
        k = 1
        while True:
            term = self(term) * Fraction(1, k)
            if not term:
                return out
            out = out + term
            k += 1
            if k > 4 * x.order + 4:
                raise AssertionError("derivation is not nilpotent on this element")


def lgamma_bracket(x: LGamma, y: LGamma, order: int | None = None) -> LGamma:
    """Closed-form bracket in ``L_Gamma``, equal to the operator commutator."""
    gd = x.gd
    out = LGamma(gd)
    for (a, p), c in x.ad.items():
        for (b, q), d in y.ad.items():
            for first, second, sign in ((a, b, 1), (b, a, -1)):
                ab = gd.compose(first, second)
                if ab is None:
                    continue
                if ab[0] == ab[1]:
                    raise ValueError(f"{a} and {b} form a reverse pair")
                out = out + LGamma(gd, {(ab, p + q): sign * gd.twist(first, second) * c * d})
        for (dl, q), v in y.kappa.items():
            loop = (a[0], a[0], dl)
            shifted = (a[0], a[1], add(a[2], dl))
            w = pairing(a[2], v)
            out = out + LGamma(gd, {(shifted, p + q): -c * w * gd.twist(loop, a)})
    for (dl, p), v in x.kappa.items():
        for (b, q), d in y.ad.items():
            loop = (b[0], b[0], dl)
            shifted = (b[0], b[1], add(b[2], dl))
            w = pairing(b[2], v)
            out = out + LGamma(gd, {(shifted, p + q): d * w * gd.twist(loop, b)})
        for (ep, q), u in y.kappa.items():
            s = gd.twist((BASE, BASE, dl), (BASE, BASE, ep))
            ev, du = pairing(ep, v), pairing(dl, u)
            vec = (s * (ev * u[0] - du * v[0]), s * (ev * u[1] - du * v[1]))
            out = out + LGamma(gd, kappa={(add(dl, ep), p + q): vec})
    return out.truncate(order) if order is not None else out


def generator_S(gd: GroupoidData, f: SFactor) -> LGamma:
    """``-mu t^p ad_{X_a}``; its exponential is the ``S`` automorphism."""
    return LGamma(gd, {(f.morphism, f.power): -f.mu})


def generator_K(gd: GroupoidData, f: KFactor, order: int) -> LGamma:
    """``sum_l (1/l) t^l X_gamma^(l-1) d_gamma`` up to ``t^order``."""
    g = f.gamma
    om = gd.Omega(g)
    n = normal(g)
    kappa = {}
    for l in range(1, order + 1):
        lg = (l * g[0], l * g[1])
        # X_gamma^(l-1) X_gamma = X_{l gamma}: self-pairings vanish
        kappa[(lg, l)] = (Fraction(om * n[0], l), Fraction(om * n[1], l))
    return LGamma(gd, kappa=kappa)


def generator(gd: GroupoidData, f, order: int) -> LGamma:
    return generator_S(gd, f) if isinstance(f, SFactor) else generator_K(gd, f, order)


# ---------------------------------------------------------------- upsilon


def vertex_ring(gd: GroupoidData, order: int) -> RingSpec:
    return RingSpec(n=1, N=order, rank=gd.rank)


def upsilon(x: LGamma, order: int) -> LieElement:
    """Image in the vertex Lie algebra over ``Q[t]/(t^(order+1))``, rank ``|V|``.

    ``t^p ad_{X_(i,j,m)}`` goes to ``s(m) E_ij t^p z^m`` and ``t^p kappa(delta, v)``
    to ``s(delta) t^p z^delta d_v``, with ``s`` the refinement sign of the
    twist (identically 1 for the split twist).
    """
    gd = x.gd
    if not gd.hypothesis_holds():
        raise HypothesisError("omega must equal Omega(gamma) <gamma, .>_D on Gamma")
    ring = vertex_ring(gd, order)
    bilinear = gd.twist_mode == "bilinear"
    out = LieElement.zero(ring)
    for (a, p), c in x.ad.items():
        if a[0] == BASE or a[1] == BASE:
            raise ValueError(f"{a} involves the base object")
        if p > order:
            continue
        s = gd.refinement(a[2]) if bilinear else 1
        out = out + LieElement.term(ring, a[2], ring.t(1, p),
                                    {(gd.index(a[0]), gd.index(a[1])): 1}, coeff=s * c)
    for (d, p), v in x.kappa.items():
        if p > order:
            continue
        s = gd.refinement(d) if bilinear else 1
        out = out + LieElement.term(ring, d, ring.t(1, p), deriv=v, coeff=s)
    return out


def in_l_tilde(x: LieElement) -> bool:
    """Matrix parts off the diagonal and derivations orthogonal to their exponents."""
    for (z, _f), (mat, d) in x.items():
        if any(i == j for i, j in mat):
            return False
        if pairing(z, d):
            return False
    return True


# ---------------------------------------------------------------- verification


@dataclass
class WCFReport:
    equal: bool
    order: int
    first_order: int | None = None
    defects: dict = field(default_factory=dict)

    def describe(self) -> str:
        if self.equal:
            return f"equal through order {self.order}"
        lines = [f"differ first at order {self.first_order}"]
        for label, diff in self.defects.items():
            lines.append(f"  on {label}: {diff.to_text()}")
        return "\n".join(lines)


Generator = tuple[str, tuple]


def probe_generators(gd: GroupoidData, words: Iterable[Sequence], box: int = 1) -> list[Generator]:
    """Ring elements on which identities are compared.

    Central ``X_gamma``, torsor elements ``(x, o)`` for every object, and
    every morphism between objects that the words mention, each with shifts
    in a small box.
    """
    pairs = {(x, BASE) for x in gd.objects}
    for w in words:
        for f in w:
            if isinstance(f, SFactor):
                pairs.add(f.morphism[:2])
    shifts = [(a, b) for a in range(-box, box + 1) for b in range(-box, box + 1)]
    gens: list[Generator] = [("central", m) for m in shifts]
    gens += [("basis", (s, t, m)) for (s, t) in sorted(pairs) for m in shifts]
    return gens


def generator_element(gd: GroupoidData, g: Generator, order: int) -> GroupoidElement:
    kind, data = g
    if kind == "central":
        return GroupoidElement.central(gd, order, data)
    return GroupoidElement.basis(gd, order, data)


def _label(g: Generator) -> str:
    kind, data = g
    if kind == "central":
        return f"X_({data[0]},{data[1]})"
    return f"X[{data[0]},{data[1]},({data[2][0]},{data[2][1]})]"


def verify_wcf(gd: GroupoidData, lhs: Sequence, rhs: Sequence, order: int,
               generators: Sequence[Generator] | None = None) -> WCFReport:
    """Compare two automorphism words on ring generators up to ``t^order``."""
    gens = generators if generators is not None else probe_generators(gd, [lhs, rhs])
    defects = {}
    first = None
    for g in gens:
        x = generator_element(gd, g, order)
        diff = apply_word(gd, lhs, x) - apply_word(gd, rhs, x)
        if diff:
            defects[_label(g)] = diff
            k = diff.min_t()
            first = k if first is None else min(first, k)
    return WCFReport(not defects, order, first, defects)


def word_log(gd: GroupoidData, word: Sequence, order: int) -> LieElement:
    """``upsilon`` of the word's generators combined by BCH, leftmost outermost."""
    ring = vertex_ring(gd, order)
    acc = LieElement.zero(ring)
    for f in word:
        acc = bch(acc, upsilon(generator(gd, f, order), order), order)
    return acc


def factor_wall(gd: GroupoidData, f, order: int, kind: str = "line") -> Wall:
    log = upsilon(generator(gd, f, order), order)
    m = f.morphism[2] if isinstance(f, SFactor) else f.gamma
    return Wall(primitive(m), kind, (0, 0), log)


def seed_diagram(gd: GroupoidData, factors: Sequence, order: int) -> ScatteringDiagram:
    """Lines through the origin, one per automorphism, via ``upsilon``."""
    return ScatteringDiagram(vertex_ring(gd, order), [factor_wall(gd, f, order) for f in factors])


def scattering_round_trip(gd: GroupoidData, seed: Sequence, order: int) -> ScatteringDiagram:
    """Complete the ``upsilon`` image of ``seed`` and return only the added rays."""
    d = seed_diagram(gd, seed, order)
    done = complete_ks(d, order)
    return ScatteringDiagram(d.ring, [w for w in done.walls if w.kind == "ray"])


# ---------------------------------------------------------------- worked examples


def conjugation_identity(twist: str = "split") -> tuple[GroupoidData, list, list]:
    """``K_gamma S_ij = S_ij S'_(ij + gamma) K_gamma`` with ``omega(gamma, gamma_ij) = -1``.

    The new factor has ``mu' = -sigma(gamma, gamma_ij)``, which is ``-1`` for the split twist.
    """
    gd = GroupoidData(("i", "j", "k"), omega={(0, 1): 1}, twist_mode=twist,
                      mu={("i", "j", (1, 0)): 1})
    s = SFactor(("i", "j", (1, 0)), 1)
    k = KFactor((0, 1))
    sign = gd.twist(("i", "i", (0, 1)), s.morphism)
    s_new = SFactor(("i", "j", (1, 1)), -sign, power=2)
    return gd, [k, s], [s, s_new, k]


def triangle_identity(mu_ij: int = 1, mu_jl: int = 1, mu_il: int = 0,
                      twist: str = "split") -> tuple[GroupoidData, list, list]:
    """``S_ij S_il S_jl = S_jl S'_il S_ij`` with ``mu'_il = mu_il - mu_ij mu_jl``.

    Under the bilinear twist the product term carries ``sigma(gamma_ij, gamma_jl)``.
    """
    m_ij, m_jl = (1, 0), (0, 1)
    m_il = add(m_ij, m_jl)
    gd = GroupoidData(("i", "j", "l"), twist_mode=twist,
                      mu={("i", "j", m_ij): mu_ij, ("j", "l", m_jl): mu_jl,
                          ("i", "l", m_il): mu_il})
    s_ij = SFactor(("i", "j", m_ij), mu_ij)
    s_jl = SFactor(("j", "l", m_jl), mu_jl)
    s_il = SFactor(("i", "l", m_il), mu_il, power=2)
    sign = gd.twist(s_ij.morphism, s_jl.morphism)
    s_il_new = SFactor(("i", "l", m_il), mu_il - sign * mu_ij * mu_jl, power=2)
    return gd, [s_ij, s_il, s_jl], [s_jl, s_il_new, s_ij]


def nested_ad_tail(gd: GroupoidData, k: KFactor, s: SFactor, order: int) -> LieElement:
    """``sum_{l >= 2} ad_{log K}^l (log S) / l!`` in the vertex Lie algebra."""
    lk = upsilon(generator_K(gd, k, order), order)
    ls = upsilon(generator_S(gd, s), order)
    out = LieElement.zero(ls.ring)
    term = bracket(lk, ls).truncate(order)
    l = 1
    while term:
        l += 1
        term = bracket(lk, term).truncate(order)
        out = out + term * Fraction(1, math.factorial(l))
    return out


def claimed_tail(gd: GroupoidData, s: SFactor, k: KFactor, order: int) -> LieElement:
    """``-E_ij sum_{k >= 2} (1/k) t^(k+1) z^(m + k gamma)`` for a single ``S`` and ``K``."""
    ring = vertex_ring(gd, order)
    a = s.morphism
    out = LieElement.zero(ring)
    for j in range(2, order):
        z = add(a[2], (j * k.gamma[0], j * k.gamma[1]))
        out = out + LieElement.term(ring, z, ring.t(1, j + 1),
                                    {(gd.index(a[0]), gd.index(a[1])): 1},
                                    coeff=Fraction(-s.mu, j))
    return out


# ---------------------------------------------------------------- text format


class GroupoidParseError(ValueError):
    def __init__(self, msg: str, line: int = 0, column: int = 0):
        super().__init__(f"line {line}, column {column}: {msg}" if line else msg)
        self.line = line
        self.column = column


_MORPH = re.compile(r"^(\w+)\s+(\w+)\s+(-?\d+)\s+(-?\d+)$")


def _factor_text(f) -> str:
    if isinstance(f, SFactor):
        a = f.morphism
        return f"S {a[0]} {a[1]} {a[2][0]} {a[2][1]} mu={f.mu} p={f.power}"
    return f"K {f.gamma[0]} {f.gamma[1]}"


def emit_groupoid(gd: GroupoidData, lhs: Sequence = (), rhs: Sequence = (),
                  order: int | None = None) -> str:
    d = gd.dirac
    lines = ["groupoid", f"objects {' '.join(gd.objects)}",
             f"dirac {d[0][0]} {d[0][1]} {d[1][0]} {d[1][1]}", f"twist {gd.twist_mode}"]
    for g, v in sorted(gd.omega.items()):
        lines.append(f"Omega {g[0]} {g[1]} = {v}")
    for a, v in sorted(gd.mu.items()):
        lines.append(f"mu {a[0]} {a[1]} {a[2][0]} {a[2][1]} = {v}")
    for a, v in sorted(gd.angles.items()):
        lines.append(f"angle {a[0]} {a[1]} {a[2][0]} {a[2][1]} = {v}")
    if order is not None:
        lines.append(f"order {order}")
    for name, word in (("lhs", lhs), ("rhs", rhs)):
        if word:
            lines.append(f"{name} " + " ; ".join(_factor_text(f) for f in word))
    return "\n".join(lines) + "\n"


def _parse_factor(text: str, n: int):
    parts = text.split()
    try:
        if parts[0] == "K" and len(parts) == 3:
            return KFactor((int(parts[1]), int(parts[2])))
        if parts[0] == "S" and len(parts) in (6, 7):
            kw = dict(p.split("=", 1) for p in parts[5:])
            return SFactor((parts[1], parts[2], (int(parts[3]), int(parts[4]))),
                           int(kw["mu"]), int(kw.get("p", 1)))
    except (ValueError, KeyError) as exc:
        raise GroupoidParseError(f"bad factor {text!r}: {exc}", n) from exc
    raise GroupoidParseError(f"bad factor {text!r}", n)


def parse_groupoid(text: str) -> tuple[GroupoidData, list, list, int | None]:
    """Inverse of :func:`emit_groupoid`."""
    fields: dict = {"omega": {}, "mu": {}, "angles": {}}
    lhs: list = []
    rhs: list = []
    order = None
    seen_header = False
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if not seen_header:
            if line != "groupoid":
                raise GroupoidParseError("expected 'groupoid' header", n, 1)
            seen_header = True
            continue
        head, _, rest = line.partition(" ")
        rest = rest.strip()
        try:
            if head == "objects":
                fields["objects"] = tuple(rest.split())
            elif head == "dirac":
                a, b, c, d = (int(x) for x in rest.split())
                fields["dirac"] = ((a, b), (c, d))
            elif head == "twist":
                fields["twist_mode"] = rest
            elif head in ("Omega", "mu", "angle"):
                key, _, val = rest.partition("=")
                key = key.split()
                if head == "Omega":
                    fields["omega"][(int(key[0]), int(key[1]))] = int(val)
                else:
                    m = _MORPH.match(" ".join(key))
                    if not m:
                        raise ValueError(f"bad morphism {' '.join(key)!r}")
                    a = (m[1], m[2], (int(m[3]), int(m[4])))
                    target = fields["mu"] if head == "mu" else fields["angles"]
                    target[a] = int(val) if head == "mu" else Fraction(val.strip())
            elif head == "order":
                order = int(rest)
            elif head in ("lhs", "rhs"):
                word = [_parse_factor(p.strip(), n) for p in rest.split(";") if p.strip()]
                (lhs if head == "lhs" else rhs).extend(word)
            else:
                raise GroupoidParseError(f"unknown field {head!r}", n, 1)
        except GroupoidParseError:
            raise
        except (ValueError, IndexError) as exc:
            raise GroupoidParseError(str(exc), n, len(head) + 2) from exc
    if "objects" not in fields:
        raise GroupoidParseError("missing 'objects' line")
    gd = GroupoidData(fields["objects"], fields.get("dirac", ((0, 1), (-1, 0))),
                      fields["omega"], fields["mu"], fields.get("twist_mode", "split"),
                      fields["angles"])
    return gd, lhs, rhs, order
