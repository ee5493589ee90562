"""Truncated formal power series over the lattice Z^2.

A monomial is ``z^(a,b)`` times a formal part.  The formal part records
exponents of the parameters ``t_1..t_n``, a set of square-zero flags
``u_{i,j}`` and exponents of commuting symbols (``A``, ``Q1`` and so on).
Coefficients are :class:`fractions.Fraction`.

Truncation happens inside monomial multiplication: a product is dropped when
some ``t_i`` exceeds ``N``, when a ``u`` flag repeats, or when the total formal
degree passes the optional ``total_order`` cutoff.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Iterator, Mapping

Vec = tuple[int, int]
Formal = tuple[tuple[int, ...], tuple[tuple[int, int], ...], tuple[int, ...]]
Key = tuple[Vec, Formal]

ZERO = Fraction(0)
ONE = Fraction(1)


class RingMismatch(ValueError):
    pass


class NotUnital(ValueError):
    pass


# ---------------------------------------------------------------- lattice


def wedge(m1: Vec, m2: Vec) -> int:
    return m1[0] * m2[1] - m1[1] * m2[0]


def pairing(m: Vec, d) -> Fraction:
    return m[0] * d[0] + m[1] * d[1]


def index(m: Vec) -> int:
    if m == (0, 0):
        raise ValueError("the zero vector has no index")
    return math.gcd(abs(m[0]), abs(m[1]))


def primitive(m: Vec) -> Vec:
    g = index(m)
    return (m[0] // g, m[1] // g)


def normal(m: Vec) -> Vec:
    """Positively oriented normal: rotate by a quarter turn."""
    return (-m[1], m[0])


def add(m1: Vec, m2: Vec) -> Vec:
    return (m1[0] + m2[0], m1[1] + m2[1])


def scale(k: int, m: Vec) -> Vec:
    return (k * m[0], k * m[1])


# ---------------------------------------------------------------- rings


@dataclass(frozen=True)
class RingSpec:
    """Shape of the coefficient ring.

    ``n`` parameters (or lines, in square-zero mode), per-variable bound
    ``N``, optional commuting ``symbols`` and a matrix size ``rank``
    (0 means purely scalar).
    """

    n: int = 1
    N: int = 1
    square_zero: bool = False
    symbols: tuple[str, ...] = ()
    rank: int = 0
    total_order: int | None = None

    def __post_init__(self):
        if self.n < 0 or self.N < 1:
            raise ValueError(f"bad ring shape n={self.n} N={self.N}")
        if self.rank < 0:
            raise ValueError("rank must be non-negative")

    # -- formal monomials

    @property
    def unit(self) -> Formal:
        return ((0,) * self.n, (), (0,) * len(self.symbols))

    def t(self, i: int, e: int = 1) -> Formal:
        """The formal part ``t_i^e`` (1-based ``i``)."""
        exps = [0] * self.n
        exps[i - 1] = e
        return (tuple(exps), (), (0,) * len(self.symbols))

    def u(self, flags: Iterable[tuple[int, int]]) -> Formal:
        flags = tuple(sorted(flags))
        if len(set(flags)) != len(flags):
            raise ValueError(f"repeated u flag in {flags}")
        return ((0,) * self.n, flags, (0,) * len(self.symbols))

    def sym(self, name: str, e: int = 1) -> Formal:
        exps = [0] * len(self.symbols)
        exps[self.symbols.index(name)] = e
        return ((0,) * self.n, (), tuple(exps))

    def degree(self, f: Formal) -> int:
        return sum(f[0]) + len(f[1])

    def admits(self, f: Formal) -> bool:
        if any(e > self.N for e in f[0]):
            return False
        if self.total_order is not None and self.degree(f) > self.total_order:
            return False
        return True

    def mul_formal(self, f: Formal, g: Formal) -> Formal | None:
        t = tuple(a + b for a, b in zip(f[0], g[0]))
        for e in t:
            if e > self.N:
                return None
        if f[1] and g[1]:
            if not set(f[1]).isdisjoint(g[1]):
                return None
            u = tuple(sorted(f[1] + g[1]))
        else:
            u = f[1] or g[1]
        if self.total_order is not None and sum(t) + len(u) > self.total_order:
            return None
        s = tuple(a + b for a, b in zip(f[2], g[2])) if f[2] else f[2]
        return (t, u, s)

    def nilpotency(self) -> int:
        """Largest formal degree a nonzero monomial can have."""
        bound = self.n * self.N
        if self.total_order is not None:
            bound = min(bound, self.total_order)
        return bound

    def with_order(self, order: int | None) -> "RingSpec":
        return replace(self, total_order=order)


def formal_degree(f: Formal) -> int:
    return sum(f[0]) + len(f[1])


# ---------------------------------------------------------------- series


def _frac(c) -> Fraction:
    return c if isinstance(c, Fraction) else Fraction(c)


class Series:
    """An immutable element of ``Q[Lambda] (x) R`` for a :class:`RingSpec` ``R``."""

    __slots__ = ("ring", "_terms", "_hash")

    def __init__(self, ring: RingSpec, terms: Mapping[Key, Fraction] | None = None):
        self.ring = ring
        clean: dict[Key, Fraction] = {}
        for key, c in (terms or {}).items():
            c = _frac(c)
            if c and ring.admits(key[1]):
                clean[key] = c
        self._terms = clean
        self._hash = None

    # -- construction helpers

    @classmethod
    def zero(cls, ring: RingSpec) -> "Series":
        return cls(ring)

    @classmethod
    def one(cls, ring: RingSpec) -> "Series":
        return cls(ring, {((0, 0), ring.unit): ONE})

    @classmethod
    def monomial(cls, ring: RingSpec, z: Vec = (0, 0), formal: Formal | None = None,
                 coeff=1) -> "Series":
        return cls(ring, {(tuple(z), formal or ring.unit): _frac(coeff)})

    # -- container protocol

    @property
    def terms(self) -> Mapping[Key, Fraction]:
        return self._terms

    def items(self) -> Iterator[tuple[Key, Fraction]]:
        return iter(self._terms.items())

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __getitem__(self, key: Key) -> Fraction:
        return self._terms.get(key, ZERO)

    def __eq__(self, other) -> bool:
        if isinstance(other, Series):
            return self.ring == other.ring and self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self == Series.one(self.ring) * other
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.ring, frozenset(self._terms.items())))
        return self._hash

    def __repr__(self) -> str:
        return f"Series({to_text(self)!r})"

    # -- arithmetic

    def _check(self, other: "Series"):
        if self.ring != other.ring:
            raise RingMismatch(f"{self.ring} vs {other.ring}")

    def __add__(self, other) -> "Series":
        if not isinstance(other, Series):
            other = Series.one(self.ring) * other
        self._check(other)
        out = dict(self._terms)
        for k, c in other._terms.items():
            out[k] = out.get(k, ZERO) + c
        return Series(self.ring, out)

    __radd__ = __add__

    def __neg__(self) -> "Series":
        return Series(self.ring, {k: -c for k, c in self._terms.items()})

    def __sub__(self, other) -> "Series":
        return self + (-other)

    def __rsub__(self, other) -> "Series":
        return (-self) + other

    def __mul__(self, other) -> "Series":
        if isinstance(other, Series):
            return series_mul(self, other)
        c = _frac(other)
        return Series(self.ring, {k: c * v for k, v in self._terms.items()})

    def __rmul__(self, other) -> "Series":
        return self * other

    def __pow__(self, k: int) -> "Series":
        if k < 0:
            return series_inverse(self) ** (-k)
        out = Series.one(self.ring)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    # -- inspection

    def constant(self) -> Fraction:
        return self._terms.get(((0, 0), self.ring.unit), ZERO)

    def min_degree(self) -> int | None:
        if not self._terms:
            return None
        return min(formal_degree(f) for (_, f) in self._terms)

    def truncate(self, order: int) -> "Series":
        return Series(self.ring, {k: c for k, c in self._terms.items()
                                  if formal_degree(k[1]) <= order})

    def homogeneous(self, degree: int) -> "Series":
        return Series(self.ring, {k: c for k, c in self._terms.items()
                                  if formal_degree(k[1]) == degree})

    def z_exponents(self) -> set[Vec]:
        return {z for (z, _) in self._terms}

    def log(self) -> "Series":
        return series_log(self)

    def exp(self) -> "Series":
        return series_exp(self)


def series_mul(a: Series, b: Series) -> Series:
    """Product in the truncated ring."""
    a._check(b)
    ring = a.ring
    out: dict[Key, Fraction] = {}
    for (za, fa), ca in a._terms.items():
        for (zb, fb), cb in b._terms.items():
            f = ring.mul_formal(fa, fb)
            if f is None:
                continue
            key = ((za[0] + zb[0], za[1] + zb[1]), f)
            out[key] = out.get(key, ZERO) + ca * cb
    return Series(ring, out)


def _nilpotent_part(f: Series, what: str) -> Series:
    for (z, fm), c in f.items():
        if formal_degree(fm) == 0 and z != (0, 0):
            raise NotUnital(f"{what}: term z^{z} has no formal parameter")
    return f


def _geometric(x: Series, coeffs) -> Series:
    """Sum of ``coeffs(k) * x**k`` for k >= 1 until the powers vanish."""
    out = Series.zero(x.ring)
    power = x
    k = 1
    while power:
        c = coeffs(k)
        if c:
            out = out + power * c
        power = power * x
        k += 1
    return out


def series_log(f: Series) -> Series:
    """Mercator series; the constant term must be exactly 1."""
    if f.constant() != 1:
        raise NotUnital(f"log needs constant term 1, got {f.constant()}")
    x = _nilpotent_part(f - 1, "log")
    return _geometric(x, lambda k: Fraction((-1) ** (k + 1), k))


def series_exp(g: Series) -> Series:
    if g.constant() != 0:
        raise NotUnital(f"exp needs vanishing constant term, got {g.constant()}")
    x = _nilpotent_part(g, "exp")
    return Series.one(g.ring) + _geometric(
        x, lambda k: Fraction(1, math.factorial(k)))


def series_inverse(f: Series) -> Series:
    """Inverse of a series with unit constant term ``c``."""
    c = f.constant()
    if not c:
        raise NotUnital("cannot invert a series without constant term")
    x = _nilpotent_part(f * (1 / c) - 1, "inverse")
    return (Series.one(f.ring) + _geometric(x, lambda k: Fraction((-1) ** k))) * (1 / c)


# ---------------------------------------------------------------- t <-> u


def u_ring(ring: RingSpec) -> RingSpec:
    return replace(ring, square_zero=True, total_order=None)


def t_ring(ring: RingSpec) -> RingSpec:
    return replace(ring, square_zero=False, total_order=None)


def expand_formal(ring: RingSpec, f: Formal) -> list[tuple[Formal, Fraction]]:
    """Images of one ``t``-monomial under ``t_i -> u_{i,1} + ... + u_{i,N}``."""
    t, u, s = f
    if u:
        raise RingMismatch("expansion expects a monomial without u flags")
    choices = []
    weight = ONE
    for i, e in enumerate(t, start=1):
        choices.append([tuple((i, j) for j in J)
                        for J in combinations(range(1, ring.N + 1), e)])
        weight *= math.factorial(e)
    zero_t = (0,) * ring.n
    return [((zero_t, tuple(sorted(x for part in pick for x in part)), s), weight)
            for pick in _product(choices)]


def expand_t_to_u(f: Series) -> Series:
    """Substitute ``t_i = u_{i,1} + ... + u_{i,N}``.

    ``t_i^j`` becomes ``j!`` times the sum of all products of ``j`` distinct
    slots of line ``i``.
    """
    out: dict[Key, Fraction] = {}
    for (z, fm), c in f.items():
        for new_f, weight in expand_formal(f.ring, fm):
            key = (z, new_f)
            out[key] = out.get(key, ZERO) + c * weight
    return Series(u_ring(f.ring), out)


def _product(lists):
    if not lists:
        yield ()
        return
    head, *rest = lists
    for x in head:
        for tail in _product(rest):
            yield (x,) + tail


def collapse_formal(ring: RingSpec, f: Formal) -> tuple[Formal, Fraction]:
    """Image of one square-zero monomial under the symmetrising map."""
    t, u, s = f
    counts = [0] * ring.n
    for (i, _j) in u:
        counts[i - 1] += 1
    factor = ONE
    for k in counts:
        factor /= math.factorial(k) * math.comb(ring.N, k)
    new_t = tuple(a + b for a, b in zip(t, counts))
    return (new_t, (), s), factor


def collapse_u_to_t(f: Series) -> Series:
    """Left inverse of :func:`expand_t_to_u`.

    Each product of ``k`` slots of line ``i`` maps to
    ``t_i^k / (k! * C(N, k))``, so the full symmetric sum of size-``k``
    products returns to ``t_i^k / k!``.
    """
    dst = t_ring(f.ring)
    out: dict[Key, Fraction] = {}
    for (z, fm), c in f.items():
        new_f, factor = collapse_formal(f.ring, fm)
        key = (z, new_f)
        out[key] = out.get(key, ZERO) + c * factor
    return Series(dst, out)


# ---------------------------------------------------------------- text form


def key_sort(key: Key):
    (a, b), (t, u, s) = key
    return (a, b, t, u, s)


def format_coeff(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def format_key(ring: RingSpec, key: Key) -> str:
    (a, b), (t, u, s) = key
    parts = [f"z^({a},{b})"]
    parts += [f"t{i}^{e}" for i, e in enumerate(t, start=1) if e]
    parts += [f"u_{{{i},{j}}}" for (i, j) in u]
    parts += [f"{name}^{e}" for name, e in zip(ring.symbols, s) if e]
    return " ".join(parts)


def to_text(f: Series) -> str:
    lines = [f"{format_key(f.ring, k)} : {format_coeff(f[k])}"
             for k in sorted(f.terms, key=key_sort)]
    return "\n".join(lines)


_Z = re.compile(r"^z\^\((-?\d+),(-?\d+)\)$")
_T = re.compile(r"^t(\d+)\^(\d+)$")
_U = re.compile(r"^u_\{(\d+),(\d+)\}$")
_S = re.compile(r"^([A-Za-z][A-Za-z0-9_]*)\^(\d+)$")


class ParseError(ValueError):
    def __init__(self, msg: str, line: int = 0, column: int = 0):
        super().__init__(f"line {line}, column {column}: {msg}")
        self.line = line
        self.column = column


def parse_key(ring: RingSpec, text: str, line: int = 0) -> Key:
    tokens = text.split()
    if not tokens:
        raise ParseError("empty monomial", line)
    m = _Z.match(tokens[0])
    if not m:
        raise ParseError(f"expected z^(a,b), got {tokens[0]!r}", line, 1)
    z = (int(m.group(1)), int(m.group(2)))
    t = [0] * ring.n
    u: list[tuple[int, int]] = []
    s = [0] * len(ring.symbols)
    col = len(tokens[0]) + 2
    for tok in tokens[1:]:
        if (m := _T.match(tok)):
            i = int(m.group(1))
            if not 1 <= i <= ring.n:
                raise ParseError(f"parameter t{i} outside ring", line, col)
            t[i - 1] += int(m.group(2))
        elif (m := _U.match(tok)):
            u.append((int(m.group(1)), int(m.group(2))))
        elif (m := _S.match(tok)) and m.group(1) in ring.symbols:
            s[ring.symbols.index(m.group(1))] += int(m.group(2))
        else:
            raise ParseError(f"unknown factor {tok!r}", line, col)
        col += len(tok) + 1
    if len(set(u)) != len(u):
        raise ParseError("repeated u flag", line)
    return (z, (tuple(t), tuple(sorted(u)), tuple(s)))


def parse_coeff(text: str, line: int = 0) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"bad coefficient {text!r}", line) from exc


def from_text(ring: RingSpec, text: str) -> Series:
    terms: dict[Key, Fraction] = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        raw = raw.strip()
        if not raw or raw.startswith("#"):
            continue
        if ":" not in raw:
            raise ParseError("missing ':' separator", n)
        mono, coeff = raw.rsplit(":", 1)
        key = parse_key(ring, mono, n)
        terms[key] = terms.get(key, ZERO) + parse_coeff(coeff, n)
    return Series(ring, terms)
