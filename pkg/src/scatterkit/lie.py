"""The twisted Lie algebra of matrix-valued and derivation-valued series.

A term is ``z^m`` times a formal monomial times a pair ``(A, d)``: ``A`` an
``r x r`` rational matrix (stored sparsely) and ``d`` the derivation
``d1 * x d/dx + d2 * y d/dy``.  The bracket of two terms is

    [(A, d) z^m, (A', d') z^m'] =
        ([A, A'] + <m', d> A' - <m, d'> A,  <m', d> d' - <m, d'> d) z^(m + m')

Group elements are stored through their logarithm and multiplied with the
Baker-Campbell-Hausdorff series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping

import sympy

from .series import (ONE, ZERO, Formal, Key, RingMismatch, RingSpec, Series, Vec,
                     collapse_formal, expand_formal, t_ring, u_ring,
                     format_coeff, format_key, formal_degree, key_sort, pairing,
                     parse_coeff, parse_key, ParseError)

Matrix = Mapping[tuple[int, int], Fraction]
Deriv = tuple[Fraction, Fraction]


class DomainError(ValueError):
    """A bracket produced a nonzero term at ``z^0``."""


class NotInSubalgebra(ValueError):
    """A derivation is not orthogonal to its exponent."""


def _clean_matrix(mat: Mapping[tuple[int, int], Fraction]) -> dict:
    return {ij: Fraction(c) for ij, c in mat.items() if c}


def _mat_mul(a: Matrix, b: Matrix) -> dict:
    out: dict = {}
    for (i, k), x in a.items():
        for (k2, j), y in b.items():
            if k == k2:
                out[(i, j)] = out.get((i, j), ZERO) + x * y
    return out


def _mat_axpy(out: dict, c: Fraction, a: Matrix):
    if not c:
        return
    for ij, x in a.items():
        out[ij] = out.get(ij, ZERO) + c * x


class LieElement:
    """Finite sum of terms ``z^m f (A, d)`` in canonical (merged, zero-free) form."""

    __slots__ = ("ring", "_terms", "_hash")

    def __init__(self, ring: RingSpec,
                 terms: Mapping[Key, tuple[Matrix, Deriv]] | None = None,
                 check: bool = True):
        self.ring = ring
        clean: dict[Key, tuple[dict, Deriv]] = {}
        for key, (mat, d) in (terms or {}).items():
            if not ring.admits(key[1]):
                continue
            mat = _clean_matrix(mat)
            d = (Fraction(d[0]), Fraction(d[1]))
            if not mat and not d[0] and not d[1]:
                continue
            if check:
                z, fm = key
                if formal_degree(fm) == 0:
                    raise ValueError(f"term {key} has no formal parameter")
                if z == (0, 0):
                    raise DomainError("terms at z^0 are outside the algebra")
                if pairing(z, d):
                    raise NotInSubalgebra(f"derivation {d} not orthogonal to {z}")
                for (i, j) in mat:
                    if not (0 <= i < ring.rank and 0 <= j < ring.rank):
                        raise ValueError(f"matrix index {(i, j)} outside rank {ring.rank}")
            clean[key] = (mat, d)
        self._terms = clean
        self._hash = None

    # -- constructors

    @classmethod
    def zero(cls, ring: RingSpec) -> "LieElement":
        return cls(ring)

    @classmethod
    def term(cls, ring: RingSpec, z: Vec, formal: Formal, matrix: Matrix | None = None,
             deriv=(0, 0), coeff=1) -> "LieElement":
        c = Fraction(coeff)
        mat = {ij: c * Fraction(v) for ij, v in (matrix or {}).items()}
        d = (c * Fraction(deriv[0]), c * Fraction(deriv[1]))
        return cls(ring, {(tuple(z), formal): (mat, d)})

    @classmethod
    def from_scalar_log(cls, log_f: Series, direction) -> "LieElement":
        """``log f`` times the derivation along ``direction``."""
        return cls(log_f.ring, {k: ({}, (c * direction[0], c * direction[1]))
                                for k, c in log_f.items()})

    @classmethod
    def from_matrix_log(cls, entries: Mapping[tuple[int, int], Series]) -> "LieElement":
        ring = None
        terms: dict = {}
        for ij, s in entries.items():
            ring = s.ring
            for k, c in s.items():
                terms.setdefault(k, ({}, (ZERO, ZERO)))[0][ij] = c
        if ring is None:
            raise ValueError("empty matrix log needs a ring")
        return cls(ring, terms)

    # -- protocol

    @property
    def terms(self) -> Mapping[Key, tuple[Matrix, Deriv]]:
        return self._terms

    def items(self):
        return self._terms.items()

    def __len__(self):
        return len(self._terms)

    def __bool__(self):
        return bool(self._terms)

    def __eq__(self, other):
        if not isinstance(other, LieElement):
            return NotImplemented
        return self.ring == other.ring and self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.ring, frozenset(
                (k, frozenset(m.items()), d) for k, (m, d) in self._terms.items())))
        return self._hash

    def __repr__(self):
        return f"LieElement({to_text(self)!r})"

    def _check(self, other: "LieElement"):
        if self.ring != other.ring:
            raise RingMismatch(f"{self.ring} vs {other.ring}")

    # -- linear structure

    def __add__(self, other: "LieElement") -> "LieElement":
        self._check(other)
        out = {k: (dict(m), d) for k, (m, d) in self._terms.items()}
        for k, (m, d) in other._terms.items():
            if k in out:
                m0, d0 = out[k]
                _mat_axpy(m0, ONE, m)
                out[k] = (m0, (d0[0] + d[0], d0[1] + d[1]))
            else:
                out[k] = (dict(m), d)
        return LieElement(self.ring, out, check=False)

    def __neg__(self) -> "LieElement":
        return self * -1

    def __sub__(self, other: "LieElement") -> "LieElement":
        return self + (-other)

    def __mul__(self, c) -> "LieElement":
        c = Fraction(c)
        return LieElement(self.ring, {k: ({ij: c * v for ij, v in m.items()},
                                          (c * d[0], c * d[1]))
                                      for k, (m, d) in self._terms.items()}, check=False)

    __rmul__ = __mul__

    # -- slicing

    def filter(self, pred) -> "LieElement":
        return LieElement(self.ring, {k: v for k, v in self._terms.items() if pred(k)},
                          check=False)

    def homogeneous(self, degree: int) -> "LieElement":
        return self.filter(lambda k: formal_degree(k[1]) == degree)

    def truncate(self, order: int) -> "LieElement":
        return self.filter(lambda k: formal_degree(k[1]) <= order)

    def min_degree(self) -> int | None:
        if not self._terms:
            return None
        return min(formal_degree(f) for (_, f) in self._terms)

    def z_exponents(self) -> set[Vec]:
        return {z for (z, _) in self._terms}

    def matrix_part(self) -> dict[tuple[int, int], Series]:
        out: dict[tuple[int, int], dict] = {}
        for k, (m, _d) in self._terms.items():
            for ij, c in m.items():
                out.setdefault(ij, {})[k] = c
        return {ij: Series(self.ring, t) for ij, t in out.items()}

    def matrix_only(self) -> "LieElement":
        return LieElement(self.ring, {k: (m, (ZERO, ZERO)) for k, (m, _d) in self._terms.items()},
                          check=False)

    def deriv_only(self) -> "LieElement":
        return LieElement(self.ring, {k: ({}, d) for k, (_m, d) in self._terms.items()},
                          check=False)

    def scalar_along(self, direction) -> Series:
        """Coefficients ``c`` with derivation ``c * direction`` (must be parallel)."""
        out = {}
        for k, (_m, d) in self._terms.items():
            if not d[0] and not d[1]:
                continue
            if d[0] * direction[1] - d[1] * direction[0]:
                raise ValueError(f"derivation {d} not parallel to {direction}")
            ref = direction[0] if direction[0] else direction[1]
            val = d[0] if direction[0] else d[1]
            out[k] = Fraction(val) / ref
        return Series(self.ring, out)

    def with_ring(self, ring: RingSpec) -> "LieElement":
        return LieElement(ring, self._terms, check=False)


# ---------------------------------------------------------------- bracket


def bracket(a: LieElement, b: LieElement) -> LieElement:
    a._check(b)
    ring = a.ring
    out: dict[Key, tuple[dict, list]] = {}
    for (z1, f1), (m1, d1) in a._terms.items():
        for (z2, f2), (m2, d2) in b._terms.items():
            f = ring.mul_formal(f1, f2)
            if f is None:
                continue
            z = (z1[0] + z2[0], z1[1] + z2[1])
            p = z2[0] * d1[0] + z2[1] * d1[1]
            q = z1[0] * d2[0] + z1[1] * d2[1]
            mat: dict = {}
            if m1 and m2:
                _mat_axpy(mat, ONE, _mat_mul(m1, m2))
                _mat_axpy(mat, -ONE, _mat_mul(m2, m1))
            _mat_axpy(mat, p, m2)
            _mat_axpy(mat, -q, m1)
            dx = p * d2[0] - q * d1[0]
            dy = p * d2[1] - q * d1[1]
            if z == (0, 0):
                if any(mat.values()) or dx or dy:
                    raise DomainError(f"bracket of z^{z1} and z^{z2} leaves the algebra")
                continue
            key = (z, f)
            slot = out.get(key)
            if slot is None:
                out[key] = (mat, [dx, dy])
            else:
                _mat_axpy(slot[0], ONE, mat)
                slot[1][0] += dx
                slot[1][1] += dy
    return LieElement(ring, {k: (m, (d[0], d[1])) for k, (m, d) in out.items()}, check=False)


def ad_power(x: LieElement, y: LieElement, n: int) -> LieElement:
    for _ in range(n):
        y = bracket(x, y)
    return y


# ---------------------------------------------------------------- BCH


@lru_cache(maxsize=None)
def _bernoulli_plus(n: int) -> Fraction:
    """Bernoulli numbers with the convention ``B_1 = +1/2``."""
    b = sympy.bernoulli(n)
    value = Fraction(int(b.p), int(b.q))
    return abs(value) if n == 1 else value


def _degree_bound(ring: RingSpec, order: int | None) -> int:
    bound = ring.nilpotency()
    if order is not None:
        bound = min(bound, order)
    return bound


def bch(a: LieElement, b: LieElement, order: int | None = None) -> LieElement:
    """``log(exp(a) exp(b))`` truncated at total formal degree ``order``.

    Writes ``Z(s) = log(exp(a) exp(s b))``; it solves
    ``Z' = ad_Z / (1 - exp(-ad_Z)) (b)`` with ``Z(0) = a``, and the
    coefficients of ``Z`` in ``s`` are produced one at a time.
    """
    a._check(b)
    ring = a.ring
    bound = _degree_bound(ring, order)
    if order is not None:
        a, b = a.truncate(order), b.truncate(order)
    if not b:
        return a
    if not a:
        return b
    zero = LieElement.zero(ring)
    z_coeffs = [a]
    # ad_rows[n][j] is the s^j coefficient of ad_Z^n(b)
    ad_rows: list[list[LieElement]] = [[b] + [zero] * bound]
    for n in range(1, bound + 1):
        ad_rows.append([])
    for k in range(bound):
        total = zero
        for n in range(bound + 1):
            row = ad_rows[n]
            if n:
                acc = zero
                prev = ad_rows[n - 1]
                for i in range(k + 1):
                    if z_coeffs[i] and prev[k - i]:
                        acc = acc + bracket(z_coeffs[i], prev[k - i])
                if order is not None:
                    acc = acc.truncate(order)
                row.append(acc)
            if row[k]:
                total = total + row[k] * (_bernoulli_plus(n) / math.factorial(n))
        z_coeffs.append(total * Fraction(1, k + 1))
    result = zero
    for z in z_coeffs:
        result = result + z
    return result if order is None else result.truncate(order)


def bch_many(elements: Iterable[LieElement], order: int | None = None,
             ring: RingSpec | None = None) -> LieElement:
    """Left-to-right product ``e1 . e2 . ...``."""
    acc = None
    for e in elements:
        acc = e if acc is None else bch(acc, e, order)
    if acc is None:
        if ring is None:
            raise ValueError("empty product needs a ring")
        return LieElement.zero(ring)
    return acc


# ---------------------------------------------------------------- group


@dataclass(frozen=True)
class GroupElement:
    """An element ``exp(log)`` of the extended tropical vertex group."""

    log: LieElement

    @classmethod
    def identity(cls, ring: RingSpec) -> "GroupElement":
        return cls(LieElement.zero(ring))

    @property
    def ring(self) -> RingSpec:
        return self.log.ring

    def is_identity(self) -> bool:
        return not self.log

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return group_mul(self, other)


def group_mul(g: GroupElement, h: GroupElement, order: int | None = None) -> GroupElement:
    return GroupElement(bch(g.log, h.log, order))


def group_inv(g: GroupElement) -> GroupElement:
    return GroupElement(-g.log)


def _apply_derivation(x: LieElement, s: Series) -> Series:
    ring = s.ring
    out: dict = {}
    for (z1, f1), (_m, d) in x.items():
        if not d[0] and not d[1]:
            continue
        for (z2, f2), c in s.items():
            w = z2[0] * d[0] + z2[1] * d[1]
            if not w:
                continue
            f = ring.mul_formal(f1, f2)
            if f is None:
                continue
            key = ((z1[0] + z2[0], z1[1] + z2[1]), f)
            out[key] = out.get(key, ZERO) + w * c
    return Series(ring, out)


def _apply_matrix(x: LieElement, v: list[Series]) -> list[Series]:
    ring = v[0].ring
    out = [dict() for _ in v]
    for (z1, f1), (m, _d) in x.items():
        for (i, j), a in m.items():
            for (z2, f2), c in v[j].items():
                f = ring.mul_formal(f1, f2)
                if f is None:
                    continue
                key = ((z1[0] + z2[0], z1[1] + z2[1]), f)
                out[i][key] = out[i].get(key, ZERO) + a * c
    return [Series(ring, o) for o in out]


def act_on_series(g: GroupElement, s: Series) -> Series:
    """The torus automorphism ``exp(D)`` applied to a scalar series.

    Only the derivation part of ``log g`` acts.  On monomials the result is
    ``x -> f^(-b) x``, ``y -> f^a y`` for a wall function ``f`` on ``z^(a,b)``.
    """
    if g.ring != s.ring:
        raise RingMismatch(f"{g.ring} vs {s.ring}")
    out = s
    term = s
    k = 1
    while True:
        term = _apply_derivation(g.log, term) * Fraction(1, k)
        if not term:
            return out
        out = out + term
        k += 1


def act_on_vector(g: GroupElement, v: list[Series]) -> list[Series]:
    """``exp(A + D)`` on a column of ``r`` series: ``A`` multiplies, ``D`` differentiates."""
    if len(v) != g.ring.rank:
        raise ValueError(f"vector of length {len(v)} for rank {g.ring.rank}")
    out = list(v)
    term = list(v)
    k = 1
    while True:
        mat = _apply_matrix(g.log, term)
        term = [(mat[i] + _apply_derivation(g.log, term[i])) * Fraction(1, k)
                for i in range(len(term))]
        if not any(term):
            return out
        out = [o + t for o, t in zip(out, term)]
        k += 1


# ---------------------------------------------------------------- text form


def _format_matrix(ring: RingSpec, m: Matrix) -> str:
    rows = []
    for i in range(ring.rank):
        rows.append("[" + ",".join(format_coeff(m.get((i, j), ZERO)) for j in range(ring.rank)) + "]")
    return "[" + ",".join(rows) + "]"


def to_text(x: LieElement) -> str:
    lines = []
    for k in sorted(x.terms, key=key_sort):
        m, d = x.terms[k]
        parts = [format_key(x.ring, k), ":"]
        if x.ring.rank:
            parts.append(_format_matrix(x.ring, m))
        parts.append(f"d=({format_coeff(d[0])},{format_coeff(d[1])})")
        lines.append(" ".join(parts))
    return "\n".join(lines)


def _parse_matrix(ring: RingSpec, text: str, line: int) -> dict:
    text = text.strip()
    if not (text.startswith("[[") and text.endswith("]]")):
        raise ParseError(f"bad matrix {text!r}", line)
    rows = text[2:-2].split("],[")
    if len(rows) != ring.rank:
        raise ParseError(f"expected {ring.rank} matrix rows", line)
    out = {}
    for i, row in enumerate(rows):
        cells = row.split(",")
        if len(cells) != ring.rank:
            raise ParseError(f"row {i} has {len(cells)} entries", line)
        for j, cell in enumerate(cells):
            c = parse_coeff(cell, line)
            if c:
                out[(i, j)] = c
    return out


def from_text(ring: RingSpec, text: str) -> LieElement:
    acc = LieElement.zero(ring)
    for n, raw in enumerate(text.splitlines(), start=1):
        raw = raw.strip()
        if not raw or raw.startswith("#"):
            continue
        if ":" not in raw:
            raise ParseError("missing ':' separator", n)
        mono, rest = raw.split(":", 1)
        key = parse_key(ring, mono, n)
        rest = rest.strip()
        if "d=(" not in rest:
            raise ParseError("missing d=(d1,d2) field", n)
        mat_text, d_text = rest.rsplit("d=(", 1)
        d_text = d_text.rstrip(")")
        d_parts = d_text.split(",")
        if len(d_parts) != 2:
            raise ParseError(f"bad derivation {d_text!r}", n)
        d = (parse_coeff(d_parts[0], n), parse_coeff(d_parts[1], n))
        mat = _parse_matrix(ring, mat_text, n) if ring.rank else {}
        if mat_text.strip() and not ring.rank:
            raise ParseError("matrix given for a scalar ring", n)
        try:
            acc = acc + LieElement(ring, {key: (mat, d)})
        except (ValueError, DomainError) as exc:
            raise ParseError(str(exc), n) from exc
    return acc


# ---------------------------------------------------------------- wall functions


def _matrix_series_mul(a: dict, b: dict, ring: RingSpec) -> dict:
    out: dict = {}
    for (i, k), s in a.items():
        for (k2, j), t in b.items():
            if k == k2:
                prod = s * t
                if prod:
                    out[(i, j)] = out.get((i, j), Series.zero(ring)) + prod
    return {ij: s for ij, s in out.items() if s}


def matrix_exp(x: LieElement) -> dict[tuple[int, int], Series]:
    """The invertible matrix series ``exp(A)`` built from the matrix part of ``x``."""
    ring = x.ring
    one = Series.one(ring)
    out = {(i, i): one for i in range(ring.rank)}
    power = x.matrix_part()
    k = 1
    fact = ONE
    while power:
        fact /= k
        for ij, s in power.items():
            out[ij] = out.get(ij, Series.zero(ring)) + s * fact
        power = _matrix_series_mul(power, x.matrix_part(), ring)
        k += 1
    return {ij: s for ij, s in out.items() if s}


def matrix_log(f: Mapping[tuple[int, int], Series], ring: RingSpec) -> LieElement:
    """Inverse of :func:`matrix_exp` for ``f`` congruent to the identity."""
    nil = {}
    for i in range(ring.rank):
        for j in range(ring.rank):
            s = f.get((i, j), Series.zero(ring)) - (1 if i == j else 0)
            if s.constant():
                raise ValueError("matrix function is not unipotent")
            if s:
                nil[(i, j)] = s
    total: dict = {}
    power = nil
    k = 1
    while power:
        sign = Fraction(1 if k % 2 else -1, k)
        for ij, s in power.items():
            total[ij] = total.get(ij, Series.zero(ring)) + s * sign
        power = _matrix_series_mul(power, nil, ring)
        k += 1
    total = {ij: s for ij, s in total.items() if s}
    return LieElement.from_matrix_log(total) if total else LieElement.zero(ring)


# ---------------------------------------------------------------- ring changes


def map_formal(x: LieElement, ring: RingSpec, fn) -> LieElement:
    """Linear relabelling: each formal monomial ``f`` becomes ``sum w * f'``
    over the pairs ``(f', w)`` returned by ``fn(f)``."""
    out: dict = {}
    for (z, f), (mat, d) in x.items():
        for g, w in fn(f):
            slot = out.setdefault((z, g), ({}, [ZERO, ZERO]))
            _mat_axpy(slot[0], w, mat)
            slot[1][0] += w * d[0]
            slot[1][1] += w * d[1]
    return LieElement(ring, {k: (m, (d[0], d[1])) for k, (m, d) in out.items()})


def expand_lie(x: LieElement) -> LieElement:
    """:func:`~scatterkit.series.expand_t_to_u` applied termwise."""
    return map_formal(x, u_ring(x.ring), lambda f: expand_formal(x.ring, f))


def collapse_lie(x: LieElement) -> LieElement:
    """:func:`~scatterkit.series.collapse_u_to_t` applied termwise."""
    return map_formal(x, t_ring(x.ring), lambda f: [collapse_formal(x.ring, f)])
