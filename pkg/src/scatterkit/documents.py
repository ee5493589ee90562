"""Plain-text documents for diagrams, GW seeds and tropical end data.

A diagram document looks like::

    diagram
    ring n=2 N=2 rank=1 symbols=A
    wall line m=(1,0) base=(0,0)
      z^(1,0) t1^1 : [[1]] d=(0,-1)
    wall ray m=(1,1) base=(0,0) dir=(1,1)
      ...

Term lines are Lie-element terms.  Inside a wall block, ``f`` lines give
terms of the scalar function and ``F[i,j]`` lines terms of the matrix
function (the unit is implied in both); their logarithms are added to the
wall.  :func:`emit_diagram` always writes logs, so ``parse(emit(d)) == d``
and ``emit(parse(text)) == text`` for emitted text.

The header ``standard`` instead of ``diagram`` yields a
:class:`~scatterkit.perturbation.StandardDiagram`.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Sequence

from .lie import LieElement, from_text as lie_from_text, matrix_log, to_text as lie_text
from .perturbation import StandardDiagram
from .scattering import ScatteringDiagram, Wall
from .series import (ParseError, RingSpec, Series, Vec, format_coeff, normal, parse_coeff,
                     parse_key, series_log)

_PAIR = r"\((-?[\d/]+),(-?[\d/]+)\)"
_VEC = re.compile(r"^" + _PAIR + r"$")
_MATRIX_FN = re.compile(r"^F\[(\d+),(\d+)\]\s+(.*)$")


def _fields(text: str, n: int) -> dict[str, str]:
    out = {}
    col = 1
    for tok in text.split():
        if "=" not in tok:
            raise ParseError(f"expected key=value, got {tok!r}", n, col)
        k, v = tok.split("=", 1)
        out[k] = v
        col += len(tok) + 1
    return out


def _pair(text: str, n: int, integral: bool = True):
    m = _VEC.match(text.replace(" ", ""))
    if not m:
        raise ParseError(f"expected (a,b), got {text!r}", n)
    try:
        a, b = Fraction(m.group(1)), Fraction(m.group(2))
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"bad pair {text!r}", n) from exc
    if integral:
        if a.denominator != 1 or b.denominator != 1:
            raise ParseError(f"expected integers in {text!r}", n)
        return (int(a), int(b))
    return (a, b)


def _fmt_pair(p) -> str:
    return f"({format_coeff(Fraction(p[0]))},{format_coeff(Fraction(p[1]))})"


# ---------------------------------------------------------------- ring


def emit_ring(ring: RingSpec) -> str:
    parts = [f"ring n={ring.n} N={ring.N} rank={ring.rank}"]
    if ring.symbols:
        parts.append("symbols=" + ",".join(ring.symbols))
    if ring.square_zero:
        parts.append("square_zero=1")
    if ring.total_order is not None:
        parts.append(f"total_order={ring.total_order}")
    return " ".join(parts)


def parse_ring(text: str, n: int = 0) -> RingSpec:
    head, _, rest = text.strip().partition(" ")
    if head != "ring":
        raise ParseError("expected a 'ring' line", n, 1)
    f = _fields(rest, n)
    unknown = set(f) - {"n", "N", "rank", "symbols", "square_zero", "total_order"}
    if unknown:
        raise ParseError(f"unknown ring fields {sorted(unknown)}", n)
    try:
        return RingSpec(n=int(f.get("n", 1)), N=int(f.get("N", 1)), rank=int(f.get("rank", 0)),
                        symbols=tuple(s for s in f.get("symbols", "").split(",") if s),
                        square_zero=bool(int(f.get("square_zero", 0))),
                        total_order=int(f["total_order"]) if "total_order" in f else None)
    except ValueError as exc:
        raise ParseError(str(exc), n) from exc


# ---------------------------------------------------------------- diagrams


def emit_wall(w: Wall) -> str:
    head = f"wall {w.kind} m={_fmt_pair(w.m)} base={_fmt_pair(w.base)}"
    if w.kind == "ray":
        head += f" dir={_fmt_pair(w.direction)}"
    if w.label:
        head += f" label={w.label}"
    body = lie_text(w.log)
    return head + ("\n" + "\n".join("  " + s for s in body.splitlines()) if body else "")


def emit_diagram(d: ScatteringDiagram | StandardDiagram) -> str:
    walls = d.lines if isinstance(d, StandardDiagram) else d.walls
    header = "standard" if isinstance(d, StandardDiagram) else "diagram"
    return "\n".join([header, emit_ring(d.ring)] + [emit_wall(w) for w in walls]) + "\n"


class _WallBlock:
    def __init__(self, head: dict, n: int):
        self.head = head
        self.n = n
        self.terms: list[tuple[int, str]] = []
        self.scalar: list[tuple[int, str]] = []
        self.matrix: dict[tuple[int, int], list[tuple[int, str]]] = {}

    def build(self, ring: RingSpec) -> Wall:
        h, n = self.head, self.n
        kind = h.get("kind")
        if "m" not in h:
            raise ParseError("wall without m=(a,b)", n)
        m = _pair(h["m"], n)
        base = _pair(h.get("base", "(0,0)"), n, integral=False)
        direction = _pair(h["dir"], n) if "dir" in h else None
        log = LieElement.zero(ring)
        try:
            if self.terms:
                log = log + _block_lie(ring, self.terms)
            if self.scalar:
                f = Series.one(ring) + _block_series(ring, self.scalar)
                log = log + LieElement.from_scalar_log(series_log(f), normal(m))
            if self.matrix:
                one = Series.one(ring)
                mat = {(i, i): one for i in range(ring.rank)}
                for ij, lines in self.matrix.items():
                    if not (0 <= ij[0] < ring.rank and 0 <= ij[1] < ring.rank):
                        raise ParseError(f"matrix index {ij} outside rank {ring.rank}", lines[0][0])
                    mat[ij] = mat.get(ij, Series.zero(ring)) + _block_series(ring, lines)
                log = log + matrix_log(mat, ring)
            return Wall(m, kind, base, log, direction, h.get("label", ""))
        except ParseError:
            raise
        except ValueError as exc:
            raise ParseError(str(exc), n) from exc


def _block_lie(ring: RingSpec, lines: list[tuple[int, str]]) -> LieElement:
    acc = LieElement.zero(ring)
    for n, text in lines:
        try:
            acc = acc + lie_from_text(ring, text)
        except ParseError as exc:
            raise ParseError(str(exc).split(": ", 1)[-1], n, exc.column) from exc
    return acc


def _block_series(ring: RingSpec, lines: list[tuple[int, str]]) -> Series:
    terms: dict = {}
    for n, text in lines:
        if ":" not in text:
            raise ParseError("missing ':' separator", n)
        mono, coeff = text.rsplit(":", 1)
        key = parse_key(ring, mono, n)
        terms[key] = terms.get(key, 0) + parse_coeff(coeff, n)
    return Series(ring, terms)


def parse_diagram(text: str) -> ScatteringDiagram | StandardDiagram:
    lines = [(n, raw) for n, raw in enumerate(text.splitlines(), start=1)
             if raw.strip() and not raw.strip().startswith("#")]
    if not lines:
        raise ParseError("empty document", 1, 1)
    n0, header = lines[0]
    header = header.strip()
    if header not in ("diagram", "standard"):
        raise ParseError(f"expected 'diagram' or 'standard', got {header!r}", n0, 1)
    if len(lines) < 2:
        raise ParseError("missing ring line", n0)
    ring = parse_ring(lines[1][1], lines[1][0])
    blocks: list[_WallBlock] = []
    for n, raw in lines[2:]:
        s = raw.strip()
        if s.startswith("wall "):
            parts = s.split(None, 2)
            if len(parts) < 2 or parts[1] not in ("line", "ray"):
                raise ParseError("expected 'wall line' or 'wall ray'", n, 6)
            head = _fields(parts[2] if len(parts) > 2 else "", n)
            head["kind"] = parts[1]
            blocks.append(_WallBlock(head, n))
            continue
        if not blocks:
            raise ParseError("term outside a wall block", n, 1)
        if not raw[:1].isspace():
            raise ParseError("wall terms must be indented", n, 1)
        b = blocks[-1]
        if s.startswith("f "):
            b.scalar.append((n, s[2:]))
        elif (m := _MATRIX_FN.match(s)):
            b.matrix.setdefault((int(m[1]), int(m[2])), []).append((n, m[3]))
        else:
            b.terms.append((n, s))
    walls = [b.build(ring) for b in blocks]
    if header == "standard":
        try:
            return StandardDiagram(ring, walls)
        except ValueError as exc:
            raise ParseError(str(exc), n0) from exc
    return ScatteringDiagram(ring, walls)


# ---------------------------------------------------------------- GW seeds


def emit_gw_seed(ms: Sequence[Vec], N: int, rank: int, matrices: Sequence) -> str:
    lines = ["gwseed", f"N {N}", f"rank {rank}"]
    for m, a in zip(ms, matrices):
        s = f"line m={_fmt_pair(m)}"
        if a:
            rows = ",".join("[" + ",".join(format_coeff(Fraction(a.get((i, j), 0)))
                                           for j in range(rank)) + "]" for i in range(rank))
            s += f" A=[{rows}]"
        lines.append(s)
    return "\n".join(lines) + "\n"


def parse_gw_seed(text: str):
    """Return ``(ms, N, rank, matrices)`` for :meth:`GWSeed.concrete`."""
    lines = [(n, raw.strip()) for n, raw in enumerate(text.splitlines(), start=1)
             if raw.strip() and not raw.strip().startswith("#")]
    if not lines or lines[0][1] != "gwseed":
        raise ParseError("expected 'gwseed' header", lines[0][0] if lines else 1, 1)
    N, rank = 1, 0
    ms: list[Vec] = []
    mats: list = []
    for n, s in lines[1:]:
        head, _, rest = s.partition(" ")
        if head == "N":
            N = int(rest)
        elif head == "rank":
            rank = int(rest)
        elif head == "line":
            f = _fields(rest, n)
            ms.append(_pair(f["m"], n))
            if "A" in f:
                rows = f["A"].strip()
                if not (rows.startswith("[[") and rows.endswith("]]")):
                    raise ParseError(f"bad matrix {rows!r}", n)
                a = {}
                for i, row in enumerate(rows[2:-2].split("],[")):
                    for j, c in enumerate(row.split(",")):
                        c = parse_coeff(c, n)
                        if c:
                            a[(i, j)] = c
                mats.append(a)
            else:
                mats.append(None)
        else:
            raise ParseError(f"unknown field {head!r}", n, 1)
    if not ms:
        raise ParseError("no lines", lines[0][0])
    return ms, N, rank, mats


# ---------------------------------------------------------------- tropical ends


def parse_ends(text: str) -> list[list[Vec]]:
    """``tropical`` header, then one end tuple per line: ``(1,0) (1,0) (0,1)``."""
    lines = [(n, raw.strip()) for n, raw in enumerate(text.splitlines(), start=1)
             if raw.strip() and not raw.strip().startswith("#")]
    if not lines or lines[0][1] != "tropical":
        raise ParseError("expected 'tropical' header", lines[0][0] if lines else 1, 1)
    return [[_pair(tok, n) for tok in s.split()] for n, s in lines[1:]]


def emit_ends(tuples: Sequence[Sequence[Vec]]) -> str:
    return "\n".join(["tropical"] + [" ".join(_fmt_pair(v) for v in w) for w in tuples]) + "\n"


def document_kind(text: str) -> str:
    for raw in text.splitlines():
        s = raw.strip()
        if s and not s.startswith("#"):
            return s.split()[0]
    return ""
