"""Command-line front end.

Exit status is 0 on success, 1 when a diagram is inconsistent or an
identity fails, and 2 for unreadable or invalid input.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from . import documents, wcf
from .gw import GWSeed, analyze_seed, extract_from_wall, format_weights, solve_degenerate
from .lie import to_text as lie_text
from .perturbation import GenericityError, StandardDiagram, perturbed_completion
from .render import render_svg, slope_label
from .scattering import ScatteringDiagram, check_consistency, complete_ks
from .series import ParseError, primitive, scale
from .tropical import count_tropical, generic_points, multiplicity, oracle_enumerate

DEFAULT_SEED = 0
FORMATS = click.Choice(["text", "structured", "svg"])


class InputError(click.ClickException):
    exit_code = 2


def _read(path: str) -> str:
    try:
        return Path(path).read_text() if path != "-" else sys.stdin.read()
    except OSError as exc:
        raise InputError(str(exc)) from exc


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=not text.endswith("\n"))


def _parse(fn, text: str):
    try:
        return fn(text)
    except (ParseError, wcf.GroupoidParseError) as exc:
        raise InputError(str(exc)) from exc
    except (ValueError, KeyError) as exc:
        raise InputError(f"invalid input: {exc}") from exc


def _pair_option(text: str):
    try:
        a, b = (int(x) for x in text.strip("()").split(","))
    except ValueError as exc:
        raise InputError(f"expected a,b but got {text!r}") from exc
    return (a, b)


def describe_diagram(d: ScatteringDiagram) -> str:
    out = []
    for w in d.walls:
        out.append(f"{w.kind} {w.direction} through ({w.base[0]},{w.base[1]}), {slope_label(w.m)}")
        out.extend("  " + s for s in lie_text(w.log).splitlines())
    return "\n".join(out) + "\n"


def _natural_order(d) -> int:
    return d.ring.N * max(d.ring.n, 1)


@click.group()
def main():
    """Scattering diagrams, tropical counts, invariants and wall-crossing identities."""


@main.command()
@click.argument("path")
@click.option("--order", type=click.IntRange(min=1), default=None,
              help="Truncation order (default: N times the number of parameters).")
@click.option("--mode", type=click.Choice(["ks", "perturb"]), default="ks")
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option("--format", "fmt", type=FORMATS, default="structured", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--trace", is_flag=True, help="Print the scattering events of the perturbation run.")
def complete(path, order, mode, seed, fmt, out, trace):
    """Complete a diagram document."""
    d = _parse(documents.parse_diagram, _read(path))
    pd = None
    if mode == "perturb":
        if not isinstance(d, StandardDiagram):
            raise InputError("perturbation mode needs a 'standard' document")
        if order is not None and order != _natural_order(d):
            click.echo(f"warning: perturbation runs at the ring's own order "
                       f"{_natural_order(d)}", err=True)
        try:
            pd, done = perturbed_completion(d, seed=seed)
        except GenericityError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)
    else:
        scat = d.as_scattering() if isinstance(d, StandardDiagram) else d
        try:
            done = complete_ks(scat, order or _natural_order(d))
        except ValueError as exc:
            raise InputError(str(exc)) from exc
    if trace and pd is not None:
        click.echo(pd.trace(), err=True)
    if fmt == "svg":
        shown = pd.as_scattering() if pd is not None else done
        _emit(render_svg(shown, title=path), out)
    elif fmt == "text":
        _emit(describe_diagram(done), out)
    else:
        _emit(documents.emit_diagram(done), out)


@main.command()
@click.argument("path")
@click.option("--order", type=click.IntRange(min=1), default=None)
@click.option("--format", "fmt", type=FORMATS, default="text", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def check(path, order, fmt, out):
    """Report the loop defect at every singular point."""
    d = _parse(documents.parse_diagram, _read(path))
    if isinstance(d, StandardDiagram):
        d = d.as_scattering()
    if not d.walls:
        _emit("consistent (no walls)\n", out)
        return
    report = check_consistency(d, order or _natural_order(d))
    _emit(report.describe() + "\n", out)
    if not report.consistent:
        sys.exit(1)


@main.command()
@click.argument("path", required=False)
@click.option("--ends", multiple=True, help="End tuple such as '(1,0) (1,0) (0,1)'; repeatable.")
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option("--oracle", is_flag=True, help="Also count by direct enumeration and compare.")
@click.option("--format", "fmt", type=FORMATS, default="text", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def tropical(path, ends, seed, oracle, fmt, out):
    """Weighted counts of rational tropical curves with given ends."""
    tuples = _parse(documents.parse_ends, _read(path)) if path else []
    for e in ends:
        tuples.append(_parse(documents.parse_ends, "tropical\n" + e)[0])
    if not tuples:
        raise InputError("no end tuples given")
    rows, mismatch = [], False
    for w in tuples:
        try:
            n = count_tropical(w, seed=seed)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        row = f"{documents.emit_ends([w]).splitlines()[1]} : {n}"
        if oracle:
            xi = generic_points(len(w), seed)
            m = sum(multiplicity(c) for c in oracle_enumerate(w, xi)) if len(w) > 1 else 1
            row += f" (oracle {m})"
            mismatch |= m != n
        rows.append(row)
    if fmt == "svg":
        raise InputError("tropical counts have no picture")
    header = "tropical" if fmt == "structured" else "N^trop"
    _emit("\n".join([header] + rows) + "\n", out)
    if mismatch:
        sys.exit(1)


@main.command()
@click.argument("path")
@click.option("--ray", "ray", default="1,1", show_default=True, help="Primitive ray direction a,b.")
@click.option("--multiple", type=click.IntRange(min=1), default=1, show_default=True,
              help="Read the coefficient at this multiple of the ray direction.")
@click.option("--mode", type=click.Choice(["ks", "perturb"]), default="perturb")
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option("--format", "fmt", type=FORMATS, default="text", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def gw(path, ray, multiple, mode, seed, fmt, out):
    """Invariants read off one ray of a completed standard diagram."""
    ms, N, rank, mats = _parse(documents.parse_gw_seed, _read(path))
    direction = _pair_option(ray)
    if direction == (0, 0) or primitive(direction) != direction:
        raise InputError(f"ray direction {direction} is not primitive")
    gs = _parse(lambda _t: GWSeed.concrete(ms, N, rank, mats), "")
    target = scale(multiple, direction)
    profiles = gs.profiles(target)
    if not profiles:
        click.echo(f"warning: no tangency profile reaches {target} at N = {N}; "
                   "raise N to see this class", err=True)
    std = gs.standard()
    if mode == "perturb":
        try:
            _, done = perturbed_completion(std, seed=seed)
        except GenericityError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)
    else:
        done = complete_ks(std.as_scattering(), _natural_order(std))
    table = extract_from_wall(gs, done, direction, multiple)
    names = gs.names()
    lines = [table.report(names)]
    for P in profiles:
        if tuple(P) not in table.blowup or len(table.free) != 1:
            continue
        try:
            w, v = solve_degenerate(table.relative, P, table.blowup[tuple(P)], gs.ms)
        except (KeyError, ValueError):
            continue
        lines.append(f"degeneration: N_{{0,{format_weights(w, names)}}} = {v}")
    lines.append(analyze_seed(gs, target).report(names))
    text = "\n".join(lines) + "\n"
    if fmt == "structured":
        rows = ["invariants"]
        rows += [f"P ({','.join(map(str, P))}) = {v}" for P, v in sorted(table.blowup.items())]
        rows += [f"w {format_weights(w, names)} = {v}" for w, v in sorted(table.relative.items())]
        rows += [f"w {format_weights(w, names)} = ?" for w in table.free]
        text = "\n".join(rows) + "\n"
    elif fmt == "svg":
        raise InputError("invariant tables have no picture")
    _emit(text, out)


@main.command("wcf")
@click.argument("path")
@click.option("--order", type=click.IntRange(min=1), default=None,
              help="Truncation order (default: the document's order line, else 6).")
@click.option("--format", "fmt", type=FORMATS, default="text", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def wcf_command(path, order, fmt, out):
    """Verify the identity lhs = rhs of a groupoid document."""
    gd, lhs, rhs, doc_order = _parse(wcf.parse_groupoid, _read(path))
    if not lhs or not rhs:
        raise InputError("the document needs both lhs and rhs words")
    order = order or doc_order or 6
    bad = wcf.check_cocycle(gd, wcf.word_morphisms(gd, [lhs, rhs]))
    if bad:
        click.echo(f"warning: the twist fails the cocycle condition on {len(bad)} triple(s), "
                   f"e.g. {bad[0]}", err=True)
    report = wcf.verify_wcf(gd, lhs, rhs, order)
    if fmt == "structured":
        text = wcf.emit_groupoid(gd, lhs, rhs, order) + f"result {'equal' if report.equal else 'differ'}\n"
    elif fmt == "svg":
        raise InputError("identities have no picture")
    else:
        text = report.describe() + "\n"
    _emit(text, out)
    if not report.equal:
        sys.exit(1)


@main.command()
@click.argument("path")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--size", type=click.IntRange(min=64), default=480, show_default=True)
def render(path, out, size):
    """Draw a diagram document as SVG."""
    d = _parse(documents.parse_diagram, _read(path))
    if isinstance(d, StandardDiagram):
        d = d.as_scattering()
    _emit(render_svg(d, size=size, title=path), out)

