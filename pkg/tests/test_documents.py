import pytest
from hypothesis import given, settings

from scatterkit.documents import (document_kind, emit_diagram, emit_ends, emit_gw_seed,
                                  parse_diagram, parse_ends, parse_gw_seed)
from scatterkit.gw import GWSeed
from scatterkit.lie import LieElement
from scatterkit.perturbation import StandardDiagram
from scatterkit.scattering import ScatteringDiagram, Wall, complete_ks
from scatterkit.series import ParseError, RingSpec, primitive

from conftest import DATA, nilpotent_pair_seed, lie_elements, two_wall

GOLDEN = ["two_wall_completed.txt", "empty.txt"]


@pytest.mark.parametrize("name", GOLDEN)
def test_golden_documents_are_fixed_points(name):
    text = (DATA / name).read_text()
    assert emit_diagram(parse_diagram(text)) == text


def test_function_blocks_parse_to_the_same_diagram():
    seed = parse_diagram((DATA / "two_wall_seed.txt").read_text())
    assert seed == two_wall()
    assert emit_diagram(complete_ks(seed, 2)) == (DATA / "two_wall_completed.txt").read_text()


def test_standard_header_round_trip():
    std = nilpotent_pair_seed().standard()
    text = emit_diagram(std)
    assert text.startswith("standard\n")
    back = parse_diagram(text)
    assert isinstance(back, StandardDiagram)
    assert emit_diagram(back) == text


@settings(max_examples=25, deadline=None)
@given(lie_elements(RingSpec(n=2, N=2, rank=2)))
def test_random_rays_round_trip(log):
    by_direction = {}
    for (z, f), (mat, d) in log.items():
        term = LieElement.term(log.ring, z, f, mat, d)
        m = primitive(z)
        by_direction[m] = by_direction.get(m, LieElement.zero(log.ring)) + term
    walls = [Wall(m, "ray", (1, -1), part, direction=m) for m, part in sorted(by_direction.items())]
    d = ScatteringDiagram(log.ring, walls)
    assert parse_diagram(emit_diagram(d)) == d


@pytest.mark.parametrize("text, line", [
    ("", 1),
    ("diagram\n", 1),
    ("scatter\nring n=1 N=1\n", 1),
    ("diagram\nring n=1 N=1 rank=0\nwall bent m=(1,0)\n", 3),
    ("diagram\nring n=1 N=1 rank=0\n  z^(1,0) t1^1 : d=(0,1)\n", 3),
    ("diagram\nring n=1 N=1 rank=0\nwall line m=(1,0) base=(0,0)\nz^(1,0) t1^1 : d=(0,1)\n", 4),
    ("diagram\nring n=1 N=1 rank=0\nwall line m=(1,0) base=(0,0)\n  f z^(1,0) t1^1 1\n", 4),
])
def test_malformed_diagrams_report_a_line(text, line):
    with pytest.raises(ParseError) as err:
        parse_diagram(text)
    assert err.value.line == line


def test_exponent_off_its_wall_is_invalid():
    text = "diagram\nring n=1 N=1 rank=0\nwall line m=(1,0) base=(0,0)\n  z^(0,1) t1^1 : d=(1,0)\n"
    with pytest.raises(ParseError):
        parse_diagram(text)


def test_gw_seed_round_trip():
    text = (DATA / "nilpotent_pair.gw").read_text()
    ms, N, rank, mats = parse_gw_seed(text)
    assert (ms, N, rank) == ([(0, 1), (1, 0)], 2, 2)
    assert mats == [{(0, 1): 1}, None]
    assert emit_gw_seed(ms, N, rank, mats) == text
    assert GWSeed.concrete(ms, N, rank, mats).standard() == nilpotent_pair_seed().standard()


@pytest.mark.parametrize("text", ["", "gwseed\nN 2\n", "gwseed\nline m=(1,0) A=[1]\n",
                                  "gwseed\ncolour red\n"])
def test_malformed_gw_seeds(text):
    with pytest.raises(ParseError):
        parse_gw_seed(text)


def test_end_tuples_round_trip():
    tuples = [[(1, 0), (1, 0), (0, 1)], [(2, 0), (0, -1)]]
    assert parse_ends(emit_ends(tuples)) == tuples


@pytest.mark.parametrize("text, kind", [
    ("# comment\ndiagram\n", "diagram"),
    ("gwseed\n", "gwseed"),
    ("\n\n", ""),
])
def test_document_kind(text, kind):
    assert document_kind(text) == kind
