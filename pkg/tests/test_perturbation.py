import time
from collections import Counter

import pytest

from scatterkit.gw import GWSeed
from scatterkit.lie import LieElement
from scatterkit.perturbation import (GenericityError, StandardDiagram, asymptotic,
                                     complete_perturbed, deform, factorize, local_scatter,
                                     perturbed_completion)
from scatterkit.scattering import Wall, check_consistency, complete_ks
from scatterkit.series import RingSpec, Series, add, index

from conftest import PINNED_OFFSETS, nilpotent_pair_seed, function_pair


def labelled(pw):
    z, a, c = function_pair(pw.wall)
    return (z, frozenset(pw.flags), a, c)


def u(*names):
    return frozenset((int(s[0]), int(s[1])) for s in names)


ALL = u("11", "12", "21", "22")

# Reference function pairs for the three scattering rounds at PINNED_OFFSETS.
ROUNDS = [
    [((1, 1), u("21", "11"), 1, 1), ((1, 1), u("21", "12"), 1, 1),
     ((1, 1), u("22", "11"), 1, 1), ((1, 1), u("22", "12"), 1, 1),
     ((2, 2), ALL, 0, 2),
     ((2, 1), u("21", "22", "11"), -1, -1), ((2, 1), u("22", "21", "12"), -1, -1),
     ((1, 2), u("21", "11", "12"), 0, -1), ((1, 2), u("22", "12", "11"), 0, -1)],
    [((2, 2), ALL, 0, -4), ((2, 2), ALL, -4, -4),
     ((2, 1), u("21", "22", "11"), 1, 1), ((2, 1), u("21", "12", "22"), 1, 1),
     ((1, 2), u("21", "11", "12"), 2, 1), ((1, 2), u("12", "11", "22"), 2, 1)],
    [((2, 2), ALL, 4, 4)],
]

LINES = [
    ((0, 1), u("11"), 1, 1), ((0, 1), u("12"), 1, 1), ((0, 2), u("11", "12"), 0, -1),
    ((1, 0), u("21"), 0, 1), ((1, 0), u("22"), 0, 1), ((2, 0), u("21", "22"), 0, -1),
]


@pytest.fixture(scope="module")
def pinned_run():
    std = nilpotent_pair_seed().standard()
    return std, complete_perturbed(deform(std, offsets=PINNED_OFFSETS))


def test_deformed_lines_and_functions(pinned_run):
    _std, pd = pinned_run
    assert sorted(map(labelled, pd.lines()), key=repr) == sorted(LINES, key=repr)


def test_rounds_reproduce_the_reference_walls(pinned_run):
    _std, pd = pinned_run
    got = [Counter(map(labelled, r)) for r in pd.rounds()]
    assert got == [Counter(r) for r in ROUNDS]


def test_asymptotic_diagram_has_exactly_two_new_rays(pinned_run):
    std, pd = pinned_run
    A = asymptotic(pd)
    R = A.ring
    rays = {w.m: w for w in A.walls if w.kind == "ray"}
    assert set(rays) == {(1, 1), (1, 2)}
    t1t2 = ((1, 1), (), ())
    t1sq_t2 = ((2, 1), (), ())
    # (1 + A t1 t2 xy, 1 + t1 t2 xy) on (1,1) and (1 + A t1^2 t2 xy^2, 1) on (1,2)
    assert rays[(1, 1)].scalar_function() == 1 + Series.monomial(R, (1, 1), t1t2)
    assert rays[(1, 1)].matrix_function()[(0, 1)] == Series.monomial(R, (1, 1), t1t2)
    assert rays[(1, 2)].scalar_function() == Series.one(R)
    assert rays[(1, 2)].matrix_function()[(0, 1)] == Series.monomial(R, (1, 2), t1sq_t2)
    assert A == complete_ks(std.as_scattering(), 4)


def test_final_ray_has_four_leaves(pinned_run):
    _std, pd = pinned_run
    (last,) = pd.rounds()[-1]
    leaves = pd.leaves(last)
    assert len(leaves) == 4 and all(w.is_line for w in leaves)


def test_genealogy_bookkeeping(pinned_run):
    _std, pd = pinned_run
    for w in pd.rays():
        a, b = (pd.by_id(p) for p in w.parents)
        assert w.flags == a.flags | b.flags and not (a.flags & b.flags)
        assert w.exponent == add(a.exponent, b.exponent)
        leaf_flags = [f for leaf in pd.leaves(w) for f in leaf.flags]
        assert len(leaf_flags) == len(set(leaf_flags)) and set(leaf_flags) == w.flags


def test_pinned_degenerate_offsets_fail():
    std = nilpotent_pair_seed().standard()
    offsets = [(0, 0)] * 6
    with pytest.raises(GenericityError):
        complete_perturbed(deform(std, offsets=offsets))


def test_local_scatter_first_generation():
    R = RingSpec(n=2, N=2, square_zero=True, rank=2)
    y = LieElement.term(R, (0, 1), R.u([(1, 1)]), {(0, 1): 1}, (-1, 0))
    x = LieElement.term(R, (1, 0), R.u([(2, 1)]), None, (0, 1))
    ray = local_scatter(Wall((0, 1), "line", (2, 0), y), Wall((1, 0), "line", (0, 1), x))
    assert ray.base == (2, 1) and ray.m == (1, 1)
    z, a, c = function_pair(ray)
    assert (z, a, c) == ((1, 1), 1, 1)


def test_local_scatter_slope_two():
    R = RingSpec(n=2, N=2, square_zero=True, rank=2)
    yy = LieElement.term(R, (0, 2), R.u([(1, 1), (1, 2)]), None, (1, 0))
    x = LieElement.term(R, (1, 0), R.u([(2, 1)]), None, (0, 1))
    ray = local_scatter(Wall((0, 1), "line", (5, 0), yy), Wall((1, 0), "line", (0, 1), x))
    assert function_pair(ray) == ((1, 2), 0, -1)


def test_local_scatter_parallel_is_empty():
    R = RingSpec(n=2, N=1, square_zero=True)
    a = LieElement.term(R, (1, 0), R.u([(1, 1)]), None, (0, 1))
    b = LieElement.term(R, (1, 0), R.u([(2, 1)]), None, (0, 1))
    assert local_scatter(Wall((1, 0), "line", (0, 0), a), Wall((1, 0), "line", (0, 1), b)) is None


def test_single_line_is_its_own_completion():
    R = RingSpec(n=1, N=2)
    x = Series.monomial(R, (1, 0), R.t(1))
    std = StandardDiagram.from_functions(R, [((1, 0), 1 + x, None)])
    _pd, A = perturbed_completion(std)
    assert A == std.as_scattering()


def test_n_equal_one_has_one_flag_per_factor():
    R = RingSpec(n=2, N=1)
    x = Series.monomial(R, (1, 0), R.t(1))
    y = Series.monomial(R, (0, 1), R.t(2))
    std = StandardDiagram.from_functions(R, [((1, 0), 1 + x, None), ((0, 1), 1 + y, None)])
    assert [len(f.flags) for f in factorize(std)] == [1, 1]
    _pd, A = perturbed_completion(std)
    (ray,) = [w for w in A.walls if w.kind == "ray"]
    assert ray.m == (1, 1)
    assert ray.scalar_function() == 1 + Series.monomial(R, (1, 1), ((1, 1), (), ()))
    assert A == complete_ks(std.as_scattering(), 2)


SEEDS = [
    pytest.param(lambda: GWSeed.symbolic([(1, 0), (0, 1)], 1, ["A", "Q"]), id="A,Q N=1"),
    pytest.param(lambda: GWSeed.symbolic([(1, 0), (0, 1)], 2, ["A", "Q"]), id="A,Q N=2"),
    pytest.param(lambda: GWSeed.symbolic([(1, 0), (0, 1)], 3, ["A", "Q"]), id="A,Q N=3"),
    pytest.param(lambda: GWSeed.symbolic([(1, 0), (1, 1)], 2, ["A", "B"]), id="skew N=2"),
    pytest.param(nilpotent_pair_seed, id="nilpotent A"),
]


@pytest.mark.parametrize("make", SEEDS)
def test_perturbation_agrees_with_ks(make):
    std = make().standard()
    _pd, A = perturbed_completion(std, seed=0)
    order = std.ring.N * std.ring.n
    assert A == complete_ks(std.as_scattering(), order)
    assert check_consistency(A, order).consistent


@pytest.mark.parametrize("make", SEEDS[:2] + SEEDS[3:])
def test_seed_independence(make):
    std = make().standard()
    results = [perturbed_completion(std, seed=s)[1] for s in (0, 1, 7)]
    assert results[0] == results[1] == results[2]


def test_every_ray_weight_is_the_exponent_index(pinned_run):
    _std, pd = pinned_run
    for w in pd.rays():
        assert w.weight == index(w.exponent)


def test_runtime_budget():
    start = time.perf_counter()
    perturbed_completion(nilpotent_pair_seed().standard(), seed=3)
    assert time.perf_counter() - start < 10
