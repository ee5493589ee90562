import random
import time

import pytest
from hypothesis import given, settings, strategies as st

from scatterkit.lie import LieElement, act_on_series
from scatterkit.scattering import (ScatteringDiagram, Wall, check_consistency, complete_ks,
                                   crossings, path_ordered_product)
from scatterkit.series import RingSpec, Series, series_inverse

from conftest import two_wall


def theta_m(ring):
    """The expected new ray: ``x -> x/(1+t^2 xy)``, ``y -> y(1+t^2 xy)``."""
    return LieElement.term(ring, (1, 1), ring.t(1, 2), None, (-1, 1))


def test_two_wall_completion():
    d = two_wall()
    start = time.perf_counter()
    done = complete_ks(d, 2)
    assert time.perf_counter() - start < 1
    new = [w for w in done.walls if w.kind == "ray"]
    assert len(new) == 1
    (ray,) = new
    assert ray.m == (1, 1) and ray.base == (0, 0) and ray.direction == (1, 1)
    assert ray.log == theta_m(d.ring)
    R = d.ring
    X, Y = Series.monomial(R, (1, 0)), Series.monomial(R, (0, 1))
    xy = Series.monomial(R, (1, 1), R.t(1, 2))
    assert act_on_series(ray.element, X) == X * series_inverse(1 + xy)
    assert act_on_series(ray.element, Y) == Y * (1 + xy)


def test_loop_crossing_order():
    done = complete_ks(two_wall(), 2)
    horizontal, vertical, ray = done.walls
    seen = [(w, s) for _v, s, w in crossings(done)]
    assert seen == [(horizontal, 1), (ray, 1), (vertical, 1), (horizontal, -1), (vertical, -1)]
    assert path_ordered_product(done, 2).is_identity()


def test_seed_defect_is_minus_the_missing_ray():
    d = two_wall()
    report = check_consistency(d, 2)
    assert not report.consistent
    assert list(report.defects.values()) == [-theta_m(d.ring)]


def test_completed_diagram_is_consistent():
    d = two_wall()
    d = d.added([Wall((1, 1), "ray", (0, 0), theta_m(d.ring))])
    assert check_consistency(d, 2).consistent


def test_empty_and_single_wall():
    R = RingSpec(n=1, N=2)
    assert path_ordered_product(ScatteringDiagram(R), 2).is_identity()
    x = Series.monomial(R, (1, 0), R.t(1))
    single = ScatteringDiagram(R, [Wall.from_functions((1, 0), "line", (0, 0), R, scalar=1 + x)])
    assert check_consistency(single, 2).consistent
    assert complete_ks(single, 2) == single


def test_parallel_walls_add_nothing():
    R = RingSpec(n=2, N=2)
    x1 = Series.monomial(R, (1, 0), R.t(1))
    x2 = Series.monomial(R, (2, 0), R.t(2))
    d = ScatteringDiagram(R, [Wall.from_functions((1, 0), "line", (0, 0), R, scalar=1 + x1),
                              Wall.from_functions((1, 0), "line", (0, 0), R, scalar=1 + x2)])
    assert complete_ks(d, 4) == d


def test_exponent_off_the_wall_is_rejected():
    R = RingSpec(n=1, N=1)
    with pytest.raises(ValueError):
        Wall((1, 0), "ray", (0, 0), LieElement.term(R, (0, 1), R.t(1), None, (1, 0)))


def power_seed(l1: int, l2: int, N: int) -> ScatteringDiagram:
    R = RingSpec(n=2, N=N)
    x = Series.monomial(R, (1, 0), R.t(1))
    y = Series.monomial(R, (0, 1), R.t(2))
    return ScatteringDiagram(R, [
        Wall.from_functions((1, 0), "line", (0, 0), R, scalar=(1 + x) ** l1),
        Wall.from_functions((0, 1), "line", (0, 0), R, scalar=(1 + y) ** l2),
    ])


@pytest.mark.parametrize("l1, l2, N", [(1, 1, 2), (2, 1, 2), (2, 2, 2), (1, 3, 3)])
def test_completion_passes_the_consistency_check(l1, l2, N):
    d = complete_ks(power_seed(l1, l2, N), 2 * N)
    assert check_consistency(d, 2 * N).consistent


@pytest.mark.parametrize("l1, l2", [(1, 1), (2, 2)])
def test_completion_is_idempotent(l1, l2):
    d = complete_ks(power_seed(l1, l2, 2), 4)
    assert complete_ks(d, 4) == d


@settings(max_examples=5, deadline=None)
@given(st.integers(0, 10_000))
def test_wall_order_does_not_matter(seed):
    R = RingSpec(n=3, N=1, rank=2)
    walls = [
        Wall((1, 0), "line", (0, 0), LieElement.term(R, (1, 0), R.t(1), {(0, 1): 1}, (0, 1))),
        Wall((0, 1), "line", (0, 0), LieElement.term(R, (0, 1), R.t(2), {(1, 1): 1}, (-1, 0))),
        Wall((1, -1), "line", (0, 0), LieElement.term(R, (1, -1), R.t(3), None, (1, 1))),
    ]
    shuffled = walls[:]
    random.Random(seed).shuffle(shuffled)
    assert complete_ks(ScatteringDiagram(R, walls), 3) == complete_ks(ScatteringDiagram(R, shuffled), 3)
