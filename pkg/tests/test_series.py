from fractions import Fraction

import pytest
from hypothesis import given, settings

from scatterkit.series import (NotUnital, ParseError, RingSpec, Series, collapse_u_to_t,
                               expand_t_to_u, from_text, index, normal, primitive, series_exp,
                               series_inverse, series_log, to_text)

from conftest import series_in

R2 = RingSpec(n=2, N=2)
R3 = RingSpec(n=2, N=3)
U2 = RingSpec(n=2, N=2, square_zero=True)


def mono(R, z, formal, c=1):
    return Series.monomial(R, z, formal, c)


@pytest.mark.parametrize("m, prim, idx", [
    ((1, 0), (1, 0), 1),
    ((2, 4), (1, 2), 2),
    ((-3, 6), (-1, 2), 3),
    ((0, -5), (0, -1), 5),
])
def test_primitive_and_index(m, prim, idx):
    assert primitive(m) == prim
    assert index(m) == idx
    assert (prim[0] * idx, prim[1] * idx) == m


def test_normal_is_quarter_turn():
    assert normal((1, 0)) == (0, 1)
    assert normal((1, 2)) == (-2, 1)


def test_unit_is_identity():
    s = mono(R2, (1, 0), R2.t(1)) + mono(R2, (0, 1), R2.t(2), Fraction(1, 3))
    assert Series.one(R2) * s == s


def test_two_factor_product():
    x = mono(R2, (1, 0), R2.t(1))
    y = mono(R2, (0, 1), R2.t(2))
    expected = 1 + x + y + mono(R2, (1, 1), ((1, 1), (), ()))
    assert (1 + x) * (1 + y) == expected


def test_square_zero_kills_cross_term():
    U = RingSpec(n=1, N=1, square_zero=True)
    y = mono(U, (0, 1), U.u([(1, 1)]))
    assert (1 + y) * (1 + y) == 1 + 2 * y


def test_truncation_drops_high_powers():
    R = RingSpec(n=1, N=2)
    x = mono(R, (1, 0), R.t(1))
    assert x * x * x == Series.zero(R)
    assert (x * x)[((2, 0), R.t(1, 2))] == 1


def test_log_is_mercator():
    R = RingSpec(n=1, N=3)
    y = mono(R, (0, 1), R.t(1))
    expected = y - mono(R, (0, 2), R.t(1, 2), Fraction(1, 2)) + mono(R, (0, 3), R.t(1, 3), Fraction(1, 3))
    assert series_log(1 + y) == expected


def test_exp_zero_and_square_zero_log():
    assert series_exp(Series.zero(R2)) == Series.one(R2)
    U = RingSpec(n=1, N=3, square_zero=True)
    y = mono(U, (0, 1), U.u([(1, 1)]))
    assert series_log(1 + y) == y


def test_log_requires_unit_constant():
    with pytest.raises(NotUnital):
        series_log(Series.zero(R2) + 2)
    with pytest.raises(NotUnital):
        series_exp(Series.one(R2))


def test_inverse():
    y = mono(R3, (0, 1), R3.t(1))
    f = 1 + y
    assert f * series_inverse(f) == Series.one(R3)


@pytest.mark.parametrize("N, formal, expected", [
    (1, ((1, 0), (), ()), {((1, 1),): 1}),
    (2, ((2, 0), (), ()), {((1, 1), (1, 2)): 2}),
    (1, ((1, 1), (), ()), {((1, 1), (2, 1)): 1}),
])
def test_expand_examples(N, formal, expected):
    R = RingSpec(n=2, N=N)
    out = expand_t_to_u(mono(R, (1, 1), formal))
    got = {fm[1]: c for (_z, fm), c in out.items()}
    assert got == expected


def test_expand_t1_squared_into_all_pairs():
    R = RingSpec(n=1, N=3)
    out = expand_t_to_u(mono(R, (0, 2), R.t(1, 2)))
    assert len(out) == 3 and set(out.terms.values()) == {2}


def test_collapse_examples():
    U = RingSpec(n=1, N=2, square_zero=True)
    pair = mono(U, (0, 2), U.u([(1, 1), (1, 2)]))
    assert collapse_u_to_t(pair) == mono(RingSpec(n=1, N=2), (0, 2), ((2,), (), ()), Fraction(1, 2))
    U1 = RingSpec(n=1, N=1, square_zero=True)
    assert collapse_u_to_t(mono(U1, (0, 1), U1.u([(1, 1)]))) == \
        mono(RingSpec(n=1, N=1), (0, 1), ((1,), (), ()))
    assert collapse_u_to_t(Series.zero(U)) == Series.zero(RingSpec(n=1, N=2))


def test_parse_rejects_garbage():
    with pytest.raises(ParseError):
        from_text(R2, "z^(1,0) t3^1 : 1")
    with pytest.raises(ParseError):
        from_text(R2, "z^(1,0) t1^1 1")


@settings(max_examples=40, deadline=None)
@given(series_in(R2), series_in(R2), series_in(R2))
def test_mul_associative_commutative(a, b, c):
    assert (a * b) * c == a * (b * c)
    assert a * b == b * a


@settings(max_examples=25, deadline=None)
@given(series_in(R2, unital=True))
def test_exp_log_round_trip(f):
    assert series_exp(series_log(f)) == f


@settings(max_examples=25, deadline=None)
@given(series_in(R2))
def test_log_exp_round_trip(g):
    g = g - g.constant()
    assert series_log(series_exp(g)) == g


@settings(max_examples=25, deadline=None)
@given(series_in(R3, max_terms=3))
def test_collapse_inverts_expand(f):
    assert collapse_u_to_t(expand_t_to_u(f)) == f


@settings(max_examples=25, deadline=None)
@given(series_in(R2))
def test_text_round_trip(f):
    assert from_text(R2, to_text(f)) == f


def test_square_zero_ring_products_associate():
    a = mono(U2, (1, 0), U2.u([(1, 1)])) + mono(U2, (0, 1), U2.u([(2, 1)]))
    b = mono(U2, (1, 1), U2.u([(1, 2)]))
    c = 1 + mono(U2, (0, 1), U2.u([(2, 2)]))
    assert (a * b) * c == a * (b * c)
