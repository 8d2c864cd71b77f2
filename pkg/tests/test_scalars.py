"""Exact scalar field: Gaussian rationals and Laurent expressions."""

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from todaverify.scalars import (
    GAUSS_I,
    GAUSS_ONE,
    GAUSS_ZERO,
    GEN_NAMES,
    GaussRat,
    HALF,
    NGENS,
    ONE,
    ScalarExpr,
    ZERO,
    g,
    sigma,
)

rationals = st.fractions(
    min_value=-50, max_value=50, max_denominator=12
)
gauss = st.builds(GaussRat, rationals, rationals)


@given(gauss, gauss, gauss)
def test_gauss_ring_laws(a, b, c):
    assert a + b == b + a
    assert a * b == b * a
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a + GAUSS_ZERO == a
    assert a * GAUSS_ONE == a


@given(gauss)
def test_gauss_division_inverts(a):
    if not a:
        return
    q = GAUSS_ONE / a
    assert q * a == GAUSS_ONE


def test_gauss_i_squares_to_minus_one():
    assert GAUSS_I * GAUSS_I == GaussRat(-1)
    assert GAUSS_I.conj() == GaussRat(0, -1)
    assert complex(GaussRat(Fraction(3, 2), Fraction(-1, 4)).to_complex()) \
        == 1.5 - 0.25j


def test_generator_table():
    assert NGENS == 20
    assert len(GEN_NAMES) == 20
    assert GEN_NAMES[0] == "s1"
    assert "a" in GEN_NAMES
    assert GEN_NAMES[-1] == "c4"


# small random scalar expressions: a few Laurent monomials in few gens
def _mk_expr(seeds):
    out = ZERO
    for coeff, gen_idx, power in seeds:
        out = out + ScalarExpr.monomial(
            GaussRat(coeff), {GEN_NAMES[gen_idx % NGENS]: power}
        )
    return out


expr_seeds = st.lists(
    st.tuples(
        st.integers(-9, 9), st.integers(0, 5), st.integers(-3, 3)
    ),
    min_size=0, max_size=4,
)
exprs = st.builds(_mk_expr, expr_seeds)


@settings(max_examples=200)
@given(exprs, exprs, exprs)
def test_scalar_ring_laws(a, b, c):
    assert a + b == b + a
    assert a * b == b * a
    assert (a + b) * c == a * c + b * c
    assert a * (b * c) == (a * b) * c
    assert a - a == ZERO
    assert a * ONE == a
    assert a * ZERO == ZERO


@settings(max_examples=200)
@given(exprs, exprs)
def test_scalar_division_exact(a, b):
    if not b.terms:
        return
    assert (a * b) / b == a


def test_division_rejects_inexact():
    a = ScalarExpr.gen("s1") + ONE
    b = ScalarExpr.gen("s2") + ONE
    with pytest.raises(ValueError):
        a / b


def test_coupling_is_twice_sigma_squared():
    assert g(3) == ScalarExpr.const(2) * sigma(3) * sigma(3)
    env = {"s3": 0.7}
    assert g(3).eval(env) == pytest.approx(2 * 0.49)


def test_eval_accepts_g_binding():
    # g1 = 0.5 binds s1 = 0.5; the two spellings must agree
    e = sigma(1) ** 2 + g(2)
    assert e.eval({"g1": 0.5, "g2": 2.0}) == pytest.approx(
        e.eval({"s1": 0.5, "s2": 1.0})
    )


def test_eval_is_ring_homomorphism():
    env = {"s1": 1.3, "s2": 0.6, "a": -0.4}
    x = sigma(1) + ScalarExpr.gen("a") * HALF
    y = sigma(2) ** 2 - ONE
    assert (x * y).eval(env) == pytest.approx(x.eval(env) * y.eval(env))
    assert (x + y).eval(env) == pytest.approx(x.eval(env) + y.eval(env))


def test_subs_gen_matches_eval():
    e = sigma(1) ** 2 * sigma(2) + sigma(2) ** 3
    sub = e.subs_gen("s2", sigma(3) + ONE)
    env = {"s1": 0.5, "s3": 0.25}
    direct = e.eval({"s1": 0.5, "s2": 1.25})
    assert sub.eval(env) == pytest.approx(direct)


def test_subs_gen_on_absent_generator_is_identity():
    e = sigma(1) + ONE
    assert e.subs_gen("s5", ZERO) == e


def test_subs_square_even_powers():
    e = sigma(2) ** 4 + sigma(1) * sigma(2) ** 2
    out = e.subs_square("s2", ScalarExpr.const(3))
    assert out == ScalarExpr.const(9) + sigma(1) * ScalarExpr.const(3)


def test_subs_square_rejects_odd_power():
    with pytest.raises(ValueError):
        sigma(2).subs_square("s2", ONE)
    with pytest.raises(ValueError):
        (ONE / sigma(2) ** 2).subs_square("s2", ONE)


def test_pow_negative_exponent():
    e = sigma(1) * ScalarExpr.const(2)
    assert e ** -1 == ONE / e
    assert e ** 0 == ONE


def test_monomial_and_canonical_round_trip():
    e = ScalarExpr.monomial(GaussRat(Fraction(1, 2), 1), {"s1": 2, "lam1": -1})
    c = e.canonical()
    assert c["terms"][0]["powers"] == {"s1": 2, "lam1": -1}
