"""Kernel/rational exp-algebra: dlog engine, normalization, zero test."""

import pytest

from todaverify.scalars import GEN_NAMES, ONE, ScalarExpr, sigma
from todaverify.exprs import (
    KernelExpr,
    LinearForm,
    RatExpr,
    Variable,
    binom,
    var_row,
)
from todaverify.pairs import build_pair


def _gen_env():
    # every generator bound to a distinct nonzero value
    return {name: 0.45 + 0.07 * k for k, name in enumerate(GEN_NAMES)}


def _var_env(vs, scale=0.2):
    env = _gen_env()
    for k, v in enumerate(vs):
        env[v] = scale * (k + 1) + 0.05j * (k - 1)
    return env


def test_variable_row_and_names():
    vs = var_row("x", 3, 3)
    assert [v.name() for v in vs] == ["x3_1", "x3_2", "x3_3"]
    assert vs[0].latex() == "x_{3,1}"


def test_linear_form_arithmetic_and_eval():
    x, y = var_row("x", 1, 2)
    f = LinearForm.of(x, 1, y, -2)
    g2 = LinearForm.of(y, 1)
    env = {x: 0.5 + 0.1j, y: -0.25}
    assert f.eval(env) == pytest.approx((0.5 + 0.1j) + 0.5)
    assert (f + g2).eval(env) == pytest.approx(f.eval(env) + g2.eval(env))
    assert (-f).eval(env) == pytest.approx(-f.eval(env))
    assert f.scale(ScalarExpr.const(3)).eval(env) == pytest.approx(
        3 * f.eval(env)
    )


def test_linear_form_halve():
    x, y = var_row("x", 1, 2)
    f = LinearForm.of(x, 2, y, -4)
    assert f.halve() == LinearForm.of(x, 1, y, -2)
    # symbolic coefficients refuse to halve (binomial split guard)
    assert LinearForm([(x, sigma(1))]).halve() is None


def test_kernel_product_adds_logs():
    x, z = Variable("x", 1, 1), Variable("z", 1, 1)
    k1 = KernelExpr.from_exponent([(-ONE, LinearForm.of(x, 1, z, -1))])
    k2 = KernelExpr.from_exponent([(-sigma(1), LinearForm.of(z, 1))])
    env = _var_env((x, z))
    assert (k1 * k2).eval_log(env) == pytest.approx(
        k1.eval_log(env) + k2.eval_log(env)
    )
    assert (k1 * k2).eval(env) == pytest.approx(k1.eval(env) * k2.eval(env))


def test_kernel_product_commutes_and_normalizes():
    x, z = Variable("x", 1, 1), Variable("z", 1, 1)
    k1 = KernelExpr.from_exponent([(-ONE, LinearForm.of(x, 1, z, -1))])
    k2 = KernelExpr(binomials=(binom(ONE, LinearForm.of(z, 1), sigma(2)),))
    assert (k1 * k2).normalized() == (k2 * k1).normalized()


def test_binomial_split_confluence():
    # (1 - e^{2z})^E and (1 - e^z)^E (1 + e^z)^E agree once normalized
    z = Variable("z", 1, 1)
    expo = sigma(1) ** 2
    whole = KernelExpr(binomials=(binom(-ONE, LinearForm.of(z, 2), expo),))
    split = KernelExpr(binomials=(
        binom(-ONE, LinearForm.of(z, 1), expo),
        binom(ONE, LinearForm.of(z, 1), expo),
    ))
    assert whole != split
    assert whole.normalized() == split.normalized()
    env = _var_env((z,))
    assert whole.eval_log(env) == pytest.approx(split.eval_log(env))


def test_normalized_is_idempotent():
    bp = build_pair("BCn-Istarn", 2)
    k = bp.kernel.normalized()
    assert k == k.normalized()


def test_kernel_subs_gen_matches_eval():
    bp = build_pair("Bn-BCstarn", 2)
    k = bp.kernel
    sub = k.subs_gen("s1", ScalarExpr.const(2) * sigma(3))
    env = _var_env(k.vars())
    env_sub = dict(env)
    env_sub["s1"] = 2 * env["s3"]
    assert sub.eval_log(env) == pytest.approx(k.eval_log(env_sub))


def test_kernel_subs_vars_relabels():
    bp = build_pair("Cn-Dn", 1)
    k = bp.kernel
    xs = [v for v in k.vars() if v.family == "x"]
    zs = [v for v in k.vars() if v.family == "z"]
    swap = {x: z for x, z in zip(xs, zs)}
    swap.update({z: x for x, z in zip(xs, zs)})
    k2 = k.subs_vars(swap)
    env = _var_env(k.vars())
    env_swapped = dict(env)
    for a, b in swap.items():
        env_swapped[b] = env[a]
    assert k2.eval_log(env_swapped) == pytest.approx(k.eval_log(env))


@pytest.mark.parametrize("name,n", [
    ("gl-step", 2),
    ("glhat", 1),
    ("Cn-Dn", 2),
    ("Bn-BCstarn", 2),
    ("BCn-Istarn", 2),
    ("In-BCn", 1),
    ("A2oddn-A2oddn", 2),
])
def test_dlog_matches_finite_difference(name, n):
    bp = build_pair(name, n)
    k = bp.kernel
    env = _var_env(k.vars())
    h = 1e-3
    for v in k.vars():
        d = k.dlog(v).eval(env)
        vals = []
        for step in (2 * h, h, -h, -2 * h):
            e2 = dict(env)
            e2[v] = env[v] + step
            vals.append(k.eval_log(e2))
        fd = (-vals[0] + 8 * vals[1] - 8 * vals[2] + vals[3]) / (12 * h)
        assert d == pytest.approx(fd, rel=1e-6, abs=1e-8), v.name()


def test_rat_expr_linearity_and_product():
    x, y = var_row("x", 1, 2)
    a = RatExpr.monomial(sigma(1), LinearForm.of(x, 1))
    b = RatExpr.fraction(
        ONE, LinearForm.of(y, 1), [(-ONE, LinearForm.of(x, 1), 1)],
    )
    env = _var_env((x, y))
    assert (a + b).eval(env) == pytest.approx(a.eval(env) + b.eval(env))
    assert (a * b).eval(env) == pytest.approx(a.eval(env) * b.eval(env))
    assert (-a).eval(env) == pytest.approx(-a.eval(env))


def test_rat_expr_derivative_product_rule():
    x, y = var_row("x", 1, 2)
    a = RatExpr.monomial(sigma(1), LinearForm.of(x, 2, y, 1))
    b = RatExpr.fraction(
        ONE, LinearForm.of(y, -1), [(ONE, LinearForm.of(x, 1), 2)],
    )
    lhs = (a * b).d_dv(x)
    rhs = a.d_dv(x) * b + a * b.d_dv(x)
    env = _var_env((x, y))
    assert lhs.eval(env) == pytest.approx(rhs.eval(env))
    assert (lhs - rhs).is_zero()


def test_rat_expr_zero_test_clears_denominators():
    # e^x/(1+e^x) + 1/(1+e^x) - 1 == 0 needs the common-denominator expansion
    x = Variable("x", 1, 1)
    den = [(ONE, LinearForm.of(x, 1), 1)]
    expr = (
        RatExpr.fraction(ONE, LinearForm.of(x, 1), den)
        + RatExpr.fraction(ONE, LinearForm(), den)
        - RatExpr.const(ONE)
    )
    assert expr.is_zero()
    ok, witness = expr.is_zero_with_witness()
    assert ok and witness is None


def test_rat_expr_nonzero_witness():
    x = Variable("x", 1, 1)
    expr = RatExpr.monomial(sigma(1), LinearForm.of(x, 1)) - RatExpr.const(ONE)
    ok, witness = expr.is_zero_with_witness()
    assert not ok
    form, coeff = witness
    assert isinstance(coeff, ScalarExpr)


def test_eval_term_scale_bounds_eval():
    x, y = var_row("x", 1, 2)
    expr = (
        RatExpr.monomial(sigma(1), LinearForm.of(x, 1))
        - RatExpr.monomial(sigma(1), LinearForm.of(y, 1))
    )
    env = _var_env((x, y))
    assert abs(expr.eval(env)) <= expr.eval_term_scale(env) + 1e-15


def test_kernel_latex_mentions_all_pieces():
    bp = build_pair("BCn-Istarn", 1)
    text = bp.kernel.latex()
    assert "\\exp" in text
    assert "e^{" in text
    assert "(1-e^{z_{1,1}})" in text or "(1+e^{z_{1,1}})" in text
