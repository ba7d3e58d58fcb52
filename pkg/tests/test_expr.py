import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from frontspeed import expr as E
from frontspeed.errors import ExprSyntaxError


@pytest.mark.parametrize("text, x, want", [
    ("x*(1-x)", 0.25, 0.1875),
    ("2^3^2", 0.0, 512.0),          # right associative
    ("-x^2", 3.0, -9.0),            # power binds tighter than unary minus
    ("x**2", 3.0, 9.0),
    ("min(x, 1-x)", 0.7, 0.3),
    ("max(x, 0.5)", 0.2, 0.5),
    ("exp(log(x))", 0.3, 0.3),
    ("sqrt(abs(-x))", 4.0, 2.0),
    ("1e-3 + .5", 0.0, 0.501),
    ("+x - -x", 1.5, 3.0),
])
def test_parse_and_evaluate(text, x, want):
    node = E.parse(text)
    assert float(E.evaluate(node, x)) == pytest.approx(want, rel=1e-15)
    assert E.to_pyfunc(node)(x) == pytest.approx(want, rel=1e-15)
    ops, args = E.to_program(node)
    assert E.run_program(ops, args, x) == pytest.approx(want, rel=1e-15)


@pytest.mark.parametrize("text, col", [
    ("x +", 4),
    ("x $ 1", 3),
    ("foo(x)", 1),
    ("min(x)", 1),
    ("(x", 3),
    ("", 1),
    ("x y", 3),
])
def test_syntax_errors_carry_column(text, col):
    with pytest.raises(ExprSyntaxError) as ei:
        E.parse(text, line=7)
    assert ei.value.line == 7
    assert ei.value.column == col


def test_vector_evaluation_keeps_shape_and_domain_errors_are_nan():
    xs = np.linspace(-1.0, 1.0, 5)
    out = E.evaluate(E.parse("log(x)"), xs)
    assert out.shape == xs.shape
    assert np.isnan(out[0]) and np.isinf(out[2]) and out[-1] == 0.0
    assert E.evaluate(E.parse("3"), xs).tolist() == [3.0] * 5


def test_pyfunc_raises_on_domain_error():
    with pytest.raises(ValueError):
        E.to_pyfunc(E.parse("log(x)"))(-1.0)
    with pytest.raises(ZeroDivisionError):
        E.to_pyfunc(E.parse("1/x"))(0.0)


def test_builders_fold_constants():
    assert E.add(E.const(1.0), E.const(2.0)) == E.const(3.0)
    assert E.mul(E.const(1.0), E.X) == E.X
    assert E.mul(E.const(0.0), E.X) == E.const(0.0)


def test_program_depth_limit():
    deep = "x"
    for _ in range(E.MAX_STACK + 2):
        deep = f"x*(1+{deep})"
    with pytest.raises(ValueError):
        E.to_program(E.parse(deep))


def _exprs():
    leaf = st.one_of(st.just("x"), st.floats(0.1, 5.0).map(lambda v: f"{v:.4g}"))

    def extend(inner):
        return st.one_of(
            st.tuples(inner, st.sampled_from("+-*"), inner).map(lambda t: f"({t[0]} {t[1]} {t[2]})"),
            inner.map(lambda s: f"-{s}"),
            inner.map(lambda s: f"exp(-abs({s}))"),
            st.tuples(inner, inner).map(lambda t: f"min({t[0]}, {t[1]})"),
            inner.map(lambda s: f"{s}^2"),
        )
    return st.recursive(leaf, extend, max_leaves=12)


@settings(max_examples=200, deadline=None)
@given(_exprs(), st.floats(-2.0, 2.0))
def test_round_trip_and_evaluators_agree(text, x):
    node = E.parse(text)
    assert E.parse(str(node)) == node
    v = float(E.evaluate(node, x))
    ops, args = E.to_program(node)
    w = E.run_program(ops, args, x)
    if math.isfinite(v):
        assert w == pytest.approx(v, rel=1e-12, abs=1e-300)
        assert E.to_pyfunc(node)(x) == pytest.approx(v, rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("text, x, want", [
    ("x^3", 2.0, 12.0),
    ("x^x", 2.0, 4.0 * (math.log(2.0) + 1.0)),
    ("exp(2*x)/x", 1.0, math.exp(2.0)),
    ("sqrt(x)*log(x)", 4.0, (math.log(4.0) + 2.0) / 4.0),
    ("min(x, 1 - x)", 0.7, -1.0),
    ("max(x, 1 - x)", 0.7, 1.0),
    ("abs(x - 1)", 0.5, -1.0),
    ("-(x*(1 - x))", 0.25, -0.5),
])
def test_derivative(text, x, want):
    v, d = E.evaluate_with_derivative(E.parse(text), x)
    assert float(v) == pytest.approx(float(E.evaluate(E.parse(text), x)))
    assert float(d) == pytest.approx(want, rel=1e-13)


@settings(max_examples=150, deadline=None)
@given(_exprs(), st.floats(-1.5, 1.5))
def test_derivative_matches_central_difference(text, x):
    node = E.parse(text)
    h = 1e-5
    lo, hi = float(E.evaluate(node, x - h)), float(E.evaluate(node, x + h))
    _, d = E.evaluate_with_derivative(node, x)
    d = float(d)
    if not (math.isfinite(lo) and math.isfinite(hi) and math.isfinite(d)):
        return
    # kinks of abs/min inside [x-h, x+h] make the difference quotient meaningless
    mid = float(E.evaluate(node, x))
    curv = abs(hi - 2 * mid + lo) / h ** 2
    if curv * h > 1e-2 * (1 + abs(d)):
        return
    assert (hi - lo) / (2 * h) == pytest.approx(d, rel=1e-5, abs=1e-5)
