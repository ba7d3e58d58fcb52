import math

import numpy as np
import pytest

from frontspeed import (DualCaseError, RefusedError, bounds_c_star, certify, find_c_star,
                        fisher_like, load_model, parse_model, solve_bvp)
from frontspeed.wave_speed import (CERT_INDETERMINATE, ELL_P_INFINITE, EXISTS,
                                   NECESSARY_INTEGRAL, NOT_EXISTS, SLOPE_CONDITION,
                                   cumulative_g_nonnegative)

import oracles as O

SHIPPED = ["fisher", "degenerate_fisher", "fisher_step_convection", "three_jumps", "p3_degenerate"]


@pytest.fixture(scope="module")
def shipped(models_dir):
    return {n: load_model(models_dir / f"{n}.toml") for n in SHIPPED}


@pytest.mark.parametrize("c, verdict, reason", [
    (0.0, NOT_EXISTS, SLOPE_CONDITION),
    (1.0, NOT_EXISTS, SLOPE_CONDITION),
    (1.9, NOT_EXISTS, SLOPE_CONDITION),
    (2.0, CERT_INDETERMINATE, None),
    (2.1, EXISTS, None),
    (3.0, EXISTS, None),
    (10.0, EXISTS, None),
])
def test_fisher_certificates(fisher, c, verdict, reason):
    cert = certify(fisher, fisher.stats, c)
    assert (cert.verdict, cert.reason) == (verdict, reason)
    if c == 1.0:
        assert cert.checks["slope"]["lhs"] == pytest.approx(1.0)
        assert cert.checks["slope"]["rhs"] == pytest.approx(2.0)
    if c == 3.0:
        assert cert.checks["average"]["lhs"] == pytest.approx(3.0)
        assert cert.checks["average"]["rhs"] == pytest.approx(2.0)


def test_ell_p_infinite():
    m = fisher_like(h="sqrt(x)*(1 - x)")
    cert = certify(m, m.stats, 100.0)
    assert (cert.verdict, cert.reason) == (NOT_EXISTS, ELL_P_INFINITE)


def test_necessary_integral_certificate():
    m = parse_model("""
p = 2
f = [{ interval = [0, 0.5], expr = "0" }, { interval = [0.5, 1], expr = "5" }]
g = [{ interval = [0, 1], expr = "1" }]
h = [{ interval = [0, 1], expr = "x*(1 - x)" }]
d = [{ interval = [0, 1], expr = "1" }]
""")
    cert = certify(m, m.stats, 2.4)
    assert (cert.verdict, cert.reason) == (NOT_EXISTS, NECESSARY_INTEGRAL)
    # equality sits inside the margin: never certified to exist
    assert certify(m, m.stats, 2.5).verdict != EXISTS


def test_certificate_dict(fisher):
    d = certify(fisher, fisher.stats, 3.0).to_dict()
    assert d["verdict"] == EXISTS and set(d["checks"]) == {"slope", "integral", "average"}


def test_fisher_bounds(fisher):
    b = bounds_c_star(fisher, fisher.stats)
    for key in ("lower", "upper", "simple_lower", "simple_upper"):
        assert getattr(b, key) == pytest.approx(2.0, abs=1e-6), key
    assert all(b.assumptions_checked.values())


def test_degenerate_bounds(degenerate):
    b = bounds_c_star(degenerate, degenerate.stats)
    assert b.lower == pytest.approx(O.DEGEN["lower"], abs=1e-12)
    assert b.upper == pytest.approx(O.DEGEN["upper"], abs=1e-8)


def test_convection_bounds(convection):
    st = convection.stats
    assert st.F0 == pytest.approx(O.CONVECTION["F0"], abs=1e-4)
    b = bounds_c_star(convection, st)
    assert b.lower == pytest.approx(O.CONVECTION["lower"], abs=1e-8)
    assert b.simple_upper == pytest.approx(O.CONVECTION["simple_upper"], abs=1e-4)
    assert b.upper <= b.simple_upper + 1e-8


def test_dual_case_error():
    m = fisher_like(g="-1")
    with pytest.raises(DualCaseError):
        bounds_c_star(m, m.stats)


def test_singular_diffusivity_bounds_finite():
    m = fisher_like(d="1/sqrt(1 - x)")
    b = bounds_c_star(m, m.stats)
    assert math.isfinite(b.upper) and b.lower <= b.upper


@pytest.mark.parametrize("name", SHIPPED)
def test_bound_ordering(shipped, name):
    m = shipped[name]
    b = bounds_c_star(m, m.stats)
    assert b.lower <= b.upper
    assert b.simple_lower <= b.lower + 1e-9
    assert b.upper <= b.simple_upper + 1e-9


@pytest.mark.parametrize("name", SHIPPED)
def test_solver_agrees_with_bounds(shipped, name):
    m = shipped[name]
    b = bounds_c_star(m, m.stats)
    for c in (b.lower - 0.5, b.lower - 0.05):
        if solve_bvp(m, c).verdict != "Inadmissible":
            pytest.fail(f"{name}: not Inadmissible at c={c}")
    for c in (b.upper + 0.05, b.upper + 0.5, b.upper + 3.0):
        assert solve_bvp(m, c).admissible, c


@pytest.mark.parametrize("name", SHIPPED)
def test_monotone_admissibility(shipped, name):
    m = shipped[name]
    b = bounds_c_star(m, m.stats)
    for c in np.linspace(b.lower, b.upper + 0.2, 6):
        if solve_bvp(m, c).admissible:
            for delta in (0.1, 0.5, 1.0):
                assert solve_bvp(m, c + delta).admissible, (c, delta)


def test_dual_symmetry():
    m = fisher_like(g="-1 - x", f="0.2")
    dual = m.dual()
    for c in (-5.0, -3.0, -2.0, -1.0, 0.0, 2.0):
        a = certify(m, m.stats, c)
        b = certify(dual, dual.stats, -c)
        assert (a.verdict, a.reason) == (b.verdict, b.reason)
    with pytest.raises(DualCaseError):
        bounds_c_star(m, m.stats)
    bounds_c_star(dual, dual.stats)


def test_find_c_star_fisher(fisher):
    r = find_c_star(fisher, fisher.stats, 1e-3)
    assert abs(r.c_star - 2.0) <= 1e-3
    lo, hi = r.bracket
    assert hi - lo < 1e-3
    verdicts = {h["c"]: h["verdict"] for h in r.history}
    assert verdicts[lo] == "Inadmissible" and verdicts[hi] == "Admissible"


def test_find_c_star_degenerate(degenerate):
    r = find_c_star(degenerate, degenerate.stats, 1e-3)
    assert abs(r.c_star - O.DEGEN["c_star"]) <= 1e-3


@pytest.mark.parametrize("name", SHIPPED)
def test_containment(shipped, name):
    m = shipped[name]
    r = find_c_star(m, m.stats, 1e-3)
    assert r.bounds.lower <= r.c_star <= r.bounds.upper + 1e-3


def test_refuses_sign_changing_g(models_dir):
    m = load_model(models_dir / "sign_changing_g.toml")
    assert not cumulative_g_nonnegative(m)
    with pytest.raises(RefusedError, match="half-line"):
        find_c_star(m, m.stats)


def test_bad_tol(fisher):
    with pytest.raises(ValueError):
        find_c_star(fisher, fisher.stats, 0.0)


def test_find_c_star_is_deterministic(three_jumps):
    a = find_c_star(three_jumps, three_jumps.stats, 1e-2)
    b = find_c_star(three_jumps, three_jumps.stats, 1e-2)
    assert a.to_dict() == b.to_dict()
