"""Existence certificates, bounds on the minimal speed c*, and bisection for c*."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .bvp_solver import (ADMISSIBLE, INADMISSIBLE, SolveOptions,
                         integral_lower_solution_check, necessary_integral_detail, solve_bvp)
from .coefficients import AverageStats, Model
from .errors import DualCaseError, NumericalError, RefusedError

EXISTS = "Exists"
NOT_EXISTS = "NotExists"
CERT_INDETERMINATE = "Indeterminate"

ELL_P_INFINITE = "EllPInfinite"
SLOPE_CONDITION = "SlopeCondition"
NECESSARY_INTEGRAL = "NecessaryIntegral"

MARGIN_FACTOR = 10.0
MAX_EXPANSIONS = 60
SEARCH_LIMIT = 2.0 ** 10
PINCH_TOL = 1e-9


def _slope_constant(p: float) -> float:
    """p' (p-1)^(1/p)."""
    return p / (p - 1.0) * (p - 1.0) ** (1.0 / p)


def _noise(*vals: float) -> float:
    return 1e-12 * max([1.0] + [abs(v) for v in vals if math.isfinite(v)])


@dataclass(frozen=True)
class Certificate:
    verdict: str
    c: float
    reason: str | None = None
    checks: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "reason": self.reason, "c": self.c,
                "checks": {k: dict(v) for k, v in self.checks.items()}}


def certify(m: Model, stats: AverageStats, c: float) -> Certificate:
    p = m.p
    checks = {}
    if stats.ell_p == math.inf:
        checks["ell_p"] = {"value": math.inf}
        return Certificate(NOT_EXISTS, c, ELL_P_INFINITE, checks)

    # y/xi near 0 must fit under the roots of eta
    lhs = c * stats.g0 - stats.f0
    rhs = p / (p - 1.0) * (stats.ell_p * (p - 1.0)) ** (1.0 / p)
    err_ell = stats.errors.get("ell_p", 0.0)
    d_rhs = rhs / (p * stats.ell_p) * err_ell if stats.ell_p > 0.0 else err_ell ** (1.0 / p)
    margin = MARGIN_FACTOR * d_rhs + _noise(lhs, rhs)
    checks["slope"] = {"lhs": lhs, "rhs": rhs, "margin": margin}
    if rhs - lhs > margin:
        return Certificate(NOT_EXISTS, c, SLOPE_CONDITION, checks)

    nec = necessary_integral_detail(m, c)
    checks["integral"] = {"lhs": nec.lhs, "rhs": nec.rhs, "margin": nec.margin}
    if nec.rhs - nec.lhs > nec.margin:
        return Certificate(NOT_EXISTS, c, NECESSARY_INTEGRAL, checks)

    if stats.L_p < math.inf and stats.K0 < math.inf:
        low = integral_lower_solution_check(m, c)
        checks["average"] = {"lhs": low.beta, "rhs": low.threshold, "margin": low.margin}
        if low.passed:
            return Certificate(EXISTS, c, None, checks)
    return Certificate(CERT_INDETERMINATE, c, None, checks)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpeedBounds:
    lower: float
    upper: float
    simple_lower: float
    simple_upper: float | None
    assumptions_checked: dict

    def to_dict(self) -> dict:
        return {"lower": self.lower, "upper": self.upper, "simple_lower": self.simple_lower,
                "simple_upper": self.simple_upper,
                "assumptions_checked": dict(self.assumptions_checked)}


def cumulative_g_nonnegative(m: Model) -> bool:
    """int_0^xi g >= 0 for every xi, up to quadrature error."""
    scan = m.fg_scan
    cum, err = scan.cum[1], scan.cum_err[1]
    return bool(np.all(cum >= -(MARGIN_FACTOR * err + 1e-12)))


def average_drift_inf(m: Model, c: float) -> float:
    """inf over xi of the average of c g - f on (0, xi)."""
    return m.fg_scan.extremum([-1.0, c], "inf").value


def bounds_c_star(m: Model, stats: AverageStats) -> SpeedBounds:
    g0 = stats.g0
    if not g0 > 0.0:
        raise DualCaseError(f"g(0+) = {g0!r} <= 0; use the sign-flipped model (g -> -g, c -> -c)")
    p = m.p
    K = _slope_constant(p)
    lower = (stats.f0 + K * stats.ell_p ** (1.0 / p)) / g0
    simple_lower = stats.f0 / g0 + K / g0 * stats.ell_p ** (1.0 / p)
    T = K * stats.K0 ** (1.0 / m.p_conj)
    simple_upper = None
    if stats.G0 > 0.0:
        simple_upper = stats.F0 / stats.G0 + K / stats.G0 * stats.K0 ** (1.0 / m.p_conj)
    implement1 = cumulative_g_nonnegative(m)
    checks = {"g0_positive": True, "G0_positive": stats.G0 > 0.0,
              "cumulative_g_nonnegative": implement1}
    upper = math.inf if not math.isfinite(T) else _upper_root(m, T, lower, simple_upper)
    if 0.0 < lower - upper <= PINCH_TOL * max(1.0, abs(lower)):
        # pinched bounds crossing by rounding only
        lower = upper = 0.5 * (lower + upper)
    return SpeedBounds(lower, upper, simple_lower, simple_upper, checks)


def _upper_root(m: Model, T: float, lower: float, seed: float | None) -> float:
    """Smallest c with inf avg(c g - f) >= T, by expansion then brentq."""
    def phi(c):
        return average_drift_inf(m, c) - T

    hi = seed if (seed is not None and math.isfinite(seed)) else max(lower, 1.0)
    step = max(1.0, abs(hi))
    for _ in range(MAX_EXPANSIONS):
        if phi(hi) >= 0.0:
            break
        hi += step
        step *= 2.0
    else:
        return math.inf
    lo = min(hi, lower) - 1.0
    step = max(1.0, abs(hi - lo))
    for _ in range(MAX_EXPANSIONS):
        if phi(lo) < 0.0:
            break
        lo -= step
        step *= 2.0
    else:
        raise NumericalError("average condition holds for every tested speed")
    if phi(hi) == 0.0:
        return hi
    return brentq(phi, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpeedResult:
    c_star: float
    bracket: tuple
    history: tuple
    bounds: SpeedBounds
    tol: float
    admissible_above: float

    def to_dict(self) -> dict:
        return {"c_star": self.c_star, "bracket": list(self.bracket), "tol": self.tol,
                "admissible_above": self.admissible_above,
                "bounds": self.bounds.to_dict(),
                "bracket_history": [dict(h) for h in self.history]}


def find_c_star(m: Model, stats: AverageStats, tol: float = 1e-3,
                opts: SolveOptions = SolveOptions()) -> SpeedResult:
    """Bisection on the solver verdict between an Inadmissible and an Admissible speed.

    Indeterminate verdicts and solver failures move the upper end (the set of
    admissible speeds is a half-line here), but the upper end always starts at
    a strictly Admissible speed.
    """
    if not tol > 0.0:
        raise ValueError("tol must be positive")
    bounds = bounds_c_star(m, stats)
    if not bounds.assumptions_checked["cumulative_g_nonnegative"]:
        raise RefusedError("int_0^xi g changes sign: admissible speeds need not form a half-line, "
                           "so bisection is not justified; bounds only")
    history = []

    def verdict(c):
        try:
            res = solve_bvp(m, c, opts)
            v = res.verdict
            note = "; ".join(res.diagnostics)
        except NumericalError as exc:
            v, note = "Failed", str(exc)
        history.append({"c": c, "verdict": v, "note": note})
        return v

    # upper end: a strictly Admissible speed
    base = bounds.upper if math.isfinite(bounds.upper) else (
        bounds.simple_upper if bounds.simple_upper is not None and math.isfinite(bounds.simple_upper)
        else max(bounds.lower, 0.0) + 1.0)
    limit = SEARCH_LIMIT * (abs(base) + 1.0)
    hi = base
    step = max(tol, 1e-3 * abs(base))
    while verdict(hi) != ADMISSIBLE:
        hi = hi + step
        step *= 2.0
        if hi > limit:
            raise NumericalError(f"no Admissible speed found below {limit!r}")
    last_admissible = hi

    # lower end: an Inadmissible speed
    lo = min(bounds.lower, hi) - 0.5 * tol
    step = tol
    for _ in range(MAX_EXPANSIONS):
        v = verdict(lo)
        if v == INADMISSIBLE:
            break
        if v == ADMISSIBLE:
            last_admissible = min(last_admissible, lo)
            hi = lo
        lo -= step
        step *= 2.0
    else:
        raise NumericalError("no Inadmissible speed found below the lower bound")

    while hi - lo >= tol:
        mid = 0.5 * (lo + hi)
        v = verdict(mid)
        if v == INADMISSIBLE:
            lo = mid
        else:
            hi = mid
            if v == ADMISSIBLE:
                last_admissible = mid
    # c* is certified to lie in [lower, upper]; clip the numerical bracket to it
    c_lo, c_hi = max(lo, bounds.lower), min(hi, bounds.upper)
    c_star = 0.5 * (c_lo + c_hi) if c_lo <= c_hi else 0.5 * (lo + hi)
    return SpeedResult(c_star, (lo, hi), tuple(history), bounds, tol, last_admissible)


__all__ = [
    "CERT_INDETERMINATE", "Certificate", "ELL_P_INFINITE", "EXISTS", "NECESSARY_INTEGRAL",
    "NOT_EXISTS", "SLOPE_CONDITION", "SpeedBounds", "SpeedResult", "average_drift_inf",
    "bounds_c_star", "certify", "cumulative_g_nonnegative", "find_c_star",
]
