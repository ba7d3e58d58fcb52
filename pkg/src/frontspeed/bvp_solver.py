"""Backward shooting for y' = c g - f - kappa y^(-1/(p-1)), y(0+) = y(1-) = 0.

A trajectory is started at xi = 1 through u = y^p' (which is regular at y = 0)
and integrated down to ``xi_min``.  Its slope y/xi there is compared with the
band allowed by the roots of eta(t) = t^p' - (c g(0) - f(0)) t^(1/(p-1)) + lambda.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from . import _backend
from ._backend import ShootOptions, ShootProblem
from .coefficients import Model, inf_sup_on
from .errors import NumericalError, RefusedError
from .quadrature import GL5_NODES, GL5_WEIGHTS

XI_MIN = 1e-6
LADDER_STEPS = 6
SLOPE_TOL_FACTOR = 0.05

ADMISSIBLE = "Admissible"
INADMISSIBLE = "Inadmissible"
INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class SolveOptions:
    rtol: float = 1e-8
    atol: float = 1e-10
    seed: float = 1e-6
    switch: float = 1e-6
    xi_min: float = XI_MIN
    max_steps: int = 200_000
    max_step: float = 4e-3
    backend: str | None = None

    def shoot_options(self) -> ShootOptions:
        return ShootOptions(rtol=self.rtol, atol=self.atol, seed=self.seed, switch=self.switch,
                            max_steps=self.max_steps, max_step=self.max_step)


# ---------------------------------------------------------------------------
# pointwise pieces


def rhs(m: Model, c: float, xi: float, y: float, side: str | None = None) -> float:
    """c g(xi) - f(xi) - kappa(xi) y^(-1/(p-1)); ``side`` is required at a jump."""
    if not y > 0.0:
        raise ValueError(f"y must be positive, got {y!r}")
    if side is None:
        if any(abs(xi - t) <= 1e-15 for t in m.theta):
            raise ValueError(f"xi={xi!r} is a discontinuity; pass side='left' or 'right'")
        side = "right"
    H = c * m.g(xi, side) - m.f(xi, side)
    k = m.kappa(xi, side)
    if k == 0.0:
        return float(H)
    return float(H - k * y ** (-1.0 / (m.p - 1.0)))


@dataclass(frozen=True)
class SlopeRoots:
    roots: tuple
    min_eta: float
    vertex: float
    A: float
    lam: float

    @property
    def band(self) -> tuple[float, float] | None:
        return (self.roots[0], self.roots[-1]) if self.roots else None


def eta(t, A: float, lam: float, p: float):
    t = np.asarray(t, dtype=float)
    return t ** (p / (p - 1.0)) - A * t ** (1.0 / (p - 1.0)) + lam


def slope_roots(m: Model, c: float, ell_p: float | None = None) -> SlopeRoots:
    """Nonnegative roots of eta and its minimum over t >= 0."""
    st = m.stats
    ell = st.ell_p if ell_p is None else ell_p
    if math.isinf(ell):
        raise RefusedError("ell_p is infinite: no traveling wave exists for any speed")
    p = m.p
    A = c * st.g0 - st.f0
    lam = ell ** (1.0 / (p - 1.0))
    # with s = t^(1/(p-1)):  phi(s) = s^p - A s + lam, convex on s >= 0
    phi = lambda s: s ** p - A * s + lam  # noqa: E731
    if A <= 0.0:
        roots = (0.0,) if lam == 0.0 else ()
        return SlopeRoots(roots, lam, 0.0, A, lam)
    s_star = (A / p) ** (1.0 / (p - 1.0))
    t_star = s_star ** (p - 1.0)
    mn = phi(s_star)
    scale = max(1.0, abs(A) * s_star, lam)
    if mn > 1e-13 * scale:
        return SlopeRoots((), mn, t_star, A, lam)
    if mn >= -1e-13 * scale:
        return SlopeRoots((t_star, t_star), 0.0, t_star, A, lam)
    lo = 0.0 if lam == 0.0 else brentq(phi, 0.0, s_star, xtol=1e-15, rtol=1e-15)
    hi_end = max(2.0 * s_star, 1.0)
    while phi(hi_end) < 0.0:
        hi_end *= 2.0
    hi = brentq(phi, s_star, hi_end, xtol=1e-15, rtol=1e-15)
    return SlopeRoots((lo ** (p - 1.0), hi ** (p - 1.0)), mn, t_star, A, lam)


def lemma_radius(m: Model) -> float:
    """r0: every discontinuity lies in [r0, 1 - r0]."""
    if not m.theta:
        return 0.5
    return min(min(t, 1.0 - t) for t in m.theta)


def lower_bound_delta(m: Model, c: float, r: float) -> float:
    """Certified lower bound for every positive solution on [2r, 1-2r]."""
    r0 = lemma_radius(m)
    if not 0.0 < r < 0.5 * r0:
        raise ValueError(f"r={r!r} must lie in (0, {0.5 * r0!r})")
    mk, _ = inf_sup_on(m.kappa, r, 1.0 - r)
    lo, hi = inf_sup_on(m.drift(c), r, 1.0 - r)
    M = max(abs(lo), abs(hi))
    if not mk > 0.0:
        raise ValueError(f"inf of kappa on [{r}, {1 - r}] is not positive")
    p = m.p
    return 0.99 * min((r * mk) ** (1.0 / m.p_conj), (mk / (p * (M + 1.0))) ** (p - 1.0))


@dataclass(frozen=True)
class IntegralCheck:
    passed: bool
    lhs: float
    rhs: float
    margin: float


def necessary_integral_detail(m: Model, c: float) -> IntegralCheck:
    G, eg = m.g.integral()
    F, ef = m.f.integral()
    lhs = c * G
    margin = 10.0 * (abs(c) * eg + ef) + 1e-12 * max(1.0, abs(lhs), abs(F))
    return IntegralCheck(lhs - F > margin, lhs, F, margin)


def necessary_integral(m: Model, c: float) -> bool:
    """c * int g > int f, strictly and beyond quadrature noise."""
    return necessary_integral_detail(m, c).passed


@dataclass(frozen=True)
class LowerSolutionCheck:
    passed: bool
    beta: float
    threshold: float
    witness: float
    margin: float


def integral_lower_solution_check(m: Model, c: float) -> LowerSolutionCheck:
    """beta = inf avg(c g - f) against p'(p-1)^(1/p) K0^(1/p'); witness slope beta/p."""
    st = m.stats
    p = m.p
    ext = m.fg_scan.extremum([-1.0, c], "inf")
    beta = ext.value
    thr = m.p_conj * (p - 1.0) ** (1.0 / p) * st.K0 ** (1.0 / m.p_conj)
    margin = 10.0 * (ext.error + st.errors["K0"]) + 1e-12 * max(1.0, abs(beta))
    return LowerSolutionCheck(beta - thr > margin, beta, thr, beta / p, margin)


# ---------------------------------------------------------------------------
# solutions


@dataclass(frozen=True, eq=False)
class YSolution:
    c: float
    mesh: np.ndarray
    y: np.ndarray
    ydot_left: np.ndarray
    ydot_right: np.ndarray
    residual: np.ndarray  # one per mesh cell
    error_estimate: float = 0.0
    yddot_left: np.ndarray | None = None
    yddot_right: np.ndarray | None = None

    @property
    def residual_sup(self) -> float:
        return float(np.max(np.abs(self.residual))) if self.residual.size else 0.0

    @property
    def slope_at_zero(self) -> float:
        return float(self.y[0] / self.mesh[0])

    @property
    def boundary_defect(self) -> tuple[float, float]:
        return float(self.y[0]), float(self.y[-1])

    @classmethod
    def from_values(cls, m: Model, c: float, mesh, y, error_estimate: float = 0.0) -> "YSolution":
        mesh = np.asarray(mesh, dtype=float)
        y = np.asarray(y, dtype=float)
        e = 1.0 / (m.p - 1.0)
        drift = m.drift(c)
        ypos = np.maximum(y, 1e-300)

        def derivs(side):
            # y' = H - k y^-e and y'' = H' - k' y^-e + e k y^(-e-1) y'
            H = drift(mesh, side)
            k = m.kappa(mesh, side)
            with np.errstate(all="ignore"):
                sing = np.where(k == 0.0, 0.0, k * np.power(ypos, -e))
                d1 = H - sing
                dk = m.kappa.derivative(mesh, side)
                d2 = (drift.derivative(mesh, side)
                      - np.where(dk == 0.0, 0.0, dk * np.power(ypos, -e))
                      + e * np.where(k == 0.0, 0.0, sing / ypos) * d1)
            return d1, d2

        dr, ddr = derivs("right")
        dl, ddl = derivs("left")
        res = _cell_residuals(m, drift, mesh, y, dr[:-1], dl[1:], ddr[:-1], ddl[1:], e)
        return cls(c, mesh, y, dl, dr, res, error_estimate, ddl, ddr)

    def interpolate(self, x):
        """Quintic Hermite interpolant from one-sided y', y'' (cubic where y'' is unavailable)."""
        x = np.asarray(x, dtype=float)
        i = np.clip(np.searchsorted(self.mesh, x, side="right") - 1, 0, self.mesh.size - 2)
        dd_a = None if self.yddot_right is None else self.yddot_right[i]
        dd_b = None if self.yddot_left is None else self.yddot_left[i + 1]
        return _hermite(self.mesh[i], self.mesh[i + 1], self.y[i], self.y[i + 1],
                        self.ydot_right[i], self.ydot_left[i + 1], x, dd_a, dd_b)

    def to_rows(self):
        res = np.append(self.residual, 0.0)
        return np.column_stack([self.mesh, self.y, self.ydot_left, self.ydot_right, res])


def _hermite(a, b, ya, yb, da, db, x, dda=None, ddb=None):
    h = b - a
    t = (x - a) / h
    t2 = t * t
    t3 = t2 * t
    cubic = ((2 * t3 - 3 * t2 + 1) * ya + (t3 - 2 * t2 + t) * h * da
             + (-2 * t3 + 3 * t2) * yb + (t3 - t2) * h * db)
    if dda is None or ddb is None:
        return cubic
    t4 = t3 * t
    t5 = t4 * t
    h2 = h * h
    with np.errstate(all="ignore"):
        quintic = ((1 - 10 * t3 + 15 * t4 - 6 * t5) * ya
                   + (t - 6 * t3 + 8 * t4 - 3 * t5) * h * da
                   + 0.5 * (t2 - 3 * t3 + 3 * t4 - t5) * h2 * dda
                   + 0.5 * (t3 - 2 * t4 + t5) * h2 * ddb
                   + (-4 * t3 + 7 * t4 - 3 * t5) * h * db
                   + (10 * t3 - 15 * t4 + 6 * t5) * yb)
    return np.where(np.isfinite(dda) & np.isfinite(ddb), quintic, cubic)


def _cell_residuals(m, drift, mesh, y, d_right, d_left, dd_right, dd_left, e):
    a, b = mesh[:-1], mesh[1:]
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    x = mid[:, None] + half[:, None] * GL5_NODES[None, :]
    Y = _hermite(a[:, None], b[:, None], y[:-1, None], y[1:, None], d_right[:, None],
                 d_left[:, None], x, dd_right[:, None], dd_left[:, None])
    # the interpolant can dip below zero where y is tiny; fall back to the chord there
    lin = y[:-1, None] + (y[1:, None] - y[:-1, None]) * (x - a[:, None]) / (b - a)[:, None]
    Y = np.where(Y > 0.0, Y, lin)
    k = m.kappa(x.ravel()).reshape(x.shape)
    H = drift(x.ravel()).reshape(x.shape)
    with np.errstate(all="ignore"):
        f = H - np.where(k == 0.0, 0.0, k * np.power(np.maximum(Y, 1e-300), -e))
    integral = half * (f @ GL5_WEIGHTS)
    return (y[1:] - y[:-1]) - integral


@dataclass(frozen=True)
class AdmissibilityResult:
    verdict: str
    c: float
    solution: YSolution | None
    crossing: float | None = None
    roots: SlopeRoots | None = None
    diagnostics: tuple = ()
    nsteps: int = 0
    backend: str = ""

    @property
    def admissible(self) -> bool:
        return self.verdict == ADMISSIBLE

    def to_dict(self) -> dict:
        sol = self.solution
        out = {
            "verdict": self.verdict, "c": self.c, "crossing": self.crossing,
            "diagnostics": list(self.diagnostics), "steps": self.nsteps,
            "slope_roots": list(self.roots.roots) if self.roots else None,
            "min_eta": self.roots.min_eta if self.roots else None,
        }
        if sol is not None:
            out.update(slope_at_zero=sol.slope_at_zero, residual_sup=sol.residual_sup,
                       boundary_defect=list(sol.boundary_defect),
                       error_estimate=sol.error_estimate, mesh_points=int(sol.mesh.size))
        return out


def shoot_nodes(m: Model, xi_min: float) -> np.ndarray:
    ladder = xi_min * 2.0 ** np.arange(LADDER_STEPS + 1)
    pts = set(float(t) for t in ladder) | {t for t in m.nodes if t > ladder[-1]} | {1.0}
    return np.array(sorted(pts))


def build_problem(m: Model, xi_min: float = XI_MIN) -> ShootProblem:
    cache = m.__dict__.setdefault("_shoot_problems", {})
    if xi_min in cache:
        return cache[xi_min]
    nodes = shoot_nodes(m, xi_min)
    mids = 0.5 * (nodes[:-1] + nodes[1:])
    kap = m.kappa

    def pick(fn):
        return tuple(fn.pieces[int(i)] for i in fn.piece_index(mids))

    prob = ShootProblem(nodes, pick(m.g), pick(m.f), pick(kap), m.p)
    cache[xi_min] = prob
    return prob


def shoot_raw(m: Model, c: float, opts: SolveOptions = SolveOptions()):
    prob = build_problem(m, opts.xi_min)
    return _backend.shoot(prob, c, opts.shoot_options(), opts.backend)


def solve_bvp(m: Model, c: float, opts: SolveOptions = SolveOptions()) -> AdmissibilityResult:
    """Shoot backward from xi = 1 and classify the trajectory at ``xi_min``."""
    st = m.stats
    roots = slope_roots(m, c)
    xs, ys, errs, status, sx, nsteps = shoot_raw(m, c, opts)
    backend = opts.backend or _backend.BACKEND
    if status == _backend.STATUS_CROSSING:
        sol = _solution(m, c, xs, ys, errs) if xs.size > 1 else None
        return AdmissibilityResult(INADMISSIBLE, c, sol, sx, roots,
                                   ("trajectory reached y = 0",), nsteps, backend)
    if status != _backend.STATUS_OK:
        raise NumericalError(f"shooting failed: {_backend.STATUS_NAMES[status]}", sx)
    sol = _solution(m, c, xs, ys, errs)
    mesh, y = sol.mesh, sol.y
    r = y / mesh
    diags = []

    eta_tol = 10.0 * st.errors.get("ell_p", 0.0) + 1e-12
    lam_ref = roots.roots[-1] if roots.roots else roots.vertex
    slope_tol = SLOPE_TOL_FACTOR * (lam_ref + 1.0)
    cone = lam_ref + slope_tol

    if roots.min_eta > eta_tol:
        diags.append(f"min eta = {roots.min_eta:.6g} > 0: slope condition fails")
        return AdmissibilityResult(INADMISSIBLE, c, sol, _cone_exit(mesh, r, cone), roots,
                                   tuple(diags), nsteps, backend)
    if 0.0 < r[0] <= cone:
        verdict = ADMISSIBLE
        nec = necessary_integral_detail(m, c)
        if not nec.passed:
            verdict = INDETERMINATE
            diags.append("necessary integral condition fails for an in-band trajectory")
        for rr in (0.05, 0.1):
            try:
                delta = lower_bound_delta(m, c, rr)
            except ValueError:
                continue
            inside = (mesh >= 2 * rr) & (mesh <= 1 - 2 * rr)
            if np.any(y[inside] < delta):
                verdict = INDETERMINATE
                diags.append(f"y drops below the certified floor {delta:.6g} on [{2 * rr}, {1 - 2 * rr}]")
        if y[-1] > 1e-3:
            diags.append(f"large right boundary defect y(1-) ~ {y[-1]:.3g}")
        return AdmissibilityResult(verdict, c, sol, None, roots, tuple(diags), nsteps, backend)
    i2 = int(np.searchsorted(mesh, 2.0 * mesh[0] * (1 - 1e-12)))
    i4 = int(np.searchsorted(mesh, 4.0 * mesh[0] * (1 - 1e-12)))
    if r[0] > r[i2] > r[i4]:
        diags.append(f"y/xi = {r[0]:.6g} above the slope band and growing toward 0")
        return AdmissibilityResult(INADMISSIBLE, c, sol, _cone_exit(mesh, r, cone), roots,
                                   tuple(diags), nsteps, backend)
    diags.append(f"y/xi = {r[0]:.6g} above the slope band {cone:.6g} but not growing")
    return AdmissibilityResult(INDETERMINATE, c, sol, None, roots, tuple(diags), nsteps, backend)


def _solution(m, c, xs, ys, errs) -> YSolution:
    return YSolution.from_values(m, c, xs[::-1], ys[::-1], float(np.sum(errs)))


def _cone_exit(mesh, r, cone) -> float:
    """Largest xi of the run of mesh points outside y <= cone*xi that reaches xi_min."""
    out = r > cone
    if not out[0]:
        j = int(np.argmax(r - cone))
        return float(mesh[max(j, 1)])
    inside = np.flatnonzero(~out)
    if inside.size == 0:
        return float(mesh[-1])
    j = int(inside[0])  # first inside point; the exit lies in (mesh[j-1], mesh[j]]
    a, b = mesh[j - 1], mesh[j]
    ra, rb = r[j - 1] - cone, r[j] - cone
    return float(a + (b - a) * ra / (ra - rb)) if ra != rb else float(b)


# ---------------------------------------------------------------------------
# Picard refinement


def picard_refine(m: Model, c: float, y0: YSolution, iters: int, omega: float = 0.5,
                  tol: float = 1e-10) -> YSolution:
    """Damped fixed-point refinement y <- max(floor, y + omega * sum_{cells >= i} residual)."""
    if iters <= 0 or y0.residual_sup <= tol:
        return y0
    floor = np.zeros_like(y0.y)
    try:
        delta = lower_bound_delta(m, c, 0.1)
        floor[(y0.mesh >= 0.2) & (y0.mesh <= 0.8)] = 0.5 * delta
    except ValueError:
        pass
    best = cur = y0
    rising = 0
    for _ in range(iters):
        tail = np.append(np.cumsum(cur.residual[::-1])[::-1], 0.0)
        ynew = np.maximum(cur.y + omega * tail, floor)
        ynew = np.maximum(ynew, 1e-3 * cur.y)
        new = YSolution.from_values(m, c, cur.mesh, ynew, cur.error_estimate)
        if new.residual_sup > cur.residual_sup:
            rising += 1
            if rising >= 3:
                raise NumericalError("Picard iteration diverges (residual grew 3 times in a row)")
        else:
            rising = 0
        if new.residual_sup < best.residual_sup:
            best = new
        cur = new
    return best


def with_options(opts: SolveOptions, **kw) -> SolveOptions:
    return replace(opts, **kw)


__all__ = [
    "ADMISSIBLE", "INADMISSIBLE", "INDETERMINATE", "AdmissibilityResult", "SlopeRoots",
    "SolveOptions", "YSolution", "integral_lower_solution_check", "lower_bound_delta",
    "necessary_integral", "picard_refine", "rhs", "slope_roots", "solve_bvp",
]
