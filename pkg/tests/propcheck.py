"""Property checks on one model, shared by the property suite and the acceptance run."""

from dataclasses import dataclass, field

import numpy as np

from frontspeed import RefusedError, bounds_c_star, find_c_star, solve_bvp
from frontspeed.bvp_solver import SolveOptions, necessary_integral
from frontspeed.coefficients import inf_sup_on

BISECT_TOL = 1e-2
PROPS = ("a", "b", "c", "d", "e")


@dataclass
class PropertyReport:
    name: str
    admissible: int = 0
    bisected: bool = False
    failures: dict = field(default_factory=lambda: {k: [] for k in PROPS})

    @property
    def ok(self):
        return not any(self.failures.values())


def speeds(b):
    return [b.upper + 0.5, 0.5 * (b.lower + b.upper) + 0.25, b.lower - 0.5, b.upper + 0.05]


def check_model(m) -> PropertyReport:
    rep = PropertyReport(m.name)
    st = m.stats
    opts = SolveOptions()
    half = SolveOptions(seed=opts.seed / 2)
    b = bounds_c_star(m, st)
    xs = np.linspace(0.05, 0.95, 901)
    for c in speeds(b):
        r = solve_bvp(m, c, opts)
        if not r.admissible:
            continue
        rep.admissible += 1
        sol = r.solution
        # (a) necessary conditions
        if not (r.roots.min_eta <= 10 * st.errors["ell_p"] + 1e-12 and necessary_integral(m, c)):
            rep.failures["a"].append(c)
        # (b) seed halving gives the same solution
        r2 = solve_bvp(m, c, half)
        restol = max(sol.residual_sup, opts.rtol * float(np.max(sol.y)), opts.atol)
        if r2.solution is not None:
            restol = max(restol, r2.solution.residual_sup)
        if not (r2.admissible and
                np.max(np.abs(r2.solution.interpolate(xs) - sol.interpolate(xs))) < 10 * restol):
            rep.failures["b"].append(c)
        # (c) linear bound
        lo, hi = inf_sup_on(m.drift(c), 0.0, 1.0)
        M = max(abs(lo), abs(hi))
        if not (np.all(sol.y >= 0) and np.all(sol.y <= sol.mesh * M * (1 + 1e-9) + 1e-12)):
            rep.failures["c"].append(c)
        # (d) slope at 0 in the root band
        band = r.roots.band
        slack = 0.05 * (band[1] + 1.0)
        if not band[0] - slack <= sol.slope_at_zero <= band[1] + slack:
            rep.failures["d"].append(c)
    # (e) containment whenever bisection runs
    try:
        res = find_c_star(m, st, BISECT_TOL)
    except RefusedError:
        return rep
    rep.bisected = True
    if not b.lower <= res.c_star <= b.upper + BISECT_TOL:
        rep.failures["e"].append(res.c_star)
    return rep
