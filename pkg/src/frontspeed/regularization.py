"""Linear-ramp regularization of jumps and stability of inf/sup averages under it.

``eps_regularize`` replaces each jump at a point of A by the chord between
phi(a - eps) and phi(a + eps).  ``gamma_limit_check`` follows the extremal
averages of the regularized functions down an eps ladder and compares them
with the unregularized value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import expr as E
from .bvp_solver import SolveOptions, solve_bvp
from .coefficients import AverageScan, Model, PiecewiseFn
from .errors import HypothesisError, NumericalError, RegularizationError

DEFAULT_HALVINGS = 10
GAP_TOL = 1e-3


def eps_bar(points: Iterable[float]) -> float:
    """Half the smallest gap between consecutive points of A with 0 and 1 added."""
    pts = sorted({0.0, 1.0} | {float(a) for a in points})
    return 0.5 * min(b - a for a, b in zip(pts, pts[1:]))


def default_ladder(points: Iterable[float], halvings: int = DEFAULT_HALVINGS) -> tuple:
    eb = eps_bar(points)
    return tuple(eb * 2.0 ** -k for k in range(1, halvings + 1))


def _ramp(x0: float, y0: float, x1: float, y1: float):
    slope = (y1 - y0) / (x1 - x0)
    return E.add(E.const(y0), E.mul(E.const(slope), E.sub(E.X, E.const(x0))))


def eps_regularize(phi: PiecewiseFn, A: Iterable[float], eps: float) -> PiecewiseFn:
    A = sorted({float(a) for a in A})
    missing = [g for g in phi.discontinuities if not any(abs(g - a) <= 1e-14 for a in A)]
    if missing:
        raise RegularizationError(f"point set omits discontinuities {missing}")
    if any(not 0.0 < a < 1.0 for a in A):
        raise RegularizationError("points must lie in (0, 1)")
    if not A:
        return phi
    eb = eps_bar(A)
    if not 0.0 < eps < eb:
        raise RegularizationError(f"eps={eps!r} must lie in (0, {eb!r})")

    ramps = [(a - eps, a + eps) for a in A]
    keep = [t for t in phi.breakpoints if not any(lo <= t <= hi for lo, hi in ramps)]
    bps = sorted(set(keep) | {t for r in ramps for t in r})
    nodes = [0.0] + bps + [1.0]
    pieces = []
    for lo, hi in zip(nodes, nodes[1:]):
        mid = 0.5 * (lo + hi)
        ramp = next((r for r in ramps if r[0] <= mid <= r[1]), None)
        if ramp is None:
            pieces.append(phi.pieces[int(phi.piece_index(mid))])
        else:
            a, b = ramp
            # one-sided values come from the pieces that contain a and b
            ya = float(phi(a, "left"))
            yb = float(phi(b, "right"))
            pieces.append(_ramp(a, ya, b, yb))
    return PiecewiseFn(tuple(bps), tuple(pieces), phi.limit_left, phi.limit_right, phi.jump_tol)


def truncate_boundary(psi: PiecewiseFn, eps: float) -> PiecewiseFn:
    """min(psi, psi(eps) x / eps) near 0 and min(psi, psi(1-eps) (1-x) / eps) near 1."""
    if not 0.0 < eps < 0.5:
        raise RegularizationError(f"eps={eps!r} must lie in (0, 0.5)")
    base = psi.refine([eps, 1.0 - eps])
    left = float(psi(eps))
    right = float(psi(1.0 - eps, "left"))
    if not (math.isfinite(left) and math.isfinite(right)):
        raise RegularizationError("psi is not finite at eps or 1 - eps")
    lramp = E.mul(E.const(left / eps), E.X)
    rramp = E.mul(E.const(right / eps), E.sub(E.const(1.0), E.X))
    pieces = []
    for lo, hi, piece in base.cells():
        if hi <= eps:
            pieces.append(E.call("min", piece, lramp))
        elif lo >= 1.0 - eps:
            pieces.append(E.call("min", piece, rramp))
        else:
            pieces.append(piece)
    return PiecewiseFn(base.breakpoints, tuple(pieces), 0.0, 0.0, psi.jump_tol)


def regularize_model(m: Model, eps: float, A: Sequence[float] | None = None) -> Model:
    """Model with every coefficient regularized about A (default: its discontinuities)."""
    A = tuple(m.theta) if A is None else tuple(A)
    kw = {k: eps_regularize(getattr(m, k), A, eps) for k in ("f", "g", "h", "d")}
    return m.with_coefficients(**kw, name=f"{m.name}@eps={eps:.3g}")


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegularizationReport:
    epsilons: tuple
    mode: str
    values: tuple
    target: float
    tol: float
    y_distance: tuple | None = None

    @property
    def gaps(self) -> tuple:
        return tuple(abs(v - self.target) for v in self.values)

    @property
    def converged(self) -> bool:
        return bool(self.gaps) and self.gaps[-1] < self.tol

    def to_dict(self) -> dict:
        return {
            "mode": self.mode, "target": self.target, "tol": self.tol,
            "converged": self.converged, "epsilons": list(self.epsilons),
            "values": list(self.values), "gaps": list(self.gaps),
            "y_distance": None if self.y_distance is None else list(self.y_distance),
        }

    def rows(self):
        return [(e, v, g) for e, v, g in zip(self.epsilons, self.values, self.gaps)]


def _extremal_average(phi: PiecewiseFn, mode: str) -> float:
    return AverageScan([phi]).extremum([1.0], mode).value


def gamma_limit_check(phi: PiecewiseFn, A: Iterable[float], ladder: Sequence[float] | None = None,
                      mode: str = "inf", tol: float = GAP_TOL) -> RegularizationReport:
    if mode not in ("inf", "sup"):
        raise ValueError(f"mode must be 'inf' or 'sup', got {mode!r}")
    A = tuple(sorted({float(a) for a in A}))
    scan = AverageScan([phi])
    lim = scan.zero_limit([1.0])
    # the extension at 0 must be finite in the direction being optimized
    bad = (mode == "inf" and lim.lower == math.inf) or (
        mode == "sup" and not math.isfinite(lim.value))
    if bad:
        raise HypothesisError(
            "finite_zero_average",
            f"average of phi tends to {lim.value} at 0+, so the {mode} is not stable", 0.0)
    target = scan.extremum([1.0], mode).value
    eps = tuple(default_ladder(A) if ladder is None else ladder)
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise RegularizationError("eps ladder must be strictly decreasing")
    values = tuple(_extremal_average(eps_regularize(phi, A, e), mode) for e in eps)
    return RegularizationReport(eps, mode, values, target, tol)


def solution_distance(m: Model, c: float, ladder: Sequence[float], window=(0.1, 0.9),
                      opts: SolveOptions = SolveOptions(), npts: int = 2001) -> tuple:
    """sup over ``window`` of |y_eps - y| for each eps (nan where a solve is not Admissible)."""
    base = solve_bvp(m, c, opts)
    if not base.admissible:
        raise NumericalError(f"unregularized problem is {base.verdict} at c={c!r}")
    xs = np.linspace(window[0], window[1], npts)
    ref = base.solution.interpolate(xs)
    out = []
    for e in ladder:
        res = solve_bvp(regularize_model(m, e), c, opts)
        if not res.admissible:
            out.append(math.nan)
            continue
        out.append(float(np.max(np.abs(res.solution.interpolate(xs) - ref))))
    return tuple(out)


@dataclass(frozen=True)
class ModelSweep:
    c: float
    epsilons: tuple
    inf_avg_H: RegularizationReport
    sup_avg_psi: RegularizationReport
    y_distance: tuple | None

    def to_dict(self) -> dict:
        return {"c": self.c, "epsilons": list(self.epsilons),
                "inf_avg_H": self.inf_avg_H.to_dict(), "sup_avg_psi": self.sup_avg_psi.to_dict(),
                "y_distance": None if self.y_distance is None else list(self.y_distance)}


def model_sweep(m: Model, c: float, ladder: Sequence[float] | None = None, solve: bool = True,
                opts: SolveOptions = SolveOptions()) -> ModelSweep:
    """Regularize c g - f (inf mode) and kappa/x^(1/(p-1)) (sup mode) about the model's jumps."""
    A = tuple(m.theta)
    eps = tuple(default_ladder(A) if ladder is None else ladder)
    H = gamma_limit_check(m.drift(c), A, eps, "inf")
    P = gamma_limit_check(m.psi, A, eps, "sup")
    dist = solution_distance(m, c, eps, opts=opts) if (solve and A) else None
    if dist is not None:
        H = RegularizationReport(H.epsilons, H.mode, H.values, H.target, H.tol, dist)
    return ModelSweep(c, eps, H, P, dist)


__all__ = [
    "RegularizationReport", "ModelSweep", "default_ladder", "eps_bar", "eps_regularize",
    "gamma_limit_check", "model_sweep", "regularize_model", "solution_distance",
    "truncate_boundary",
]
