"""Piecewise coefficients, model configs, integral averages and endpoint limits."""

from __future__ import annotations

import hashlib
import math
import re
import sys
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from . import expr as E
from .errors import (ConfigError, DomainError, ExprSyntaxError, HypothesisError,
                     QuadratureError)
from .quadrature import gauss_segments, integrate

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

JUMP_TOL = 1e-9
SCAN_POINTS = 512
LADDER_START = 1e-2
LADDER_HALVINGS = 12
LADDER_RTOL = 1e-6

HYPOTHESES = {
    "bounded": "f, g, h piecewise continuous and bounded; d piecewise continuous on (0,1)",
    "diffusivity": "d positive and bounded on compact subsets of (0,1)",
    "reaction": "h(0)=h(1)=0 and h positive on compact subsets of (0,1)",
    "kappa_integrable": "kappa = d^(1/(p-1)) h integrable on (0,1)",
}


# ---------------------------------------------------------------------------
# piecewise functions


@dataclass(frozen=True)
class PiecewiseFn:
    """Coefficient on (0,1) given by one expression per cell.

    ``breakpoints`` lists every interior cell boundary.  Boundaries where the
    neighbouring pieces agree to within ``jump_tol`` are kept for evaluation but
    are not reported in ``discontinuities``.
    """

    breakpoints: tuple
    pieces: tuple
    limit_left: float | None = None
    limit_right: float | None = None
    jump_tol: float = JUMP_TOL

    def __post_init__(self):
        bps = tuple(float(b) for b in self.breakpoints)
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "pieces", tuple(self.pieces))
        if len(self.pieces) != len(bps) + 1:
            raise ConfigError(f"{len(bps)} breakpoints need {len(bps) + 1} pieces, got {len(self.pieces)}")
        if any(not 0.0 < b < 1.0 for b in bps):
            raise ConfigError(f"breakpoints must lie in (0,1): {bps}")
        if any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
            raise ConfigError(f"breakpoints must be strictly increasing: {bps}")

    # -- construction -----------------------------------------------------

    @classmethod
    def constant(cls, value: float) -> "PiecewiseFn":
        return cls((), (E.const(value),))

    @classmethod
    def from_expr(cls, node) -> "PiecewiseFn":
        if isinstance(node, str):
            node = E.parse(node)
        return cls((), (node,))

    @classmethod
    def from_strings(cls, items: Sequence[tuple]) -> "PiecewiseFn":
        """Build from ``[(a, b, "expr"), ...]`` covering [0, 1] contiguously."""
        intervals = [(float(a), float(b)) for a, b, _ in items]
        _check_cover(intervals)
        pieces = [E.parse(s) if isinstance(s, str) else s for _, _, s in items]
        return cls(tuple(b for _, b in intervals[:-1]), tuple(pieces))

    @classmethod
    def step(cls, at: float, left: float, right: float) -> "PiecewiseFn":
        return cls((at,), (E.const(left), E.const(right)))

    # -- structure --------------------------------------------------------

    @property
    def nodes(self) -> tuple:
        return (0.0,) + self.breakpoints + (1.0,)

    def cells(self):
        n = self.nodes
        return [(n[i], n[i + 1], self.pieces[i]) for i in range(len(self.pieces))]

    def jump_at(self, i: int) -> float:
        """|left piece - right piece| at breakpoint ``i`` (inf if either side is non-finite)."""
        g = self.breakpoints[i]
        a = float(E.evaluate(self.pieces[i], g))
        b = float(E.evaluate(self.pieces[i + 1], g))
        if not (math.isfinite(a) and math.isfinite(b)):
            return math.inf
        return abs(a - b)

    @cached_property
    def discontinuities(self) -> tuple:
        return tuple(g for i, g in enumerate(self.breakpoints) if self.jump_at(i) > self.jump_tol)

    @property
    def is_constant(self) -> bool:
        return all(isinstance(p, E.Const) for p in self.pieces) and (
            len({p.value for p in self.pieces}) == 1)

    def constant_value(self) -> float | None:
        return self.pieces[0].value if self.is_constant else None

    def refine(self, nodes: Iterable[float]) -> "PiecewiseFn":
        """Same function, with extra breakpoints inserted at ``nodes``."""
        merged = sorted(set(self.breakpoints) | {float(t) for t in nodes if 0.0 < t < 1.0})
        owners = [int(self.piece_index(0.5 * (lo + hi))) for lo, hi in
                  zip([0.0] + merged, merged + [1.0])]
        return PiecewiseFn(tuple(merged), tuple(self.pieces[o] for o in owners),
                           self.limit_left, self.limit_right, self.jump_tol)

    def combine(self, other: "PiecewiseFn", op: Callable) -> "PiecewiseFn":
        """Cellwise ``op(expr_self, expr_other)`` on the merged breakpoints."""
        nodes = set(self.breakpoints) | set(other.breakpoints)
        a = self.refine(nodes)
        b = other.refine(nodes)
        return PiecewiseFn(a.breakpoints, tuple(op(p, q) for p, q in zip(a.pieces, b.pieces)))

    def map(self, op: Callable) -> "PiecewiseFn":
        return PiecewiseFn(self.breakpoints, tuple(op(p) for p in self.pieces),
                           jump_tol=self.jump_tol)

    def scale(self, k: float) -> "PiecewiseFn":
        out = self.map(lambda p: E.mul(E.const(k), p))
        return PiecewiseFn(out.breakpoints, out.pieces,
                           None if self.limit_left is None else k * self.limit_left,
                           None if self.limit_right is None else k * self.limit_right)

    def __add__(self, other: "PiecewiseFn") -> "PiecewiseFn":
        return self.combine(other, E.add)

    def __sub__(self, other: "PiecewiseFn") -> "PiecewiseFn":
        return self.combine(other, E.sub)

    # -- evaluation -------------------------------------------------------

    def piece_index(self, x, side: str = "right"):
        return np.searchsorted(self.breakpoints, x, side="right" if side == "right" else "left")

    def __call__(self, x, side: str = "right"):
        """Evaluate; at a breakpoint ``side`` picks the right or left piece."""
        xa = np.asarray(x, dtype=float)
        if len(self.pieces) == 1:
            out = E.evaluate(self.pieces[0], xa)
        else:
            idx = np.asarray(self.piece_index(xa, side))
            out = np.empty(xa.shape)
            for i, piece in enumerate(self.pieces):
                mask = idx == i
                if np.any(mask):
                    out[mask] = E.evaluate(piece, xa[mask])
        return float(out) if out.ndim == 0 else out

    def derivative(self, x, side: str = "right"):
        """Derivative of the piece selected by ``side`` (one-sided at breakpoints)."""
        xa = np.asarray(x, dtype=float)
        idx = np.asarray(self.piece_index(xa, side))
        out = np.empty(xa.shape)
        for i, piece in enumerate(self.pieces):
            mask = idx == i
            if np.any(mask):
                out[mask] = E.evaluate_with_derivative(piece, xa[mask])[1]
        return float(out) if out.ndim == 0 else out

    def strict(self, x, side: str = "right"):
        """Like ``__call__`` but raises DomainError on non-finite values."""
        out = np.asarray(self(x, side))
        bad = ~np.isfinite(out)
        if np.any(bad):
            xa = np.broadcast_to(np.asarray(x, dtype=float), out.shape)
            raise DomainError("non-finite coefficient value", float(xa[bad].flat[0]))
        return float(out) if out.ndim == 0 else out

    def at_zero(self) -> float:
        """One-sided limit at 0+ (user override wins)."""
        if self.limit_left is not None:
            return float(self.limit_left)
        return _endpoint_value(self.pieces[0], 0.0)

    def at_one(self) -> float:
        if self.limit_right is not None:
            return float(self.limit_right)
        return _endpoint_value(self.pieces[-1], 1.0)

    def integral(self, a: float = 0.0, b: float = 1.0) -> tuple[float, float]:
        """``(value, error)`` of the integral over [a, b]; panels never straddle a breakpoint."""
        total = 0.0
        err = 0.0
        for lo, hi, piece in self.cells():
            lo, hi = max(lo, a), min(hi, b)
            if hi <= lo:
                continue
            v, e = integrate(_vec(piece), lo, hi)
            total += v
            err += e
        return total, err

    def __str__(self) -> str:
        parts = [f"[{lo:g},{hi:g}]: {p}" for lo, hi, p in self.cells()]
        return "; ".join(parts)


def _vec(piece):
    return lambda x: E.evaluate(piece, x)


def _endpoint_value(piece, at: float) -> float:
    v = float(E.evaluate(piece, at))
    if math.isfinite(v):
        return v
    sign = 1.0 if at == 0.0 else -1.0
    xs = at + sign * LADDER_START * 2.0 ** -np.arange(LADDER_HALVINGS + 1)
    lim = ladder_limit(E.evaluate(piece, xs))
    return lim.value


def _check_cover(intervals: Sequence[tuple]):
    if not intervals:
        raise ConfigError("no pieces given")
    if intervals[0][0] != 0.0 or intervals[-1][1] != 1.0:
        raise ConfigError(f"pieces must cover [0, 1], got [{intervals[0][0]}, {intervals[-1][1]}]")
    for (a1, b1), (a2, b2) in zip(intervals, intervals[1:]):
        if b1 != a2:
            raise ConfigError(f"pieces are not contiguous: {b1} != {a2}")
    for a, b in intervals:
        if not b > a:
            raise ConfigError(f"empty interval [{a}, {b}]")


# ---------------------------------------------------------------------------
# endpoint ladders


@dataclass(frozen=True)
class LadderLimit:
    """Limit estimate from a geometric ladder; ``lower``/``upper`` bracket it."""

    value: float
    lower: float
    upper: float
    converged: bool
    kind: str  # "converged" | "infinite" | "oscillating"

    @property
    def error(self) -> float:
        if self.kind == "infinite":
            return 0.0
        return max(self.upper - self.value, self.value - self.lower)


def _aitken(a: float, b: float, c: float) -> float:
    d1 = b - a
    d2 = c - b
    denom = d2 - d1
    if denom == 0.0 or not math.isfinite(denom):
        return c
    r = d2 / d1 if d1 != 0.0 else math.inf
    # only accelerate genuinely geometric tails
    if not 0.0 < r < 1.0:
        return c
    return c - d2 * d2 / denom


def ladder_limit(values: Sequence[float], rtol: float = LADDER_RTOL) -> LadderLimit:
    """Estimate the limit of a sequence sampled on a halving ladder.

    Aitken extrapolants of successive triples are compared: agreement of the
    last three within ``rtol`` means convergence.  A steadily growing tail
    (ratios >= 1.01 over the last six values) is reported as +inf, a steadily
    falling one as -inf.  Anything else yields the [min, max] of the tail.
    """
    v = np.asarray(values, dtype=float)
    if np.any(np.isnan(v)):
        raise DomainError("non-finite value on the endpoint ladder")
    if np.isposinf(v[-1]) or np.isneginf(v[-1]):
        s = float(v[-1])
        return LadderLimit(s, s, s, False, "infinite")
    ext = [_aitken(v[k - 2], v[k - 1], v[k]) for k in range(2, len(v))]
    tail = np.array(ext[-3:])
    scale = max(1.0, float(np.max(np.abs(tail))))
    if np.ptp(tail) <= rtol * scale:
        val = float(tail[-1])
        spread = float(np.ptp(tail))
        return LadderLimit(val, val - spread, val + spread, True, "converged")
    last = v[-6:]
    steps = np.diff(last)
    if np.all(steps > 0) and np.all(last[1:] >= 1.01 * np.abs(last[:-1])) and last[-1] > 0:
        return LadderLimit(math.inf, math.inf, math.inf, False, "infinite")
    if np.all(steps < 0) and np.all(-last[1:] >= 1.01 * np.abs(last[:-1])) and last[-1] < 0:
        return LadderLimit(-math.inf, -math.inf, -math.inf, False, "infinite")
    lo = float(min(np.min(v[-7:]), np.min(tail)))
    hi = float(max(np.max(v[-7:]), np.max(tail)))
    return LadderLimit(float(tail[-1]), lo, hi, False, "oscillating")


def zero_ladder() -> np.ndarray:
    return LADDER_START * 2.0 ** -np.arange(LADDER_HALVINGS + 1)


# ---------------------------------------------------------------------------
# integral averages


def integral_average(phi: PiecewiseFn, xi: float) -> float:
    """(1/xi) * integral of ``phi`` over (0, xi)."""
    if not 0.0 < xi <= 1.0:
        raise ValueError(f"xi must lie in (0, 1], got {xi!r}")
    return phi.integral(0.0, xi)[0] / xi


@dataclass(frozen=True)
class Extremum:
    value: float
    at: float  # 0.0 means the 0+ limit
    error: float
    at_zero: float
    at_one: float


class AverageScan:
    """Cumulative integrals of several PiecewiseFns on one breakpoint-aware grid.

    ``extremum(weights, kind)`` gives sup/inf over (0, 1] of the average of
    ``sum_i weights[i] * fns[i]``, including the 0+ limit.
    """

    def __init__(self, fns: Sequence[PiecewiseFn], points_per_cell: int = SCAN_POINTS):
        self.fns = list(fns)
        nodes = sorted({0.0, 1.0}.union(*(f.breakpoints for f in self.fns)))
        grid = [np.linspace(a, b, points_per_cell + 1) for a, b in zip(nodes, nodes[1:])]
        ladder = zero_ladder()
        ladder = ladder[ladder < nodes[1]]
        grid = np.unique(np.concatenate(grid + [ladder]))
        self.grid = grid[grid > 0.0]
        self.nodes = np.array(nodes)
        self.ladder = ladder  # decreasing toward 0
        n = len(self.fns)
        self.cum = np.zeros((n, self.grid.size))
        self.cum_err = np.zeros((n, self.grid.size))
        lo = self.grid[:-1]
        hi = self.grid[1:]
        for i, fn in enumerate(self.fns):
            first, e0 = _integrate_fn(fn, 0.0, self.grid[0])
            seg, seg_err = gauss_segments(fn, lo, hi)
            # the last segment may touch an integrable singularity at 1
            tail, tail_err = _integrate_fn(fn, lo[-1], hi[-1])
            seg[-1], seg_err[-1] = tail, tail_err
            self.cum[i] = np.concatenate([[first], first + np.cumsum(seg)])
            self.cum_err[i] = np.concatenate([[e0], e0 + np.cumsum(seg_err)])
        if not np.all(np.isfinite(self.cum)):
            bad = self.grid[np.argmax(~np.all(np.isfinite(self.cum), axis=0))]
            raise QuadratureError(f"average is not finite at xi={bad!r}")

    def averages(self, weights: Sequence[float]) -> np.ndarray:
        w = np.asarray(weights, dtype=float)
        return (w @ self.cum) / self.grid

    def errors(self, weights: Sequence[float]) -> np.ndarray:
        w = np.abs(np.asarray(weights, dtype=float))
        return (w @ self.cum_err) / self.grid

    def average_at(self, weights: Sequence[float], xi: float) -> float:
        j = int(np.searchsorted(self.grid, xi, side="right")) - 1
        total = 0.0
        for w, fn, cum in zip(weights, self.fns, self.cum):
            if w == 0.0:
                continue
            if j < 0:
                base, start = 0.0, 0.0
            else:
                base, start = cum[j], self.grid[j]
            extra = 0.0
            if xi > start:
                extra = float(gauss_segments(fn, np.array([start]), np.array([xi]))[0][0])
            total += w * (base + extra)
        return total / xi

    def zero_limit(self, weights: Sequence[float]) -> LadderLimit:
        avg = self.averages(weights)
        idx = np.searchsorted(self.grid, self.ladder)
        return ladder_limit(avg[idx])

    def extremum(self, weights: Sequence[float], kind: str = "sup") -> Extremum:
        sign = 1.0 if kind == "sup" else -1.0
        avg = self.averages(weights)
        err = self.errors(weights)
        i = int(np.argmax(sign * avg))
        best, at, best_err = float(avg[i]), float(self.grid[i]), float(err[i])
        # golden-section refinement on the two neighbouring segments (each lies in one cell)
        for a, b in ((self.grid[max(i - 1, 0)], at), (at, self.grid[min(i + 1, self.grid.size - 1)])):
            if b <= a:
                continue
            res = minimize_scalar(lambda t: -sign * self.average_at(weights, t), bounds=(a, b),
                                  method="bounded", options={"xatol": 1e-12 * max(1.0, b)})
            cand = -sign * float(res.fun)
            if sign * cand > sign * best:
                best, at = cand, float(res.x)
        lim = self.zero_limit(weights)
        edge = lim.upper if kind == "sup" else lim.lower
        if sign * edge >= sign * best:
            best, at = (lim.value if lim.kind != "oscillating" else edge), 0.0
            best_err = max(float(err[0]), lim.error)
        scale = max(1.0, abs(best)) if math.isfinite(best) else 1.0
        return Extremum(best, at, max(best_err, 1e-12 * scale), lim.value, float(avg[-1]))


def _integrate_fn(fn: PiecewiseFn, a: float, b: float):
    try:
        return fn.integral(a, b)
    except QuadratureError:
        return math.inf, math.inf


def inf_sup_on(fn: PiecewiseFn, a: float, b: float, n: int = 2049) -> tuple[float, float]:
    """Infimum and supremum of ``fn`` over [a, b], one-sided values at breakpoints included."""
    xs = np.linspace(a, b, n)
    inner = [t for t in fn.breakpoints if a <= t <= b]
    vals = np.concatenate([fn(xs), fn(np.array(inner), "left"), fn(np.array(inner), "right")])
    pts = np.concatenate([xs, inner, inner])
    out = []
    for sign in (1.0, -1.0):
        i = int(np.argmin(sign * vals))
        best = float(vals[i])
        t = pts[i]
        lo, hi = max(a, t - (b - a) / (n - 1)), min(b, t + (b - a) / (n - 1))
        for lo2, hi2 in ((lo, t), (t, hi)):
            if any(lo2 < q < hi2 for q in inner) or hi2 <= lo2:
                continue
            res = minimize_scalar(lambda z: sign * fn(z), bounds=(lo2, hi2), method="bounded",
                                  options={"xatol": 1e-12})
            if sign * float(res.fun) < sign * best:
                best = float(fn(res.x))
        out.append(best)
    return out[0], out[1]


# ---------------------------------------------------------------------------
# model


@dataclass(frozen=True)
class Diagnostic:
    hypothesis: str
    passed: bool
    message: str
    witness: float | None = None


@dataclass(frozen=True, eq=False)
class Model:
    f: PiecewiseFn
    g: PiecewiseFn
    h: PiecewiseFn
    d: PiecewiseFn
    p: float
    limits: dict = field(default_factory=dict, compare=False)
    reference: dict = field(default_factory=dict, compare=False)
    source_hash: str = ""
    name: str = ""

    def __post_init__(self):
        if not self.p > 1.0:
            raise ConfigError(f"p must exceed 1, got {self.p!r}")

    @property
    def p_conj(self) -> float:
        return self.p / (self.p - 1.0)

    @property
    def inv_pm1(self) -> float:
        return 1.0 / (self.p - 1.0)

    @cached_property
    def kappa(self) -> PiecewiseFn:
        e = self.inv_pm1
        dval = self.d.constant_value()
        if dval == 1.0:
            return self.h
        if dval is not None:
            return self.h.scale(dval ** e)
        if self.p == 2.0:
            return self.d.combine(self.h, E.mul)
        return self.d.combine(self.h, lambda dd, hh: E.mul(E.power(dd, E.const(e)), hh))

    @cached_property
    def psi(self) -> PiecewiseFn:
        """kappa(x) / x^(1/(p-1))."""
        if self.p == 2.0:
            return self.kappa.map(lambda k: E.div(k, E.X))
        e = E.const(self.inv_pm1)
        return self.kappa.map(lambda k: E.div(k, E.power(E.X, e)))

    def drift(self, c: float) -> PiecewiseFn:
        """c*g - f."""
        return self.g.scale(c) - self.f

    @cached_property
    def theta(self) -> tuple:
        pts = set()
        for fn in (self.f, self.g, self.h, self.d):
            pts.update(fn.discontinuities)
        return tuple(sorted(pts))

    @property
    def theta_star(self) -> tuple:
        return (0.0,) + self.theta + (1.0,)

    @cached_property
    def nodes(self) -> tuple:
        """Every piece boundary of every coefficient (superset of theta)."""
        pts = set()
        for fn in (self.f, self.g, self.h, self.d):
            pts.update(fn.breakpoints)
        return tuple(sorted(pts))

    def with_coefficients(self, **kw) -> "Model":
        args = dict(f=self.f, g=self.g, h=self.h, d=self.d, p=self.p, limits=self.limits,
                    reference=self.reference, source_hash=self.source_hash, name=self.name)
        args.update(kw)
        return Model(**args)

    @cached_property
    def stats(self) -> "AverageStats":
        return average_stats(self)

    @cached_property
    def fg_scan(self) -> "AverageScan":
        """Average scan of (f, g); averages of c*g - f use weights (-1, c)."""
        return AverageScan([self.f, self.g])

    def dual(self) -> "Model":
        """Sign-flipped model (g -> -g); speeds flip sign with it."""
        lim = dict(self.limits)
        if "g0" in lim:
            lim["g0"] = -lim["g0"]
        return self.with_coefficients(g=self.g.scale(-1.0), limits=lim)


def fisher_like(h="x*(1-x)", d="1", f="0", g="1", p=2.0, **kw) -> Model:
    """Convenience constructor for single-piece models."""
    return Model(PiecewiseFn.from_expr(f), PiecewiseFn.from_expr(g), PiecewiseFn.from_expr(h),
                 PiecewiseFn.from_expr(d), float(p), **kw)


# ---------------------------------------------------------------------------
# hypothesis checks


def _interior_samples(a: float, b: float, n: int = 257, pad: float = 1e-9) -> np.ndarray:
    return np.linspace(a + pad, b - pad, n)


def _open_samples(n: int = 2049) -> np.ndarray:
    ladder = 2.0 ** -np.arange(4, 30)
    return np.unique(np.concatenate([ladder, np.linspace(0.0, 1.0, n)[1:-1], 1.0 - ladder]))


def validate(m: Model) -> list[Diagnostic]:
    """Run every hypothesis check; never raises for a failed hypothesis."""
    out: list[Diagnostic] = []
    xs = _open_samples()

    # bounded, piecewise continuous f, g, h; d finite inside
    problem = None
    for name, fn in (("f", m.f), ("g", m.g), ("h", m.h)):
        for lo, hi, piece in fn.cells():
            vals = E.evaluate(piece, _interior_samples(lo, hi))
            if not np.all(np.isfinite(vals)):
                bad = _interior_samples(lo, hi)[~np.isfinite(vals)][0]
                problem = problem or (f"{name} is not finite on [{lo:g}, {hi:g}]", float(bad))
            for end, which in ((lo, fn.at_zero if lo == 0.0 else None),
                               (hi, fn.at_one if hi == 1.0 else None)):
                v = which() if which else float(E.evaluate(piece, end))
                if not math.isfinite(v):
                    problem = problem or (f"{name} is unbounded near {end:g}", end)
    for lo, hi, piece in m.d.cells():
        vals = E.evaluate(piece, xs[(xs > lo) & (xs < hi)])
        if np.any(np.isnan(vals)):
            bad = xs[(xs > lo) & (xs < hi)][np.isnan(vals)][0]
            problem = problem or ("d is not defined", float(bad))
    out.append(_diag("bounded", problem))

    # d > 0 and finite on compacts
    dv = m.d(xs)
    bad = ~(np.isfinite(dv) & (dv > 0.0))
    out.append(_diag("diffusivity", ("d is not positive and finite", float(xs[bad][0]))
                     if np.any(bad) else None))

    # h vanishes at both ends, positive inside
    problem = None
    hv = m.h(xs)
    scale = max(1.0, float(np.nanmax(np.abs(hv))))
    h0, h1 = m.h.at_zero(), m.h.at_one()
    if not abs(h0) <= 1e-9 * scale:
        problem = (f"h(0+) = {h0!r} is not 0", 0.0)
    elif not abs(h1) <= 1e-9 * scale:
        problem = (f"h(1-) = {h1!r} is not 0", 1.0)
    elif np.any(~(hv > 0.0)):
        problem = ("h is not positive", float(xs[~(hv > 0.0)][0]))
    out.append(_diag("reaction", problem))

    # kappa integrable
    problem = None
    try:
        v, _ = m.kappa.integral(0.0, 1.0)
        if not math.isfinite(v):
            problem = ("integral of kappa is not finite", None)
    except (QuadratureError, DomainError) as exc:
        problem = (f"integral of kappa diverges: {exc}", None)
    out.append(_diag("kappa_integrable", problem))
    return out


def _diag(name: str, problem) -> Diagnostic:
    if problem is None:
        return Diagnostic(name, True, HYPOTHESES[name])
    msg, witness = problem
    return Diagnostic(name, False, msg, witness)


def check(m: Model) -> list[Diagnostic]:
    """``validate`` then raise HypothesisError on the first failure."""
    diags = validate(m)
    for dg in diags:
        if not dg.passed:
            raise HypothesisError(dg.hypothesis, dg.message, dg.witness)
    return diags


# ---------------------------------------------------------------------------
# config parsing

_COEFFS = ("f", "g", "h", "d")
_LIMIT_KEYS = ("ell_p", "L_p", "f0", "g0")


def _locate_expr(text: str, occurrence: int) -> tuple[int | None, int]:
    """1-based (line, column of the string body) of the n-th ``expr = "..."``."""
    pat = re.compile(r"""\bexpr\s*=\s*(["'])""")
    for k, m in enumerate(pat.finditer(text)):
        if k == occurrence:
            line = text.count("\n", 0, m.start()) + 1
            col = m.end() - (text.rfind("\n", 0, m.end()) + 1) + 1
            return line, col
    return None, 1


def parse_model(text: str, name: str = "", check_hypotheses: bool = True) -> Model:
    """Parse a TOML model config and (by default) enforce every hypothesis."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        col = getattr(exc, "colno", None)
        msg = getattr(exc, "msg", str(exc))
        if line is None:
            m = re.search(r"line (\d+), column (\d+)", str(exc))
            if m:
                line, col = int(m.group(1)), int(m.group(2))
        raise ExprSyntaxError(f"config syntax error: {msg}", line, col) from None
    unknown = set(data) - set(_COEFFS) - {"p", "limits", "reference", "name"}
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    if "p" not in data:
        raise ConfigError("missing key 'p'")
    try:
        p = float(data["p"])
    except (TypeError, ValueError):
        raise ConfigError(f"p must be a number, got {data['p']!r}") from None
    limits = dict(data.get("limits", {}))
    bad = set(limits) - set(_LIMIT_KEYS)
    if bad:
        raise ConfigError(f"unknown keys in [limits]: {sorted(bad)}")
    limits = {k: float(v) for k, v in limits.items()}

    # expressions are numbered in file order, which is how _locate_expr finds them
    order = sorted(_COEFFS, key=lambda c: _first_pos(text, c))
    fns = {}
    counter = 0
    for cname in order:
        if cname not in data:
            raise ConfigError(f"missing coefficient '{cname}'")
        entries = data[cname]
        if isinstance(entries, dict):
            entries = [entries]
        if not isinstance(entries, list) or not entries:
            raise ConfigError(f"'{cname}' must be a list of {{interval, expr}} tables")
        items = []
        for entry in entries:
            if not isinstance(entry, dict) or "interval" not in entry or "expr" not in entry:
                raise ConfigError(f"each '{cname}' entry needs 'interval' and 'expr'")
            iv = entry["interval"]
            if not (isinstance(iv, list) and len(iv) == 2):
                raise ConfigError(f"'{cname}' interval must be [a, b], got {iv!r}")
            line, col0 = _locate_expr(text, counter)
            counter += 1
            try:
                node = E.parse(str(entry["expr"]), line)
            except ExprSyntaxError as exc:
                raise ExprSyntaxError(str(exc).split(" (")[0], line,
                                      (exc.column or 1) + col0 - 1) from None
            items.append((float(iv[0]), float(iv[1]), node))
        fns[cname] = PiecewiseFn.from_strings(items)
    f, g = fns["f"], fns["g"]
    if "f0" in limits:
        f = PiecewiseFn(f.breakpoints, f.pieces, limits["f0"], f.limit_right)
    if "g0" in limits:
        g = PiecewiseFn(g.breakpoints, g.pieces, limits["g0"], g.limit_right)
    model = Model(f, g, fns["h"], fns["d"], p, limits=limits,
                  reference=dict(data.get("reference", {})),
                  source_hash=hashlib.sha256(text.encode()).hexdigest(),
                  name=name or str(data.get("name", "")))
    for cname, fn in (("f", f), ("g", g), ("h", fns["h"]), ("d", fns["d"])):
        for lo, hi, piece in fn.cells():
            xs = _interior_samples(lo, hi, 65)
            vals = E.evaluate(piece, xs)
            if np.any(np.isnan(vals)):
                raise DomainError(f"coefficient {cname} is not defined on [{lo:g}, {hi:g}]",
                                  float(xs[np.isnan(vals)][0]))
    if check_hypotheses:
        check(model)
    return model


def _first_pos(text: str, cname: str) -> int:
    m = re.search(rf"^\s*(\[\[\s*{cname}\s*\]\]|{cname}\s*=)", text, re.M)
    return m.start() if m else len(text)


def load_model(path, check_hypotheses: bool = True) -> Model:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    stem = str(path).rsplit("/", 1)[-1].rsplit(".", 1)[0]
    return parse_model(text, name=stem, check_hypotheses=check_hypotheses)


# ---------------------------------------------------------------------------
# average statistics


@dataclass(frozen=True)
class AverageStats:
    F0: float
    G0: float
    K0: float
    ell_p: float
    L_p: float
    f0: float
    g0: float
    errors: dict
    endpoints: dict
    argext: dict
    warnings: tuple = ()

    def to_dict(self) -> dict:
        return {
            "F0": self.F0, "G0": self.G0, "K0": self.K0, "ell_p": self.ell_p, "L_p": self.L_p,
            "f0": self.f0, "g0": self.g0, "errors": dict(self.errors),
            "endpoints": {k: dict(v) for k, v in self.endpoints.items()},
            "argext": dict(self.argext), "warnings": list(self.warnings),
        }


def slope_ratio_limit(m: Model) -> LadderLimit:
    """Ladder estimate of kappa(xi)^(p-1)/xi as xi -> 0+."""
    xs = zero_ladder()
    k = m.kappa(xs)
    with np.errstate(all="ignore"):
        vals = np.power(k, m.p - 1.0) / xs
    return ladder_limit(vals)


def average_stats(m: Model, points_per_cell: int = SCAN_POINTS) -> AverageStats:
    warnings = []
    scan = m.fg_scan if points_per_cell == SCAN_POINTS else AverageScan([m.f, m.g], points_per_cell)
    F = scan.extremum([1.0, 0.0], "sup")
    G = scan.extremum([0.0, 1.0], "inf")
    try:
        kscan = AverageScan([m.psi], points_per_cell)
        K = kscan.extremum([1.0], "sup")
    except QuadratureError:
        K = Extremum(math.inf, 0.0, 0.0, math.inf, math.inf)
    if math.isnan(K.value):
        K = Extremum(math.inf, 0.0, 0.0, math.inf, math.inf)

    lim = slope_ratio_limit(m)
    ell, L = max(lim.lower, 0.0), max(lim.upper, 0.0)
    if lim.kind == "converged":
        ell = L = max(lim.value, 0.0)
    elif lim.kind == "oscillating":
        warnings.append(f"kappa^(p-1)/xi did not settle near 0: interval [{ell:.6g}, {L:.6g}]")
    for key, num in (("ell_p", ell), ("L_p", L)):
        if key in m.limits:
            given = m.limits[key]
            if _disagree(given, num):
                warnings.append(f"{key} override {given!r} differs from numeric estimate {num!r}")
    if "ell_p" in m.limits:
        ell = m.limits["ell_p"]
        if "L_p" not in m.limits and lim.kind == "converged":
            L = ell
    if "L_p" in m.limits:
        L = m.limits["L_p"]
    L = max(L, ell)

    f0 = m.f.at_zero()
    g0 = m.g.at_zero()
    return AverageStats(
        F0=F.value, G0=G.value, K0=K.value, ell_p=ell, L_p=L, f0=f0, g0=g0,
        errors={"F0": F.error, "G0": G.error, "K0": K.error, "ell_p": lim.error},
        endpoints={"F0": {"at_zero": F.at_zero, "at_one": F.at_one},
                   "G0": {"at_zero": G.at_zero, "at_one": G.at_one},
                   "K0": {"at_zero": K.at_zero, "at_one": K.at_one}},
        argext={"F0": F.at, "G0": G.at, "K0": K.at},
        warnings=tuple(warnings),
    )


def _disagree(a: float, b: float) -> bool:
    if math.isinf(a) or math.isinf(b):
        return a != b
    return abs(a - b) > 1e-3 * max(1.0, abs(a))
