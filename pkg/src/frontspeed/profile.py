"""Wave profiles v(z) rebuilt from y(xi) by inverting w(xi) = -int_{1/2}^{xi} (d/y)^(1/(p-1)).

The anchor w(1/2) = 0 fixes the shift, so v(0) = 1/2.  The ends a = w(1-) and
b = w(0+) are classified finite or infinite from geometric ladders toward 1
and 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .bvp_solver import YSolution
from .coefficients import Model, ladder_limit
from .errors import NumericalError
from .quadrature import GL_NODES, GL_WEIGHTS

LADDER_START = 1e-2
LADDER_REFINEMENTS = 12
FINITE_TOL = 1e-8
GRID_POINTS = 2048
EDGE_CLIP = 1e-3
SUBDIVIDE = 4

FINITE = "finite"
INFINITE = "infinite"
UNKNOWN = "unknown"


@dataclass(frozen=True)
class Endpoint:
    value: float
    kind: str
    increments: tuple


@dataclass(frozen=True, eq=False)
class WaveProfile:
    z: np.ndarray
    v: np.ndarray
    phi: np.ndarray
    a_endpoint: float
    b_endpoint: float
    a_kind: str
    b_kind: str
    kink_points: tuple
    slope_at_b: float | None
    c: float

    @property
    def sharp_at_one(self) -> bool:
        return self.a_kind == FINITE

    @property
    def sharp_at_zero(self) -> bool:
        return self.b_kind == FINITE

    @property
    def samples(self):
        return np.column_stack([self.z, self.v, self.phi])

    def v_at(self, z):
        """v with the constant extensions beyond finite endpoints (nan off the known range)."""
        z = np.asarray(z, dtype=float)
        zz, vv = self.z, self.v
        if self.sharp_at_one:
            zz, vv = np.r_[self.a_endpoint, zz], np.r_[1.0, vv]
        if self.sharp_at_zero:
            zz, vv = np.r_[zz, self.b_endpoint], np.r_[vv, 0.0]
        out = PchipInterpolator(zz, vv, extrapolate=False)(z)
        if self.sharp_at_one:
            out = np.where(z <= self.a_endpoint, 1.0, out)
        if self.sharp_at_zero:
            out = np.where(z >= self.b_endpoint, 0.0, out)
        return out

    def metadata(self) -> dict:
        return {"a": self.a_endpoint, "b": self.b_endpoint, "a_kind": self.a_kind,
                "b_kind": self.b_kind, "sharp_at_zero": self.sharp_at_zero,
                "sharp_at_one": self.sharp_at_one, "kinks": list(self.kink_points),
                "slope_at_b": self.slope_at_b, "c": self.c, "samples": int(self.z.size)}


class _WMap:
    """Cumulative integral of (d/y)^(1/(p-1)) on a node set, with point evaluation."""

    def __init__(self, m: Model, sol: YSolution, extra=()):
        self.m = m
        self.sol = sol
        self.e = 1.0 / (m.p - 1.0)
        mesh = sol.mesh
        t = np.linspace(0.0, 1.0, SUBDIVIDE + 1)[:-1]
        fine = (mesh[:-1, None] + (mesh[1:] - mesh[:-1])[:, None] * t[None, :]).ravel()
        pts = np.concatenate([fine, mesh[-1:], np.asarray(extra, dtype=float), [0.5]])
        pts = pts[(pts >= mesh[0]) & (pts <= mesh[-1])]
        self.nodes = np.unique(pts)
        seg = self._segments(self.nodes[:-1], self.nodes[1:])
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        half = cum[int(np.searchsorted(self.nodes, 0.5))]
        self.w = -(cum - half)
        if not np.all(np.isfinite(self.w)):
            raise NumericalError("w(xi) is not finite on the solution mesh")

    def integrand(self, x):
        y = self.sol.interpolate(x)
        d = self.m.d(x)
        with np.errstate(all="ignore"):
            return np.power(d / y, self.e)

    def _segments(self, lo, hi):
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        x = mid[:, None] + half[:, None] * GL_NODES[None, :]
        q = self.integrand(x.ravel()).reshape(x.shape)
        return half * (q @ GL_WEIGHTS)

    def __call__(self, xi):
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        j = np.clip(np.searchsorted(self.nodes, xi, side="right") - 1, 0, self.nodes.size - 2)
        part = self._segments(self.nodes[j], xi)
        return self.w[j] - part


def _classify(values: np.ndarray) -> Endpoint:
    """values: w on a ladder approaching the endpoint."""
    inc = np.diff(values)
    lim = ladder_limit(values, rtol=FINITE_TOL)
    if lim.kind == "converged":
        return Endpoint(lim.value, FINITE, tuple(inc))
    tail = np.abs(inc[-4:])
    same_sign = np.all(np.sign(inc[-4:]) == np.sign(inc[-1]))
    if same_sign and np.all(tail[1:] >= 0.9 * tail[:-1]):
        return Endpoint(math.copysign(math.inf, inc[-1]), INFINITE, tuple(inc))
    return Endpoint(float(values[-1]), UNKNOWN, tuple(inc))


def reconstruct(m: Model, sol: YSolution, grid: int | np.ndarray = GRID_POINTS) -> WaveProfile:
    if sol is None or sol.y.size < 4:
        raise NumericalError("no admissible solution to reconstruct")
    if np.any(sol.y[1:-1] <= 0.0):
        raise NumericalError("y is not positive on the interior mesh")
    k = np.arange(LADDER_REFINEMENTS + 1)
    lad0 = LADDER_START * 2.0 ** -k
    lad0 = lad0[lad0 >= sol.mesh[0]]
    lad1 = 1.0 - LADDER_START * 2.0 ** -k
    lad1 = lad1[lad1 <= sol.mesh[-1]]
    kinks_xi = [t for t in m.d.discontinuities]
    W = _WMap(m, sol, extra=np.concatenate([lad0, lad1, kinks_xi]))

    b_end = _classify(W(lad0))
    a_end = _classify(W(lad1))
    a = a_end.value if a_end.kind == FINITE else (-math.inf if a_end.kind == INFINITE else math.nan)
    b = b_end.value if b_end.kind == FINITE else (math.inf if b_end.kind == INFINITE else math.nan)

    xi = W.nodes
    w = W.w
    if not np.all(np.diff(w) < 0.0):
        bad = xi[int(np.argmax(np.diff(w) >= 0.0))]
        raise NumericalError("w is not strictly decreasing", float(bad))
    inv = PchipInterpolator(w[::-1], xi[::-1], extrapolate=False)

    if np.ndim(grid) == 0:
        zlo, zhi = float(w[-1]), float(w[0])
        if a_end.kind == FINITE:
            zlo = max(zlo, a + EDGE_CLIP)
        if b_end.kind == FINITE:
            zhi = min(zhi, b - EDGE_CLIP)
        z = np.linspace(zlo, zhi, int(grid))
    else:
        z = np.asarray(grid, dtype=float)
        z = z[(z >= w[-1]) & (z <= w[0])]
    v = inv(z)
    if np.any(~np.isfinite(v)) or np.any(np.diff(v) >= 0.0):
        raise NumericalError("profile inversion is not strictly monotone")
    phi = -sol.interpolate(v)

    kinks = [float(W(t)[0]) for t in kinks_xi]
    if a_end.kind == FINITE:
        kinks.insert(0, a)
    if b_end.kind == FINITE:
        kinks.append(b)

    slope_b = None
    if b_end.kind == FINITE:
        x0 = lad0[-3:]
        with np.errstate(all="ignore"):
            sl = -np.power(sol.interpolate(x0) / m.d(x0), 1.0 / (m.p - 1.0))
        slope_b = float(ladder_limit(sl).value) if np.all(np.isfinite(sl)) else None

    return WaveProfile(z, v, phi, a, b, a_end.kind, b_end.kind, tuple(sorted(kinks)),
                       slope_b, sol.c)


def _gauss(fn, lo, hi):
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    x = mid[:, None] + half[:, None] * GL_NODES[None, :]
    return half * (fn(x.ravel()).reshape(x.shape) @ GL_WEIGHTS)


def _piecewise_gauss(fn, pts, lo, hi):
    """Sum of Gauss rules over [lo, hi] split at the points ``pts``."""
    a = np.minimum(lo, hi)
    b = np.maximum(lo, hi)
    sign = np.where(hi >= lo, 1.0, -1.0)
    total = np.zeros_like(a)
    edges = [a] + [np.clip(t, a, b) for t in pts] + [b]
    for e0, e1 in zip(edges, edges[1:]):
        total += _gauss(fn, e0, e1)
    return sign * total


def residual_integral_form(m: Model, c: float, prof: WaveProfile) -> float:
    """sup over adjacent samples of |dPhi + int_{v1}^{v2} (c g - f) + int_{z1}^{z2} h(v)|."""
    z, v, phi = prof.z, prof.v, prof.phi
    if z.size < 2:
        return 0.0
    drift = m.drift(c)
    dv = _piecewise_gauss(lambda x: drift(x), drift.breakpoints, v[:-1], v[1:])
    vz = PchipInterpolator(z, v)
    # split z-cells where v(z) crosses a jump of h
    zs = [float(np.interp(-t, -v, z)) for t in m.h.breakpoints]
    hz = _piecewise_gauss(lambda t: m.h(np.clip(vz(t), 0.0, 1.0)), zs, z[:-1], z[1:])
    res = (phi[1:] - phi[:-1]) + dv + hz
    return float(np.max(np.abs(res)))


__all__ = ["WaveProfile", "reconstruct", "residual_integral_form"]
