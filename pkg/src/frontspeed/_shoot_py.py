"""Pure-Python backward shooting kernel (reference and fallback).

Mirrors ``_shoot.pyx`` statement for statement; keep the two in sync.
"""

from __future__ import annotations

import math

import numpy as np

# Dormand-Prince 5(4)
_C = (0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0)
_A = (
    (),
    (1.0 / 5,),
    (3.0 / 40, 9.0 / 40),
    (44.0 / 45, -56.0 / 15, 32.0 / 9),
    (19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729),
    (9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656),
    (35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84),
)
_B = _A[6] + (0.0,)
_E = (71.0 / 57600, 0.0, -71.0 / 16695, 71.0 / 1920, -17253.0 / 339200, 22.0 / 525, -1.0 / 40)

# Rodas3 (stiffly accurate, L-stable, order 3 with embedded order 2), used for
# steps where h*J < -STIFF; scalar form: (1/(h*gamma) - J) K_i = rhs_i
STIFF = 3.0
_RG = 0.5

OK, CROSSING, UNDERFLOW, NONFINITE, MAX_STEPS, BAD_SEED = range(6)


def _midpoint_seed(u0, w, H, K, pc, inv_p):
    """One implicit-midpoint step of length ``w`` toward smaller xi, solved by bisection."""

    def G(u1):
        m = 0.5 * (u0 + u1)
        return u1 - u0 + w * pc * (H * math.pow(m, inv_p) - K)

    lo = u0
    if G(lo) >= 0.0:
        return u0
    span = w * pc * K
    if span <= 0.0:
        span = max(u0, 1e-300)
    hi = u0 + span
    for _ in range(200):
        if G(hi) >= 0.0:
            break
        span *= 2.0
        hi = u0 + span
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if G(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4e-16 * hi:
            break
    return 0.5 * (lo + hi)


def shoot(nodes, funcs, c, p, rtol, atol, seed, seed_steps, switch, max_steps, max_step):
    pc = p / (p - 1.0)
    inv_p = 1.0 / p
    e = 1.0 / (p - 1.0)
    y_of_u = 1.0 / pc
    ncell = len(nodes) - 1
    k = ncell - 1
    x = float(nodes[ncell])
    seed = min(seed, 0.5 * (x - float(nodes[k])))
    gfun, ffun, kfun = funcs[k]

    xs = []
    ys = []
    errs = []

    # seed from u(1) = 0
    u = 0.0
    w = seed / seed_steps
    x_top = x
    for i in range(seed_steps):
        xm = x_top - (i + 0.5) * w
        try:
            H = c * gfun(xm) - ffun(xm)
            K = kfun(xm)
        except (ValueError, ZeroDivisionError, OverflowError):
            return _pack(xs, ys, errs, NONFINITE, xm, 0)
        if not (math.isfinite(H) and math.isfinite(K)):
            return _pack(xs, ys, errs, NONFINITE, xm, 0)
        u = _midpoint_seed(u, w, H, K, pc, inv_p)
    x = x_top - seed
    if not u > 0.0 or not math.isfinite(u):
        return _pack(xs, ys, errs, BAD_SEED, x, 0)
    y = math.pow(u, y_of_u)
    xs.append(x)
    ys.append(y)
    errs.append(0.0)

    mode_u = y <= switch
    s = u if mode_u else y
    h = -seed
    nsteps = 0
    kst = [0.0] * 7
    ymax = y

    def rhs(xv, sv):
        gv = gfun(xv)
        fv = ffun(xv)
        kv = kfun(xv)
        Hv = c * gv - fv
        if mode_u:
            if sv < 0.0:
                return math.nan
            return pc * (Hv * math.pow(sv, inv_p) - kv)
        if sv <= 0.0:
            return math.nan
        return Hv - kv * math.pow(sv, -e)

    def jac(xv, sv):
        Hv = c * gfun(xv) - ffun(xv)
        kv = kfun(xv)
        if mode_u:
            return pc * Hv * inv_p * math.pow(sv, inv_p - 1.0) if sv > 0.0 else math.inf
        return e * kv * math.pow(sv, -e - 1.0)

    def safe(fn, xv, sv):
        try:
            return fn(xv, sv)
        except (ValueError, ZeroDivisionError, OverflowError):
            return math.nan

    while k >= 0:
        a = float(nodes[k])
        gfun, ffun, kfun = funcs[k]
        fsal = False
        while x > a:
            if nsteps >= max_steps:
                return _pack(xs, ys, errs, MAX_STEPS, x, nsteps)
            # long steps would leave the cubic Hermite interpolant under-resolved
            if h < -max_step:
                h = -max_step
            if x + h <= a:
                h = a - x
            elif x + 1.5 * h < a:
                # avoid leaving a sliver in front of the node
                h = 0.5 * (a - x)
            if not fsal:
                kst[0] = safe(rhs, x, s)
                if not math.isfinite(kst[0]):
                    return _pack(xs, ys, errs, NONFINITE, x, nsteps)
            jv = safe(jac, x, s)
            stiff = h * jv < -STIFF
            ok = True
            if stiff:
                # Rosenbrock step; the xi-derivative comes from a one-sided difference
                dx = 1e-7 * h
                ft = (safe(rhs, x + dx, s) - kst[0]) / dx
                den = 1.0 / (h * _RG) - jv
                k1 = (kst[0] + 0.5 * h * ft) / den
                k2 = (kst[0] + 4.0 * k1 / h + 1.5 * h * ft) / den
                f3 = safe(rhs, x + h, s + 2.0 * k1)
                k3 = (f3 + (k1 - k2) / h) / den
                f4 = safe(rhs, x + h, s + 2.0 * k1 + k3)
                k4 = (f4 + (k1 - k2 - 8.0 / 3.0 * k3) / h) / den
                s_new = s + 2.0 * k1 + k3 + k4
                err = k4
                ok = math.isfinite(s_new) and math.isfinite(ft) and s_new > 0.0
                expo = -1.0 / 3.0
            else:
                for j in range(1, 7):
                    row = _A[j]
                    sj = s
                    for q in range(j):
                        sj += h * row[q] * kst[q]
                    kst[j] = safe(rhs, x + _C[j] * h, sj)
                    if not math.isfinite(kst[j]):
                        ok = False
                        break
                if ok:
                    s_new = s
                    err = 0.0
                    for q in range(7):
                        s_new += h * _B[q] * kst[q]
                        err += h * _E[q] * kst[q]
                    ok = s_new > 0.0
                expo = -0.2
            if ok:
                # absolute tolerance scaled by xi, since 0 <= y <= M xi; below the
                # switch level it turns relative so stiff steps cannot overshoot y = 0
                big = max(abs(s), abs(s_new))
                if mode_u:
                    tol = math.pow(atol * x, pc) + rtol * big
                else:
                    tol = atol * x * min(1.0, big / switch) + rtol * big
            if not ok:
                fsal = True  # k1 belongs to the unchanged (x, s)
                h *= 0.25
                if abs(h) < 1e-12 * x:
                    status = CROSSING if (y < 1e-8 * ymax) else UNDERFLOW
                    return _pack(xs, ys, errs, status, x, nsteps)
                continue
            nsteps += 1
            errn = abs(err) / tol
            if errn <= 1.0:
                x = a if (x + h <= a) else x + h
                s = s_new
                if mode_u:
                    y = math.pow(s, y_of_u)
                    errs.append(abs(err) / (pc * math.pow(y, pc - 1.0)) if y > 0.0 else 0.0)
                else:
                    y = s
                    errs.append(abs(err))
                xs.append(x)
                ys.append(y)
                if y > ymax:
                    ymax = y
                if stiff:
                    fsal = False
                else:
                    kst[0] = kst[6]
                    fsal = True
                if mode_u and y > switch:
                    mode_u = False
                    s = y
                    fsal = False
                fac = 5.0 if errn == 0.0 else min(5.0, max(0.2, 0.9 * errn ** expo))
                h *= fac
            else:
                fsal = True  # k1 still valid at the unchanged x
                h *= max(0.2, 0.9 * errn ** expo)
                if abs(h) < 1e-12 * x:
                    return _pack(xs, ys, errs, UNDERFLOW, x, nsteps)
        k -= 1
    return _pack(xs, ys, errs, OK, x, nsteps)


def _pack(xs, ys, errs, status, status_x, nsteps):
    return (np.asarray(xs, dtype=float), np.asarray(ys, dtype=float),
            np.asarray(errs, dtype=float), int(status), float(status_x), int(nsteps))
