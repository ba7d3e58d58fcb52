# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled backward shooting kernel; statement-for-statement twin of _shoot_py.py.

Coefficients arrive as postfix programs (see expr.to_program), three per cell
in the order g, f, kappa.
"""

import numpy as np
from libc.math cimport exp, log, sqrt, fabs, pow, isfinite, isnan, NAN, INFINITY
from libc.stdlib cimport malloc, realloc, free

cdef enum:
    MAX_STACK = 64

cdef enum:
    OP_CONST, OP_X, OP_ADD, OP_SUB, OP_MUL, OP_DIV, OP_POW, OP_NEG
    OP_EXP, OP_LOG, OP_SQRT, OP_ABS, OP_MIN, OP_MAX

cdef enum:
    OK, CROSSING, UNDERFLOW, NONFINITE, MAX_STEPS, BAD_SEED

cdef double STIFF = 3.0
cdef double RG = 0.5

cdef double[7] C_ = [0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0]
cdef double[7][7] A_
cdef double[7] B_ = [35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84, 0.0]
cdef double[7] E_ = [71.0 / 57600, 0.0, -71.0 / 16695, 71.0 / 1920, -17253.0 / 339200,
                     22.0 / 525, -1.0 / 40]


cdef void _init_tableau():
    cdef int i, j
    for i in range(7):
        for j in range(7):
            A_[i][j] = 0.0
    A_[1][0] = 1.0 / 5
    A_[2][0] = 3.0 / 40
    A_[2][1] = 9.0 / 40
    A_[3][0] = 44.0 / 45
    A_[3][1] = -56.0 / 15
    A_[3][2] = 32.0 / 9
    A_[4][0] = 19372.0 / 6561
    A_[4][1] = -25360.0 / 2187
    A_[4][2] = 64448.0 / 6561
    A_[4][3] = -212.0 / 729
    A_[5][0] = 9017.0 / 3168
    A_[5][1] = -355.0 / 33
    A_[5][2] = 46732.0 / 5247
    A_[5][3] = 49.0 / 176
    A_[5][4] = -5103.0 / 18656
    for j in range(7):
        A_[6][j] = B_[j]


_init_tableau()


cdef inline double _nan_min(double a, double b) nogil:
    if isnan(a) or isnan(b):
        return NAN
    return a if a < b else b


cdef inline double _nan_max(double a, double b) nogil:
    if isnan(a) or isnan(b):
        return NAN
    return a if a > b else b


cdef double run(const int* ops, const double* args, long lo, long hi, double x) nogil:
    cdef double stack[MAX_STACK]
    cdef int sp = 0
    cdef long i
    cdef int op
    cdef double a, b
    for i in range(lo, hi):
        op = ops[i]
        if op == OP_CONST:
            stack[sp] = args[i]
            sp += 1
        elif op == OP_X:
            stack[sp] = x
            sp += 1
        elif op == OP_NEG:
            stack[sp - 1] = -stack[sp - 1]
        elif op == OP_EXP:
            stack[sp - 1] = exp(stack[sp - 1])
        elif op == OP_LOG:
            a = stack[sp - 1]
            stack[sp - 1] = log(a) if a >= 0.0 else NAN
        elif op == OP_SQRT:
            a = stack[sp - 1]
            stack[sp - 1] = sqrt(a) if a >= 0.0 else NAN
        elif op == OP_ABS:
            stack[sp - 1] = fabs(stack[sp - 1])
        else:
            sp -= 1
            b = stack[sp]
            a = stack[sp - 1]
            if op == OP_ADD:
                a = a + b
            elif op == OP_SUB:
                a = a - b
            elif op == OP_MUL:
                a = a * b
            elif op == OP_DIV:
                a = a / b
            elif op == OP_POW:
                a = pow(a, b)
            elif op == OP_MIN:
                a = _nan_min(a, b)
            else:
                a = _nan_max(a, b)
            stack[sp - 1] = a
    return stack[sp - 1]


cdef struct Kernel:
    const int* ops
    const double* args
    const long* offsets
    int cell
    double c
    double pc
    double inv_p
    double e
    int mode_u


cdef inline double coef(Kernel* K, int which, double x) nogil:
    cdef long j = 3 * K.cell + which
    return run(K.ops, K.args, K.offsets[j], K.offsets[j + 1], x)


cdef inline double rhs(Kernel* K, double x, double s) nogil:
    cdef double gv = coef(K, 0, x)
    cdef double fv = coef(K, 1, x)
    cdef double kv = coef(K, 2, x)
    cdef double Hv = K.c * gv - fv
    if K.mode_u:
        if s < 0.0:
            return NAN
        return K.pc * (Hv * pow(s, K.inv_p) - kv)
    if s <= 0.0:
        return NAN
    return Hv - kv * pow(s, -K.e)


cdef inline double jac(Kernel* K, double x, double s) nogil:
    cdef double Hv = K.c * coef(K, 0, x) - coef(K, 1, x)
    cdef double kv = coef(K, 2, x)
    if K.mode_u:
        if s > 0.0:
            return K.pc * Hv * K.inv_p * pow(s, K.inv_p - 1.0)
        return INFINITY
    return K.e * kv * pow(s, -K.e - 1.0)


cdef double midpoint_seed(double u0, double w, double H, double Kc, double pc,
                          double inv_p) nogil:
    cdef double lo = u0, hi, span, mid
    cdef int it
    if _G(lo, u0, w, H, Kc, pc, inv_p) >= 0.0:
        return u0
    span = w * pc * Kc
    if span <= 0.0:
        span = u0 if u0 > 1e-300 else 1e-300
    hi = u0 + span
    for it in range(200):
        if _G(hi, u0, w, H, Kc, pc, inv_p) >= 0.0:
            break
        span *= 2.0
        hi = u0 + span
    for it in range(200):
        mid = 0.5 * (lo + hi)
        if _G(mid, u0, w, H, Kc, pc, inv_p) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4e-16 * hi:
            break
    return 0.5 * (lo + hi)


cdef inline double _G(double u1, double u0, double w, double H, double Kc, double pc,
                      double inv_p) nogil:
    cdef double m = 0.5 * (u0 + u1)
    return u1 - u0 + w * pc * (H * pow(m, inv_p) - Kc)


cdef class _Buf:
    cdef double* xs
    cdef double* ys
    cdef double* es
    cdef Py_ssize_t n, cap

    def __cinit__(self):
        self.cap = 1024
        self.n = 0
        self.xs = <double*> malloc(self.cap * sizeof(double))
        self.ys = <double*> malloc(self.cap * sizeof(double))
        self.es = <double*> malloc(self.cap * sizeof(double))
        if self.xs == NULL or self.ys == NULL or self.es == NULL:
            raise MemoryError()

    def __dealloc__(self):
        free(self.xs)
        free(self.ys)
        free(self.es)

    cdef int push(self, double x, double y, double e) except -1:
        cdef double* p
        if self.n == self.cap:
            self.cap *= 2
            p = <double*> realloc(self.xs, self.cap * sizeof(double))
            if p == NULL:
                raise MemoryError()
            self.xs = p
            p = <double*> realloc(self.ys, self.cap * sizeof(double))
            if p == NULL:
                raise MemoryError()
            self.ys = p
            p = <double*> realloc(self.es, self.cap * sizeof(double))
            if p == NULL:
                raise MemoryError()
            self.es = p
        self.xs[self.n] = x
        self.ys[self.n] = y
        self.es[self.n] = e
        self.n += 1
        return 0

    cdef tuple pack(self, int status, double sx, long nsteps):
        X = np.empty(self.n)
        Y = np.empty(self.n)
        Er = np.empty(self.n)
        cdef double[::1] xv = X, yv = Y, ev = Er
        cdef Py_ssize_t i
        for i in range(self.n):
            xv[i] = self.xs[i]
            yv[i] = self.ys[i]
            ev[i] = self.es[i]
        return X, Y, Er, status, sx, nsteps


def shoot(double[::1] nodes, int[::1] ops, double[::1] args, long[::1] offsets, double c,
          double p, double rtol, double atol, double seed, int seed_steps, double switch,
          long max_steps, double max_step):
    cdef Kernel K
    cdef _Buf buf = _Buf()
    cdef double pc = p / (p - 1.0)
    cdef double inv_p = 1.0 / p
    cdef double e = 1.0 / (p - 1.0)
    cdef double y_of_u = 1.0 / pc
    cdef int ncell = nodes.shape[0] - 1
    cdef int k = ncell - 1
    cdef double x = nodes[ncell]
    cdef double u, w, x_top, xm, H, Kc, y, s, h, ymax, a, jv, dx, ft, den
    cdef double k1, k2, k3, k4, f3, f4, s_new, err, expo, tol, sj, errn, fac, big
    cdef double kst[7]
    cdef int i, j, q, fsal, stiff, ok, status
    cdef long nsteps = 0
    cdef double dummy = 0.0
    cdef const int* ops_p = &ops[0] if ops.shape[0] > 0 else NULL
    cdef const double* args_p = &args[0] if args.shape[0] > 0 else NULL

    K.ops = ops_p
    K.args = args_p
    K.offsets = &offsets[0]
    K.cell = k
    K.c = c
    K.pc = pc
    K.inv_p = inv_p
    K.e = e
    K.mode_u = 1

    if 0.5 * (x - nodes[k]) < seed:
        seed = 0.5 * (x - nodes[k])

    # seed from u(1) = 0
    u = 0.0
    w = seed / seed_steps
    x_top = x
    for i in range(seed_steps):
        xm = x_top - (i + 0.5) * w
        H = c * coef(&K, 0, xm) - coef(&K, 1, xm)
        Kc = coef(&K, 2, xm)
        if not (isfinite(H) and isfinite(Kc)):
            return buf.pack(NONFINITE, xm, 0)
        u = midpoint_seed(u, w, H, Kc, pc, inv_p)
    x = x_top - seed
    if not (u > 0.0) or not isfinite(u):
        return buf.pack(BAD_SEED, x, 0)
    y = pow(u, y_of_u)
    buf.push(x, y, 0.0)

    K.mode_u = 1 if y <= switch else 0
    s = u if K.mode_u else y
    h = -seed
    ymax = y
    for i in range(7):
        kst[i] = 0.0

    while k >= 0:
        a = nodes[k]
        K.cell = k
        fsal = 0
        while x > a:
            if nsteps >= max_steps:
                return buf.pack(MAX_STEPS, x, nsteps)
            if h < -max_step:
                h = -max_step
            if x + h <= a:
                h = a - x
            elif x + 1.5 * h < a:
                # avoid leaving a sliver in front of the node
                h = 0.5 * (a - x)
            if not fsal:
                kst[0] = rhs(&K, x, s)
                if not isfinite(kst[0]):
                    return buf.pack(NONFINITE, x, nsteps)
            jv = jac(&K, x, s)
            stiff = h * jv < -STIFF
            ok = 1
            if stiff:
                # Rosenbrock step; the xi-derivative comes from a one-sided difference
                dx = 1e-7 * h
                ft = (rhs(&K, x + dx, s) - kst[0]) / dx
                den = 1.0 / (h * RG) - jv
                k1 = (kst[0] + 0.5 * h * ft) / den
                k2 = (kst[0] + 4.0 * k1 / h + 1.5 * h * ft) / den
                f3 = rhs(&K, x + h, s + 2.0 * k1)
                k3 = (f3 + (k1 - k2) / h) / den
                f4 = rhs(&K, x + h, s + 2.0 * k1 + k3)
                k4 = (f4 + (k1 - k2 - 8.0 / 3.0 * k3) / h) / den
                s_new = s + 2.0 * k1 + k3 + k4
                err = k4
                ok = isfinite(s_new) and isfinite(ft) and s_new > 0.0
                expo = -1.0 / 3.0
            else:
                for j in range(1, 7):
                    sj = s
                    for q in range(j):
                        sj += h * A_[j][q] * kst[q]
                    kst[j] = rhs(&K, x + C_[j] * h, sj)
                    if not isfinite(kst[j]):
                        ok = 0
                        break
                if ok:
                    s_new = s
                    err = 0.0
                    for q in range(7):
                        s_new += h * B_[q] * kst[q]
                        err += h * E_[q] * kst[q]
                    ok = s_new > 0.0
                expo = -0.2
            if ok:
                # absolute tolerance scaled by xi, since 0 <= y <= M xi; below the
                # switch level it turns relative so stiff steps cannot overshoot y = 0
                big = fabs(s) if fabs(s) > fabs(s_new) else fabs(s_new)
                if K.mode_u:
                    tol = pow(atol * x, pc) + rtol * big
                else:
                    tol = atol * x * (1.0 if big / switch > 1.0 else big / switch) + rtol * big
            if not ok:
                fsal = 1  # k1 belongs to the unchanged (x, s)
                h *= 0.25
                if fabs(h) < 1e-12 * x:
                    status = CROSSING if y < 1e-8 * ymax else UNDERFLOW
                    return buf.pack(status, x, nsteps)
                continue
            nsteps += 1
            errn = fabs(err) / tol
            if errn <= 1.0:
                x = a if x + h <= a else x + h
                s = s_new
                if K.mode_u:
                    y = pow(s, y_of_u)
                    buf.push(x, y, fabs(err) / (pc * pow(y, pc - 1.0)) if y > 0.0 else 0.0)
                else:
                    y = s
                    buf.push(x, y, fabs(err))
                if y > ymax:
                    ymax = y
                if stiff:
                    fsal = 0
                else:
                    kst[0] = kst[6]
                    fsal = 1
                if K.mode_u and y > switch:
                    K.mode_u = 0
                    s = y
                    fsal = 0
                if errn == 0.0:
                    fac = 5.0
                else:
                    fac = 0.9 * pow(errn, expo)
                    fac = 5.0 if fac > 5.0 else (0.2 if fac < 0.2 else fac)
                h *= fac
            else:
                fsal = 1  # k1 still valid at the unchanged x
                fac = 0.9 * pow(errn, expo)
                h *= fac if fac > 0.2 else 0.2
                if fabs(h) < 1e-12 * x:
                    return buf.pack(UNDERFLOW, x, nsteps)
        k -= 1
    return buf.pack(OK, x, nsteps)
