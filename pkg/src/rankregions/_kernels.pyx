# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled fitting kernels; the hot twin of `_kernels_py`.

Same iteration policies and convergence rules as the pure-NumPy module, with
the inner loops in C. Scratch buffers are reused across the *_many variants.
"""

import numpy as np

from libc.math cimport exp, fabs, isfinite, log1p, sqrt, tanh

BACKEND_NAME = "compiled"

cdef enum:
    _FIT_OK = 0
    _FIT_SEPARATED = 1
    _FIT_FAILED = 2

FIT_OK = _FIT_OK
FIT_SEPARATED = _FIT_SEPARATED
FIT_FAILED = _FIT_FAILED


# ---------------------------------------------------------------------------
# squared-loss perceptron with logistic activation
# ---------------------------------------------------------------------------

cdef double _ploss(const double[:, ::1] X, const double[::1] y,
                   const double[::1] w) noexcept nogil:
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1], i, k
    cdef double z, s, e, acc = 0.0
    for i in range(n):
        z = w[0]
        for k in range(d):
            z += w[k + 1] * X[i, k]
        s = tanh(0.5 * z)
        e = s - y[i]
        acc += e * e
    return acc / n


cdef double _pgrad(const double[:, ::1] X, const double[::1] y,
                   const double[::1] w, double[::1] g) noexcept nogil:
    # fills g with the loss gradient, returns the loss
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1], i, k
    cdef double z, s, e, c, acc = 0.0
    for k in range(d + 1):
        g[k] = 0.0
    for i in range(n):
        z = w[0]
        for k in range(d):
            z += w[k + 1] * X[i, k]
        s = tanh(0.5 * z)
        e = s - y[i]
        acc += e * e
        c = e * (1.0 - s * s)
        g[0] += c
        for k in range(d):
            g[k + 1] += c * X[i, k]
    for k in range(d + 1):
        g[k] /= n
    return acc / n


cdef (double, long) _perceptron_core(const double[:, ::1] X, const double[::1] y,
                                     double step0, long max_iter, double grad_tol,
                                     double step_floor, double[::1] w, double[::1] g,
                                     double[::1] w_try) noexcept nogil:
    cdef Py_ssize_t d = X.shape[1], k
    cdef double loss, loss_try, gn, step = step0
    cdef long iters = 0
    cdef bint accepted
    for k in range(d + 1):
        w[k] = 0.0
    loss = _ploss(X, y, w)
    while iters < max_iter:
        _pgrad(X, y, w, g)
        iters += 1
        gn = 0.0
        for k in range(d + 1):
            if fabs(g[k]) > gn:
                gn = fabs(g[k])
        if gn <= grad_tol:
            break
        accepted = False
        while step >= step_floor:
            for k in range(d + 1):
                w_try[k] = w[k] - step * g[k]
            loss_try = _ploss(X, y, w_try)
            if isfinite(loss_try) and loss_try <= loss:
                for k in range(d + 1):
                    w[k] = w_try[k]
                loss = loss_try
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
    return loss, iters


def perceptron_value_grad(X, y, w):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    g = np.empty(X.shape[1] + 1)
    loss = _pgrad(X, y, w, g)
    return float(loss), g


def perceptron_fit(X, y, step0=0.1, max_iter=2000, grad_tol=1e-7, step_floor=1e-14):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t d = X.shape[1]
    w = np.empty(d + 1)
    g = np.empty(d + 1)
    w_try = np.empty(d + 1)
    cdef double loss
    cdef long iters
    loss, iters = _perceptron_core(X, y, step0, max_iter, grad_tol, step_floor,
                                   w, g, w_try)
    return w, float(loss), int(iters)


def perceptron_fit_many(X, labels, double step0=0.1, long max_iter=2000,
                        double grad_tol=1e-7, double step_floor=1e-14):
    X = np.ascontiguousarray(X, dtype=np.float64)
    labels = np.ascontiguousarray(labels, dtype=np.float64)
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1], m = labels.shape[1], j, i
    W = np.empty((m, d + 1))
    losses = np.empty(m)
    iters = np.empty(m, dtype=np.int64)
    ybuf = np.empty(n)
    g = np.empty(d + 1)
    w_try = np.empty(d + 1)
    cdef const double[:, ::1] Xv = X
    cdef const double[:, ::1] Lv = labels
    cdef double[:, ::1] Wv = W
    cdef double[::1] yv = ybuf
    cdef double[::1] lossv = losses
    cdef long[::1] itv = iters
    cdef double[::1] gv = g
    cdef double[::1] wtv = w_try
    cdef double loss
    cdef long it
    with nogil:
        for j in range(m):
            for i in range(n):
                yv[i] = Lv[i, j]
            loss, it = _perceptron_core(Xv, yv, step0, max_iter, grad_tol,
                                        step_floor, Wv[j], gv, wtv)
            lossv[j] = loss
            itv[j] = it
    return W, losses, iters


# ---------------------------------------------------------------------------
# logistic maximum likelihood via Newton-Raphson
# ---------------------------------------------------------------------------

cdef double _lls(const double[:, ::1] X, const double[::1] y01,
                 const double[::1] w, double ridge) noexcept nogil:
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1], i, k
    cdef double z, sp, acc = 0.0
    for i in range(n):
        z = w[0]
        for k in range(d):
            z += w[k + 1] * X[i, k]
        sp = z if z > 0.0 else 0.0
        acc += y01[i] * z - (sp + log1p(exp(-fabs(z))))
    if ridge > 0.0:
        for k in range(d + 1):
            acc -= 0.5 * ridge * w[k] * w[k]
    return acc


cdef double _lgrad(const double[:, ::1] X, const double[::1] y01,
                   const double[::1] w, double ridge, double[::1] g) noexcept nogil:
    # fills g with the (penalized) score, returns the penalized log-likelihood
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1], i, k
    cdef double z, sp, p, r, acc = 0.0
    for k in range(d + 1):
        g[k] = 0.0
    for i in range(n):
        z = w[0]
        for k in range(d):
            z += w[k + 1] * X[i, k]
        sp = z if z > 0.0 else 0.0
        acc += y01[i] * z - (sp + log1p(exp(-fabs(z))))
        p = 0.5 * (1.0 + tanh(0.5 * z))
        r = y01[i] - p
        g[0] += r
        for k in range(d):
            g[k + 1] += r * X[i, k]
    if ridge > 0.0:
        for k in range(d + 1):
            acc -= 0.5 * ridge * w[k] * w[k]
            g[k] -= ridge * w[k]
    return acc


cdef void _neg_hess(const double[:, ::1] X, const double[::1] w, double ridge,
                    double[:, ::1] H) noexcept nogil:
    # H = sum_i p_i (1-p_i) xt xt^T + ridge I  (xt = [1, x_i])
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1], i, k, r
    cdef double z, p, v
    for k in range(d + 1):
        for r in range(d + 1):
            H[k, r] = 0.0
    for i in range(n):
        z = w[0]
        for k in range(d):
            z += w[k + 1] * X[i, k]
        p = 0.5 * (1.0 + tanh(0.5 * z))
        v = p * (1.0 - p)
        H[0, 0] += v
        for k in range(d):
            H[0, k + 1] += v * X[i, k]
            H[k + 1, 0] += v * X[i, k]
            for r in range(d):
                H[k + 1, r + 1] += v * X[i, k] * X[i, r]
    if ridge > 0.0:
        for k in range(d + 1):
            H[k, k] += ridge


cdef bint _chol_solve_c(const double[:, ::1] H, const double[::1] g,
                        double[:, ::1] L, double[::1] ybuf,
                        double[::1] x) noexcept nogil:
    cdef Py_ssize_t k = H.shape[0], i, r, t
    cdef double acc, piv_tol, tr = 0.0
    for i in range(k):
        tr += H[i, i]
    piv_tol = 1e-13 * (tr / k)
    for i in range(k):
        for r in range(k):
            L[i, r] = 0.0
    for i in range(k):
        acc = H[i, i]
        for t in range(i):
            acc -= L[i, t] * L[i, t]
        if not isfinite(acc) or acc <= piv_tol:
            return False
        L[i, i] = sqrt(acc)
        for r in range(i + 1, k):
            acc = H[r, i]
            for t in range(i):
                acc -= L[r, t] * L[i, t]
            L[r, i] = acc / L[i, i]
    for i in range(k):
        acc = g[i]
        for t in range(i):
            acc -= L[i, t] * ybuf[t]
        ybuf[i] = acc / L[i, i]
    for i in range(k - 1, -1, -1):
        acc = ybuf[i]
        for t in range(i + 1, k):
            acc -= L[t, i] * x[t]
        x[i] = acc / L[i, i]
    return True


cdef (double, double, long, bint, bint) _newton_c(const double[:, ::1] X, const double[::1] y01,
                                                   double ridge, long max_iter, double grad_tol,
                                                   double norm_cap, double[::1] w, double[::1] g,
                                                   double[:, ::1] H, double[:, ::1] L,
                                                   double[::1] ybuf, double[::1] delta,
                                                   double[::1] w_try) noexcept nogil:
    cdef Py_ssize_t d = X.shape[1], k
    cdef double ll, ll_try, gn, step, nw
    cdef long iters = 0
    cdef int ls
    cdef bint accepted
    for k in range(d + 1):
        w[k] = 0.0
    while True:
        ll = _lgrad(X, y01, w, ridge, g)
        gn = 0.0
        for k in range(d + 1):
            if fabs(g[k]) > gn:
                gn = fabs(g[k])
        if gn <= grad_tol:
            return ll, gn, iters, True, False
        if iters >= max_iter:
            return ll, gn, iters, False, False
        nw = 0.0
        for k in range(d + 1):
            nw += w[k] * w[k]
        if sqrt(nw) > norm_cap:
            return ll, gn, iters, False, True
        _neg_hess(X, w, ridge, H)
        if not _chol_solve_c(H, g, L, ybuf, delta):
            return ll, gn, iters, False, True
        step = 1.0
        accepted = False
        for ls in range(60):
            for k in range(d + 1):
                w_try[k] = w[k] + step * delta[k]
            ll_try = _lls(X, y01, w_try, ridge)
            if isfinite(ll_try) and ll_try >= ll - 1e-12:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            return ll, gn, iters, False, False
        for k in range(d + 1):
            w[k] = w_try[k]
        iters += 1


def logistic_value_grad(X, y01, w, ridge=0.0):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y01 = np.ascontiguousarray(y01, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    g = np.empty(X.shape[1] + 1)
    ll = _lgrad(X, y01, w, ridge, g)
    return float(ll), g


def logistic_hessian(X, w):
    X = np.ascontiguousarray(X, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    cdef Py_ssize_t d = X.shape[1]
    H = np.empty((d + 1, d + 1))
    _neg_hess(X, w, 0.0, H)
    return -H


cdef (double, double, long, long) _logistic_fit_core(const double[:, ::1] X,
                                                     const double[::1] y01,
                                                     long max_iter, double grad_tol,
                                                     double norm_cap, double ridge_fallback,
                                                     double[::1] w, double[::1] g,
                                                     double[:, ::1] H, double[:, ::1] L,
                                                     double[::1] ybuf, double[::1] delta,
                                                     double[::1] w_try) noexcept nogil:
    # returns (loglik, grad_norm, iters, status)
    cdef double gn, ll
    cdef long iters, it2
    cdef bint ok, degenerate
    cdef long status = _FIT_OK
    ll, gn, iters, ok, degenerate = _newton_c(X, y01, 0.0, max_iter, grad_tol, norm_cap,
                                              w, g, H, L, ybuf, delta, w_try)
    # a (quasi-)perfect fit means the likelihood has no interior maximizer:
    # the gradient tolerance converges onto an escape ray, not onto an MLE
    if ok and ll > -1e-6 * X.shape[0]:
        degenerate = True
    if degenerate:
        status = _FIT_SEPARATED
        ll, gn, it2, ok, degenerate = _newton_c(X, y01, ridge_fallback, max_iter, grad_tol,
                                                1e308, w, g, H, L, ybuf, delta, w_try)
        iters += it2
    if not ok:
        status = _FIT_FAILED
    ll = _lls(X, y01, w, 0.0)
    return ll, gn, iters, status


def logistic_fit(X, y01, max_iter=60, grad_tol=None, norm_cap=1e3, ridge_fallback=1e-3):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y01 = np.ascontiguousarray(y01, dtype=np.float64)
    cdef Py_ssize_t d = X.shape[1]
    cdef double tol = 1e-8 * X.shape[0] if grad_tol is None else grad_tol
    w = np.empty(d + 1)
    g = np.empty(d + 1)
    H = np.empty((d + 1, d + 1))
    L = np.empty((d + 1, d + 1))
    ybuf = np.empty(d + 1)
    delta = np.empty(d + 1)
    w_try = np.empty(d + 1)
    cdef double ll, gn
    cdef long iters, status
    ll, gn, iters, status = _logistic_fit_core(X, y01, max_iter, tol, norm_cap,
                                               ridge_fallback, w, g, H, L, ybuf,
                                               delta, w_try)
    return w, float(ll), float(gn), int(iters), int(status)


def logistic_fit_many(X, labels01, long max_iter=60, grad_tol=None,
                      double norm_cap=1e3, double ridge_fallback=1e-3):
    X = np.ascontiguousarray(X, dtype=np.float64)
    labels01 = np.ascontiguousarray(labels01, dtype=np.float64)
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1], m = labels01.shape[1], j, i
    cdef double tol = 1e-8 * n if grad_tol is None else grad_tol
    W = np.empty((m, d + 1))
    lls = np.empty(m)
    gns = np.empty(m)
    iters = np.empty(m, dtype=np.int64)
    statuses = np.empty(m, dtype=np.int64)
    ycol = np.empty(n)
    g = np.empty(d + 1)
    H = np.empty((d + 1, d + 1))
    L = np.empty((d + 1, d + 1))
    ybuf = np.empty(d + 1)
    delta = np.empty(d + 1)
    w_try = np.empty(d + 1)
    cdef const double[:, ::1] Xv = X
    cdef const double[:, ::1] Lab = labels01
    cdef double[:, ::1] Wv = W
    cdef double[::1] yv = ycol
    cdef double[::1] llv = lls
    cdef double[::1] gnv = gns
    cdef long[::1] itv = iters
    cdef long[::1] stv = statuses
    cdef double[::1] gv = g
    cdef double[:, ::1] Hv = H
    cdef double[:, ::1] Lv = L
    cdef double[::1] ybv = ybuf
    cdef double[::1] dv = delta
    cdef double[::1] wtv = w_try
    cdef double ll, gn
    cdef long it, st
    with nogil:
        for j in range(m):
            for i in range(n):
                yv[i] = Lab[i, j]
            ll, gn, it, st = _logistic_fit_core(Xv, yv, max_iter, tol, norm_cap,
                                                ridge_fallback, Wv[j], gv, Hv, Lv,
                                                ybv, dv, wtv)
            llv[j] = ll
            gnv[j] = gn
            itv[j] = it
            stv[j] = st
    return W, lls, gns, iters, statuses
