"""Pure-NumPy implementations of the hot fitting kernels.

Mirrors the compiled extension in `_kernels.pyx` function for function; the
backend module picks whichever is available at import time. Both backends
follow the same iteration policies (zero initialization, step halving,
identical convergence checks) so that fits agree up to floating-point
associativity.

Parameter layout everywhere: w = [a, b_1, ..., b_d] with z_i = a + b . x_i.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"

# logistic_fit status codes shared by both backends
FIT_OK = 0
FIT_SEPARATED = 1
FIT_FAILED = 2


def _zvals(X, w):
    return w[0] + X @ w[1:]


def perceptron_value_grad(X, y, w):
    """Empirical squared loss of sigma(a + b.x) against labels y, with gradient.

    sigma(z) = 2/(1+exp(-z)) - 1 = tanh(z/2).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    s = np.tanh(0.5 * _zvals(X, w))
    e = s - y
    loss = float(np.mean(e * e))
    c = e * (1.0 - s * s)  # e * 2 sigma'(z)
    n = X.shape[0]
    g = np.empty(w.shape[0])
    g[0] = c.sum() / n
    g[1:] = (X.T @ c) / n
    return loss, g


def _perceptron_loss(X, y, w):
    s = np.tanh(0.5 * _zvals(X, w))
    e = s - y
    return float(np.mean(e * e))


def perceptron_fit(X, y, step0=0.1, max_iter=2000, grad_tol=1e-7, step_floor=1e-14):
    """Full-batch gradient descent from zero init with step halving.

    The step only shrinks (halved whenever a trial step would increase the
    loss), so the returned loss never exceeds the loss at initialization.

    Returns
    -------
    (w, loss, n_iter) : ndarray (d+1,), float, int
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    w = np.zeros(X.shape[1] + 1)
    loss = _perceptron_loss(X, y, w)
    step = step0
    iters = 0
    while iters < max_iter:
        _, g = perceptron_value_grad(X, y, w)
        iters += 1
        if np.max(np.abs(g)) <= grad_tol:
            break
        accepted = False
        while step >= step_floor:
            w_try = w - step * g
            loss_try = _perceptron_loss(X, y, w_try)
            if np.isfinite(loss_try) and loss_try <= loss:
                w, loss = w_try, loss_try
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
    return w, loss, iters


def perceptron_fit_many(X, labels, step0=0.1, max_iter=2000, grad_tol=1e-7, step_floor=1e-14):
    """Fit one perceptron per label column; shared inputs X, labels (n, m)."""
    labels = np.asarray(labels, dtype=np.float64)
    m = labels.shape[1]
    W = np.empty((m, X.shape[1] + 1))
    losses = np.empty(m)
    iters = np.empty(m, dtype=np.int64)
    for j in range(m):
        W[j], losses[j], iters[j] = perceptron_fit(
            X, labels[:, j], step0, max_iter, grad_tol, step_floor
        )
    return W, losses, iters


def logistic_value_grad(X, y01, w, ridge=0.0):
    """Bernoulli log-likelihood with p = 1/(1+exp(-(a + b.x))) and its gradient.

    With ridge > 0 both are penalized by -ridge/2 * ||w||^2.
    """
    X = np.asarray(X, dtype=np.float64)
    y01 = np.asarray(y01, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    z = _zvals(X, w)
    # log(1 + e^z) computed stably
    ll = float(np.sum(y01 * z - (np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z))))))
    p = 0.5 * (1.0 + np.tanh(0.5 * z))
    r = y01 - p
    g = np.empty(w.shape[0])
    g[0] = r.sum()
    g[1:] = X.T @ r
    if ridge > 0.0:
        ll -= 0.5 * ridge * float(w @ w)
        g -= ridge * w
    return ll, g


def logistic_hessian(X, w):
    """Hessian of the (unpenalized) log-likelihood at w: -sum p(1-p) xx^T."""
    X = np.asarray(X, dtype=np.float64)
    z = _zvals(X, np.asarray(w, dtype=np.float64))
    p = 0.5 * (1.0 + np.tanh(0.5 * z))
    v = p * (1.0 - p)
    Xt = np.hstack([np.ones((X.shape[0], 1)), X])
    return -(Xt.T * v) @ Xt


def _chol_solve(H, g):
    """Cholesky solve of H x = g for small symmetric H; None when singular.

    Hand-rolled so the compiled backend can follow the identical pivot rule.
    """
    k = H.shape[0]
    piv_tol = 1e-13 * (np.trace(H) / k)
    L = np.zeros((k, k))
    for i in range(k):
        acc = H[i, i] - np.dot(L[i, :i], L[i, :i])
        if not np.isfinite(acc) or acc <= piv_tol:
            return None
        L[i, i] = np.sqrt(acc)
        for r in range(i + 1, k):
            L[r, i] = (H[r, i] - np.dot(L[r, :i], L[i, :i])) / L[i, i]
    # forward then backward substitution
    ybuf = np.empty(k)
    for i in range(k):
        ybuf[i] = (g[i] - np.dot(L[i, :i], ybuf[:i])) / L[i, i]
    x = np.empty(k)
    for i in range(k - 1, -1, -1):
        x[i] = (ybuf[i] - np.dot(L[i + 1 :, i], x[i + 1 :])) / L[i, i]
    return x


def _loglik_only(X, y01, w, ridge):
    z = _zvals(X, w)
    ll = float(np.sum(y01 * z - (np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z))))))
    if ridge > 0.0:
        ll -= 0.5 * ridge * float(w @ w)
    return ll


def _newton(X, y01, ridge, max_iter, grad_tol, norm_cap):
    # returns (w, ll, gn, iters, converged, hit_cap_or_singular)
    w = np.zeros(X.shape[1] + 1)
    iters = 0
    while True:
        ll, g = logistic_value_grad(X, y01, w, ridge)
        gn = float(np.max(np.abs(g)))
        if gn <= grad_tol:
            return w, ll, gn, iters, True, False
        if iters >= max_iter:
            return w, ll, gn, iters, False, False
        if float(np.sqrt(w @ w)) > norm_cap:
            return w, ll, gn, iters, False, True
        H = -logistic_hessian(X, w)
        if ridge > 0.0:
            H = H + ridge * np.eye(H.shape[0])
        delta = _chol_solve(H, g)
        if delta is None:
            return w, ll, gn, iters, False, True
        step = 1.0
        accepted = False
        for _ in range(60):
            w_try = w + step * delta
            ll_try = _loglik_only(X, y01, w_try, ridge)
            if np.isfinite(ll_try) and ll_try >= ll - 1e-12:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            return w, ll, gn, iters, False, False
        w = w_try
        iters += 1


def logistic_fit(X, y01, max_iter=60, grad_tol=None, norm_cap=1e3, ridge_fallback=1e-3):
    """Newton-Raphson MLE with step halving and a separation fallback.

    When the iterate norm exceeds ``norm_cap`` or the Hessian is numerically
    singular, refits with an L2 (ridge) penalty and flags the result.

    Returns
    -------
    (w, loglik, grad_norm, n_iter, status)
        status: 0 converged, 1 converged via ridge fallback (separated-ish
        data), 2 not converged within the iteration cap.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y01 = np.ascontiguousarray(y01, dtype=np.float64)
    if grad_tol is None:
        grad_tol = 1e-8 * X.shape[0]
    w, ll, gn, iters, ok, degenerate = _newton(X, y01, 0.0, max_iter, grad_tol, norm_cap)
    # a (quasi-)perfect fit means the likelihood has no interior maximizer:
    # the gradient tolerance converges onto an escape ray, not onto an MLE
    if ok and ll > -1e-6 * X.shape[0]:
        degenerate = True
    status = FIT_OK
    if degenerate:
        status = FIT_SEPARATED
        w, ll, gn, it2, ok, _ = _newton(X, y01, ridge_fallback, max_iter, grad_tol, np.inf)
        iters += it2
    if not ok:
        status = FIT_FAILED
    ll = _loglik_only(X, y01, w, 0.0)
    return w, ll, gn, iters, status


def logistic_fit_many(X, labels01, max_iter=60, grad_tol=None, norm_cap=1e3, ridge_fallback=1e-3):
    """Fit one logistic MLE per label column; labels01 (n, m) with entries {0,1}."""
    labels01 = np.asarray(labels01, dtype=np.float64)
    m = labels01.shape[1]
    W = np.empty((m, X.shape[1] + 1))
    lls = np.empty(m)
    gns = np.empty(m)
    iters = np.empty(m, dtype=np.int64)
    statuses = np.empty(m, dtype=np.int64)
    for j in range(m):
        W[j], lls[j], gns[j], iters[j], statuses[j] = logistic_fit(
            X, labels01[:, j], max_iter, grad_tol, norm_cap, ridge_fallback
        )
    return W, lls, gns, iters, statuses
