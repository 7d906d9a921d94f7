"""Compiled inner loops.

Everything here works in the parametrisation ``(mu, tau)`` with
``sigma = exp(tau)``; a two-component problem packs its parameters as
``[mu1, tau1, mu2, tau2, eta]`` with ``alpha1 = 1 / (1 + exp(-eta))``.

Three objectives share one Newton driver, selected by ``mode``:

* ``MODE_COMPONENT``: weighted single-component log-likelihood plus the
  scale penalty (M-step, and the null fit with ``a = 0``).
* ``MODE_FIXED_ALPHA``: two-component log-likelihood with the mixing
  proportion frozen, plus both scale penalties (4 free parameters).
* ``MODE_FULL``: as above with the mixing proportion free (5 parameters).
"""

from math import exp, inf, isfinite, lgamma, log, log1p, pi, sqrt, tanh

import numba as nb
import numpy as np

LOGISTIC, EXTREME, STUDENT_T, NORMAL = 0, 1, 2, 3
MODE_COMPONENT, MODE_FIXED_ALPHA, MODE_FULL = 0, 1, 2

# Newton status codes
CONVERGED, MAXITER, STALLED, FAILED = 0, 1, 2, 3

_MAX_STEP = 2.0
XTOL = 1e-10
NOISE_DEC = 1e-8


@nb.njit(cache=True)
def log_norm_const(code, dof):
    if code == STUDENT_T:
        return lgamma(0.5 * (dof + 1.0)) - lgamma(0.5 * dof) - 0.5 * log(pi * dof)
    if code == NORMAL:
        return -0.5 * log(2.0 * pi)
    return 0.0


@nb.njit(cache=True)
def g012(code, dof, c, z):
    """log f0(z) and its first two derivatives."""
    if code == LOGISTIC:
        a = abs(z)
        t = tanh(0.5 * z)
        return -a - 2.0 * log1p(exp(-a)), -t, -0.5 * (1.0 - t * t)
    if code == EXTREME:
        e = exp(z)
        return z - e, 1.0 - e, -e
    if code == STUDENT_T:
        q = dof + z * z
        return (c - 0.5 * (dof + 1.0) * log1p(z * z / dof),
                -(dof + 1.0) * z / q,
                -(dof + 1.0) * (dof - z * z) / (q * q))
    return c - 0.5 * z * z, -z, -1.0


@nb.njit(cache=True)
def component_terms(code, dof, c, x, mu, tau):
    """log f(x; mu, e^tau) with gradient and Hessian in (mu, tau)."""
    s = exp(tau)
    z = (x - mu) / s
    g, g1, g2 = g012(code, dof, c, z)
    return (g - tau,
            -g1 / s,
            -1.0 - z * g1,
            g2 / (s * s),
            (g1 + z * g2) / s,
            z * z * g2 + z * g1)


@nb.njit(cache=True)
def scale_penalty(a, s2hat, tau):
    """-a {s2hat/sigma^2 + log(sigma^2/s2hat)} and its tau-derivatives."""
    if a == 0.0:
        return 0.0, 0.0, 0.0
    e = s2hat * exp(-2.0 * tau)
    return -a * (e + 2.0 * tau - log(s2hat)), 2.0 * a * (e - 1.0), -4.0 * a * e


@nb.njit(cache=True)
def log_alphas(eta):
    if eta >= 0.0:
        la2 = -eta - log1p(exp(-eta))
        la1 = -log1p(exp(-eta))
    else:
        la1 = eta - log1p(exp(eta))
        la2 = -log1p(exp(eta))
    return la1, la2


@nb.njit(cache=True)
def logpdf_array(x, code, dof, mu, sigma):
    c = log_norm_const(code, dof)
    tau = log(sigma)
    out = np.empty(x.size)
    for i in range(x.size):
        g, _, _ = g012(code, dof, c, (x[i] - mu) / sigma)
        out[i] = g - tau
    return out


@nb.njit(cache=True)
def posterior(x, code, dof, p):
    """Posterior weight of component 1 for every observation."""
    c = log_norm_const(code, dof)
    la1, la2 = log_alphas(p[4])
    s1, s2 = exp(p[1]), exp(p[3])
    w = np.empty(x.size)
    for i in range(x.size):
        l1 = la1 + g012(code, dof, c, (x[i] - p[0]) / s1)[0] - p[1]
        l2 = la2 + g012(code, dof, c, (x[i] - p[2]) / s2)[0] - p[3]
        if l1 == -inf and l2 == -inf:
            # both densities underflow; fall back to the prior weight
            w[i] = exp(la1)
        elif l1 >= l2:
            w[i] = 1.0 / (1.0 + exp(l2 - l1))
        else:
            e = exp(l1 - l2)
            w[i] = e / (1.0 + e)
    return w


@nb.njit(cache=True)
def mixture_loglik(x, code, dof, p):
    c = log_norm_const(code, dof)
    la1, la2 = log_alphas(p[4])
    s1, s2 = exp(p[1]), exp(p[3])
    total = 0.0
    for i in range(x.size):
        l1 = la1 + g012(code, dof, c, (x[i] - p[0]) / s1)[0] - p[1]
        l2 = la2 + g012(code, dof, c, (x[i] - p[2]) / s2)[0] - p[3]
        m = max(l1, l2)
        if m == -inf:
            return -inf
        total += m + log(exp(l1 - m) + exp(l2 - m))
    return total


@nb.njit(cache=True)
def component_vgh(x, w, code, dof, c, p, a, s2hat):
    f = 0.0
    g = np.zeros(2)
    H = np.zeros((2, 2))
    for i in range(x.size):
        wi = w[i]
        if wi == 0.0:
            continue
        L, Lm, Lt, Lmm, Lmt, Ltt = component_terms(code, dof, c, x[i], p[0], p[1])
        f += wi * L
        g[0] += wi * Lm
        g[1] += wi * Lt
        H[0, 0] += wi * Lmm
        H[0, 1] += wi * Lmt
        H[1, 1] += wi * Ltt
    pv, dp, d2p = scale_penalty(a, s2hat, p[1])
    f += pv
    g[1] += dp
    H[1, 1] += d2p
    H[1, 0] = H[0, 1]
    return f, g, H


@nb.njit(cache=True)
def mixture_vgh(x, code, dof, c, p, a, s2hat):
    """Penalised two-component objective, gradient and Hessian (5 params)."""
    la1, la2 = log_alphas(p[4])
    a1 = exp(la1)
    a2 = exp(la2)
    f = 0.0
    g = np.zeros(5)
    H = np.zeros((5, 5))
    G1 = np.zeros(5)
    G2 = np.zeros(5)
    gb = np.zeros(5)
    for i in range(x.size):
        L1, m1, t1, mm1, mt1, tt1 = component_terms(code, dof, c, x[i], p[0], p[1])
        L2, m2, t2, mm2, mt2, tt2 = component_terms(code, dof, c, x[i], p[2], p[3])
        l1 = la1 + L1
        l2 = la2 + L2
        m = max(l1, l2)
        if not (m > -inf) or not isfinite(m):
            return -inf, g, H
        e1 = exp(l1 - m)
        e2 = exp(l2 - m)
        s = e1 + e2
        f += m + log(s)
        w1 = e1 / s
        w2 = e2 / s
        if w1 == 0.0:
            m1 = t1 = mm1 = mt1 = tt1 = 0.0
        if w2 == 0.0:
            m2 = t2 = mm2 = mt2 = tt2 = 0.0
        G1[0] = m1
        G1[1] = t1
        G1[4] = a2
        G2[2] = m2
        G2[3] = t2
        G2[4] = -a1
        for r in range(5):
            gb[r] = w1 * G1[r] + w2 * G2[r]
            g[r] += gb[r]
        for r in range(5):
            for q in range(r, 5):
                H[r, q] += w1 * G1[r] * G1[q] + w2 * G2[r] * G2[q] - gb[r] * gb[q]
        H[0, 0] += w1 * mm1
        H[0, 1] += w1 * mt1
        H[1, 1] += w1 * tt1
        H[2, 2] += w2 * mm2
        H[2, 3] += w2 * mt2
        H[3, 3] += w2 * tt2
    H[4, 4] -= x.size * a1 * a2
    for j in (1, 3):
        pv, dp, d2p = scale_penalty(a, s2hat, p[j])
        f += pv
        g[j] += dp
        H[j, j] += d2p
    for r in range(5):
        for q in range(r):
            H[r, q] = H[q, r]
    return f, g, H


@nb.njit(cache=True)
def evaluate(mode, x, w, code, dof, c, p, a, s2hat):
    if mode == MODE_COMPONENT:
        return component_vgh(x, w, code, dof, c, p, a, s2hat)
    f, g, H = mixture_vgh(x, code, dof, c, p, a, s2hat)
    if mode == MODE_FIXED_ALPHA:
        return f, g[:4].copy(), H[:4, :4].copy()
    return f, g, H


@nb.njit(cache=True)
def _cholesky(M):
    k = M.shape[0]
    L = np.zeros((k, k))
    for j in range(k):
        s = M[j, j]
        for q in range(j):
            s -= L[j, q] * L[j, q]
        if not (s > 1e-14 * (abs(M[j, j]) + 1e-300)):
            return False, L
        L[j, j] = sqrt(s)
        for i in range(j + 1, k):
            t = M[i, j]
            for q in range(j):
                t -= L[i, q] * L[j, q]
            L[i, j] = t / L[j, j]
    return True, L


@nb.njit(cache=True)
def _chol_solve(L, b):
    k = b.size
    y = np.empty(k)
    for i in range(k):
        t = b[i]
        for q in range(i):
            t -= L[i, q] * y[q]
        y[i] = t / L[i, i]
    out = np.empty(k)
    for i in range(k - 1, -1, -1):
        t = y[i]
        for q in range(i + 1, k):
            t -= L[q, i] * out[q]
        out[i] = t / L[i, i]
    return out


@nb.njit(cache=True)
def newton_max(mode, x, w, code, dof, p0, a, s2hat, maxit, tol):
    """Damped Newton ascent with Armijo backtracking.

    Returns ``(params, value, status, iterations)``. Every accepted step
    strictly increases the objective, so the result is never worse than the
    start.
    """
    c = log_norm_const(code, dof)
    p = p0.copy()
    if mode == MODE_FIXED_ALPHA:
        k = 4
    elif mode == MODE_FULL:
        k = 5
    else:
        k = 2
    f, g, H = evaluate(mode, x, w, code, dof, c, p, a, s2hat)
    if not isfinite(f):
        return p, f, FAILED, 0
    for it in range(maxit):
        for r in range(k):
            if not isfinite(g[r]):
                return p, f, FAILED, it
            for q in range(k):
                if not isfinite(H[r, q]):
                    return p, f, FAILED, it
        A = -H
        scale = 0.0
        for r in range(k):
            scale = max(scale, abs(A[r, r]))
        scale += 1e-12
        lam = 0.0
        ok, L = _cholesky(A)
        while not ok:
            lam = max(4.0 * lam, 1e-8 * scale)
            B = A.copy()
            for r in range(k):
                B[r, r] += lam
            ok, L = _cholesky(B)
            if lam > 1e12 * scale:
                return p, f, FAILED, it
        step = _chol_solve(L, g)
        dec = 0.0
        smax = 0.0
        for r in range(k):
            dec += g[r] * step[r]
            smax = max(smax, abs(step[r]))
        if dec < tol or smax < XTOL:
            return p, f, CONVERGED, it
        if smax > _MAX_STEP:
            for r in range(k):
                step[r] *= _MAX_STEP / smax
            dec *= _MAX_STEP / smax
        t = 1.0
        accepted = False
        pn = p.copy()
        for _ in range(60):
            for r in range(k):
                pn[r] = p[r] + t * step[r]
            fn, gn, Hn = evaluate(mode, x, w, code, dof, c, pn, a, s2hat)
            if isfinite(fn) and fn >= f + 1e-4 * t * dec and fn > f:
                accepted = True
                break
            if t == 1.0 and dec < NOISE_DEC:
                # at the rounding floor of the objective
                return p, f, CONVERGED, it
            t *= 0.5
        if not accepted:
            return p, f, STALLED, it
        p = pn
        f, g, H = fn, gn, Hn
    return p, f, MAXITER, maxit


@nb.njit(cache=True)
def limit_sup(T, W, ngrid, golden_iters):
    """Polar-form supremum of 2 u'w t - t^2 u'Tu over t >= 0 and phi."""
    n = W.shape[0]
    out = np.empty(n)
    dphi = pi / ngrid
    U = np.empty((ngrid, 3))
    den = np.empty(ngrid)
    for j in range(ngrid):
        ph = j * dphi
        cph, sph = np.cos(ph), np.sin(ph)
        U[j, 0] = cph * cph
        U[j, 1] = 2.0 * cph * sph
        U[j, 2] = sph * sph
        d = 0.0
        for r in range(3):
            for q in range(3):
                d += U[j, r] * T[r, q] * U[j, q]
        den[j] = d
    gr = (sqrt(5.0) - 1.0) / 2.0
    for i in range(n):
        w0, w1, w2 = W[i, 0], W[i, 1], W[i, 2]
        best = 0.0
        jb = -1
        for j in range(ngrid):
            num = U[j, 0] * w0 + U[j, 1] * w1 + U[j, 2] * w2
            if num > 0.0:
                v = num * num / den[j]
                if v > best:
                    best = v
                    jb = j
        if jb < 0:
            out[i] = 0.0
            continue
        lo = (jb - 1) * dphi
        hi = (jb + 1) * dphi
        x1 = hi - gr * (hi - lo)
        x2 = lo + gr * (hi - lo)
        f1 = _polar_obj(T, w0, w1, w2, x1)
        f2 = _polar_obj(T, w0, w1, w2, x2)
        for _ in range(golden_iters):
            if f1 > f2:
                hi = x2
                x2 = x1
                f2 = f1
                x1 = hi - gr * (hi - lo)
                f1 = _polar_obj(T, w0, w1, w2, x1)
            else:
                lo = x1
                x1 = x2
                f1 = f2
                x2 = lo + gr * (hi - lo)
                f2 = _polar_obj(T, w0, w1, w2, x2)
        out[i] = max(best, f1, f2)
    return out


@nb.njit(cache=True)
def _polar_obj(T, w0, w1, w2, ph):
    cph, sph = np.cos(ph), np.sin(ph)
    u0 = cph * cph
    u1 = 2.0 * cph * sph
    u2 = sph * sph
    num = u0 * w0 + u1 * w1 + u2 * w2
    if num <= 0.0:
        return 0.0
    d = (u0 * (T[0, 0] * u0 + T[0, 1] * u1 + T[0, 2] * u2)
         + u1 * (T[1, 0] * u0 + T[1, 1] * u1 + T[1, 2] * u2)
         + u2 * (T[2, 0] * u0 + T[2, 1] * u1 + T[2, 2] * u2))
    return num * num / d
