"""Hot recursion kernels for the ARMA-GARCHX filter and simulator.

The recursions are inherently sequential in t, so they are plain loops
compiled with numba when available. Set CHAINVOL_DISABLE_NUMBA=1 to force
the pure-Python/numpy fallback (used by the benchmark and for debugging).
"""

from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("CHAINVOL_DISABLE_NUMBA", "0").lower() in ("1", "true", "yes")


def _filter_recursion(y, xvar, mu, phi, theta, alpha0, alpha1, beta, sigma2_init, sigma2_min):
    """Run the mean and variance recursions over an observed return path.

    Pre-sample y and u are zero; the pre-sample conditional variance is
    sigma2_init. xvar[t] is the exogenous variance contribution beta_x' x_t
    (zeros when there are no regressors). Variances are floored at sigma2_min.
    """
    T = y.shape[0]
    p = phi.shape[0]
    q = theta.shape[0]
    u = np.zeros(T)
    sigma2 = np.empty(T)
    for t in range(T):
        if t == 0:
            s2 = alpha0 + beta * sigma2_init + xvar[t]
        else:
            s2 = alpha0 + alpha1 * u[t - 1] * u[t - 1] + beta * sigma2[t - 1] + xvar[t]
        if s2 < sigma2_min:
            s2 = sigma2_min
        sigma2[t] = s2
        m = mu
        for i in range(p):
            if t - 1 - i >= 0:
                m += phi[i] * y[t - 1 - i]
        for j in range(q):
            if t - 1 - j >= 0:
                m += theta[j] * u[t - 1 - j]
        u[t] = y[t] - m
    return u, sigma2


def _simulate_recursion(z, xvar, mu, phi, theta, alpha0, alpha1, beta, sigma2_init, sigma2_min):
    """Generate a return path from standardized innovations z."""
    T = z.shape[0]
    p = phi.shape[0]
    q = theta.shape[0]
    y = np.empty(T)
    u = np.empty(T)
    sigma2 = np.empty(T)
    for t in range(T):
        if t == 0:
            s2 = alpha0 + beta * sigma2_init + xvar[t]
        else:
            s2 = alpha0 + alpha1 * u[t - 1] * u[t - 1] + beta * sigma2[t - 1] + xvar[t]
        if s2 < sigma2_min:
            s2 = sigma2_min
        sigma2[t] = s2
        u[t] = np.sqrt(s2) * z[t]
        m = mu
        for i in range(p):
            if t - 1 - i >= 0:
                m += phi[i] * y[t - 1 - i]
        for j in range(q):
            if t - 1 - j >= 0:
                m += theta[j] * u[t - 1 - j]
        y[t] = m + u[t]
    return y, u, sigma2


NUMBA_ENABLED = False
if not _DISABLED:
    try:
        from numba import njit

        _filter_recursion = njit(cache=True)(_filter_recursion)
        _simulate_recursion = njit(cache=True)(_simulate_recursion)
        NUMBA_ENABLED = True
    except ImportError:
        pass


def filter_recursion(y, xvar, mu, phi, theta, alpha0, alpha1, beta, sigma2_init, sigma2_min):
    return _filter_recursion(
        np.ascontiguousarray(y, dtype=np.float64),
        np.ascontiguousarray(xvar, dtype=np.float64),
        float(mu),
        np.ascontiguousarray(phi, dtype=np.float64),
        np.ascontiguousarray(theta, dtype=np.float64),
        float(alpha0),
        float(alpha1),
        float(beta),
        float(sigma2_init),
        float(sigma2_min),
    )


def simulate_recursion(z, xvar, mu, phi, theta, alpha0, alpha1, beta, sigma2_init, sigma2_min):
    return _simulate_recursion(
        np.ascontiguousarray(z, dtype=np.float64),
        np.ascontiguousarray(xvar, dtype=np.float64),
        float(mu),
        np.ascontiguousarray(phi, dtype=np.float64),
        np.ascontiguousarray(theta, dtype=np.float64),
        float(alpha0),
        float(alpha1),
        float(beta),
        float(sigma2_init),
        float(sigma2_min),
    )
