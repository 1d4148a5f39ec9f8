"""Standardized skewed Student-t innovation law (Fernandez-Steel skewing).

All functions work on the zero-mean unit-variance variable. The skew
parameter xi > 0 tilts mass between the two half-lines (xi = 1 is the
symmetric standardized Student-t); nu > 2 so the variance is finite.
"""

from __future__ import annotations

import numpy as np
from scipy import special, stats as sps


def _check_params(nu: float, xi: float) -> None:
    if not nu > 2:
        raise ValueError(f"tail parameter nu must be > 2, got {nu}")
    if not xi > 0:
        raise ValueError(f"skew parameter xi must be > 0, got {xi}")


def _std_t_scale(nu: float) -> float:
    # Student-t with nu df has variance nu/(nu-2); divide by this to get unit variance.
    return np.sqrt(nu / (nu - 2.0))


def _fs_constants(nu: float, xi: float):
    """Mean and std of the unstandardized Fernandez-Steel variable.

    m1 is the absolute first moment of the unit-variance Student-t.
    """
    m1 = 2.0 * np.sqrt(nu - 2.0) / (nu - 1.0) / special.beta(nu / 2.0, 0.5)
    mean = m1 * (xi - 1.0 / xi)
    var = (1.0 - m1**2) * (xi**2 + 1.0 / xi**2) + 2.0 * m1**2 - 1.0
    return mean, np.sqrt(var)


def skewt_logpdf(z, nu: float, xi: float):
    _check_params(nu, xi)
    z = np.asarray(z, dtype=float)
    mean, sd = _fs_constants(nu, xi)
    w = sd * z + mean  # unstandardized coordinate
    c = _std_t_scale(nu)
    # unit-variance t log-density evaluated at w/xi (right) or w*xi (left)
    arg = np.where(w >= 0, w / xi, w * xi)
    log_t = sps.t.logpdf(arg * c, nu) + np.log(c)
    out = np.log(2.0 / (xi + 1.0 / xi)) + log_t + np.log(sd)
    return out if out.ndim else float(out)


def skewt_pdf(z, nu: float, xi: float):
    return np.exp(skewt_logpdf(z, nu, xi))


def skewt_cdf(z, nu: float, xi: float):
    _check_params(nu, xi)
    z = np.asarray(z, dtype=float)
    mean, sd = _fs_constants(nu, xi)
    w = sd * z + mean
    c = _std_t_scale(nu)
    lo = 2.0 / (1.0 + xi**2) * sps.t.cdf(w * xi * c, nu)
    hi = 1.0 / (1.0 + xi**2) + 2.0 * xi**2 / (1.0 + xi**2) * (sps.t.cdf(w / xi * c, nu) - 0.5)
    out = np.where(w < 0, lo, hi)
    return out if out.ndim else float(out)


def skewt_quantile(p, nu: float, xi: float):
    """Inverse CDF via the closed-form piecewise inversion of the skewing."""
    _check_params(nu, xi)
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0) | (p >= 1)):
        raise ValueError("probability must lie strictly inside (0, 1)")
    mean, sd = _fs_constants(nu, xi)
    c = _std_t_scale(nu)
    p0 = 1.0 / (1.0 + xi**2)  # mass left of the mode-side split point w = 0
    w_lo = sps.t.ppf((1.0 + xi**2) * p / 2.0, nu) / (xi * c)
    w_hi = sps.t.ppf((p - p0) * (1.0 + xi**2) / (2.0 * xi**2) + 0.5, nu) * xi / c
    w = np.where(p < p0, w_lo, w_hi)
    out = (w - mean) / sd
    return out if out.ndim else float(out)


def skewt_rvs(n: int, nu: float, xi: float, rng: np.random.Generator):
    """Inverse-transform draws; deterministic given the generator state."""
    u = rng.uniform(size=n)
    return np.asarray(skewt_quantile(u, nu, xi))


def student_t_logpdf(z, nu: float):
    """Unit-variance Student-t log-density (the xi = 1 special case)."""
    z = np.asarray(z, dtype=float)
    c = _std_t_scale(nu)
    return sps.t.logpdf(z * c, nu) + np.log(c)


def normal_logpdf(z):
    z = np.asarray(z, dtype=float)
    return -0.5 * (np.log(2.0 * np.pi) + z**2)
