"""Regularized incomplete beta function and Student-t tail probabilities.

The continued-fraction evaluation follows the classic modified Lentz scheme
and is accurate to better than 1e-12 over the parameter range used by the
t-tests (a, b >= 0.5). Everything is vectorized over numpy arrays.
"""

from __future__ import annotations

import numpy as np
from numpy import log, exp
from math import lgamma

_EPS = 1e-15
_FPMIN = 1e-300
_MAX_ITER = 500

_lgamma = np.vectorize(lgamma, otypes=[np.float64])


def _betacf(a, b, x):
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < _FPMIN, _FPMIN, d)
    d = 1.0 / d
    h = d.copy()
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _FPMIN, _FPMIN, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _FPMIN, _FPMIN, c)
        d = 1.0 / d
        h = h * d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _FPMIN, _FPMIN, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _FPMIN, _FPMIN, c)
        d = 1.0 / d
        delta = d * c
        h = h * delta
        if np.all(np.abs(delta - 1.0) < _EPS):
            return h
    raise RuntimeError("incomplete beta continued fraction did not converge")


def betainc(a, b, x):
    """Regularized incomplete beta function I_x(a, b), elementwise."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    a, b, x = np.broadcast_arrays(a, b, x)
    if np.any((x < 0.0) | (x > 1.0)):
        raise ValueError("x must lie in [0, 1]")
    if np.any(a <= 0.0) or np.any(b <= 0.0):
        raise ValueError("a and b must be positive")
    out = np.empty_like(x)
    lo = x == 0.0
    hi = x == 1.0
    out[lo] = 0.0
    out[hi] = 1.0
    mid = ~(lo | hi)
    if np.any(mid):
        am, bm, xm = a[mid], b[mid], x[mid]
        front = exp(
            _lgamma(am + bm) - _lgamma(am) - _lgamma(bm)
            + am * log(xm) + bm * np.log1p(-xm)
        )
        res = np.empty_like(xm)
        direct = xm < (am + 1.0) / (am + bm + 2.0)
        if np.any(direct):
            res[direct] = (
                front[direct]
                * _betacf(am[direct], bm[direct], xm[direct])
                / am[direct]
            )
        flipped = ~direct
        if np.any(flipped):
            res[flipped] = 1.0 - (
                front[flipped]
                * _betacf(bm[flipped], am[flipped], 1.0 - xm[flipped])
                / bm[flipped]
            )
        out[mid] = res
    return out if out.ndim else float(out)


def student_t_two_sided_p(t, df):
    """P(|T_df| >= |t|) via I_x(df/2, 1/2) with x = df / (df + t^2).

    Infinite t gives p = 0; t = 0 gives p = 1. df may be fractional.
    """
    t = np.asarray(t, dtype=np.float64)
    df = np.asarray(df, dtype=np.float64)
    t, df = np.broadcast_arrays(t, df)
    if np.any(df <= 0.0):
        raise ValueError("degrees of freedom must be positive")
    p = np.zeros_like(t, dtype=np.float64)
    finite = np.isfinite(t)
    if np.any(finite):
        tf = t[finite]
        dff = df[finite]
        x = dff / (dff + tf * tf)
        p[finite] = betainc(dff / 2.0, 0.5, x)
    return p if p.ndim else float(p)
