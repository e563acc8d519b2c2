"""Distribution functions used by the statistics battery.

The regularized incomplete beta function is evaluated by its continued
fraction (modified Lentz); the F and Student t distributions are built on
top of it.  The studentized range distribution is evaluated by a double
Gauss-Legendre quadrature over the range of ``k`` standard normals and the
chi distribution of the pooled standard deviation.
"""

import math

import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtr

__all__ = [
    "betainc",
    "f_cdf",
    "f_sf",
    "t_cdf",
    "t_ppf",
    "studentized_range_cdf",
    "studentized_range_sf",
    "studentized_range_ppf",
    "QuadratureError",
]

_EPS = 1e-15
_TINY = 1e-300
_MAX_ITER = 10000


class QuadratureError(ArithmeticError):
    """Raised when a numerical integral or series fails to converge."""


def _beta_cf(a, b, x):
    # Modified Lentz evaluation of the incomplete beta continued fraction.
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise QuadratureError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a, b, x):
    """Regularized incomplete beta function I_x(a, b).

    Parameters
    ----------
    a, b : float
        Positive shape parameters (need not be integers).
    x : float
        Upper integration limit in [0, 1].

    Returns
    -------
    float
    """
    if a <= 0 or b <= 0:
        raise ValueError("shape parameters must be positive")
    if x < 0 or x > 1:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def f_cdf(x, df1, df2):
    """CDF of the F distribution; ``df2`` may be fractional."""
    if df1 <= 0 or df2 <= 0:
        raise ValueError("degrees of freedom must be positive")
    if x <= 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    return betainc(df1 / 2.0, df2 / 2.0, df1 * x / (df1 * x + df2))


def f_sf(x, df1, df2):
    """Upper tail of the F distribution, computed without cancellation."""
    if df1 <= 0 or df2 <= 0:
        raise ValueError("degrees of freedom must be positive")
    if x <= 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    return betainc(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * x))


def t_cdf(t, df):
    """CDF of Student's t distribution."""
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    if math.isinf(t):
        return 1.0 if t > 0 else 0.0
    tail = 0.5 * betainc(df / 2.0, 0.5, df / (df + t * t))
    return 1.0 - tail if t > 0 else tail


def t_ppf(p, df):
    """Quantile of Student's t distribution, by root finding on :func:`t_cdf`."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly inside (0, 1)")
    if p == 0.5:
        return 0.0
    if p < 0.5:
        return -t_ppf(1.0 - p, df)
    hi = 1.0
    while t_cdf(hi, df) < p:
        hi *= 2.0
    return brentq(lambda t: t_cdf(t, df) - p, 0.0, hi, xtol=1e-13, rtol=1e-14, maxiter=500)


def _gauss_legendre_panels(lo, hi, n_panels, order):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    x = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    return x, w


# Inner integral over the location of the smallest of the k normals.
_Z, _ZW = _gauss_legendre_panels(-9.0, 9.0, 18, 12)
_PHI_Z = np.exp(-0.5 * _Z**2) / math.sqrt(2.0 * math.pi)


def _range_cdf(w, k):
    """P(range of k iid standard normals <= w), vectorized over ``w``."""
    w = np.atleast_1d(np.asarray(w, dtype=float))[:, None]
    z = _Z[None, :]
    upper = z > -0.5 * w
    # Difference of upper tails avoids cancellation where both CDFs are near 1.
    diff = np.where(upper, ndtr(-z) - ndtr(-(z + w)), ndtr(z + w) - ndtr(z))
    diff = np.clip(diff, 0.0, 1.0)
    integrand = _PHI_Z[None, :] * diff ** (k - 1)
    out = k * integrand @ _ZW
    return np.clip(out, 0.0, 1.0)


def _log_s_nodes(df):
    # Log-chi density of s = sqrt(chi2_df / df): peaked at u = 0, width ~ 1/sqrt(2 df),
    # left tail ~ exp(df*u), right tail ~ exp(-df*exp(2u)/2).
    sigma = 1.0 / math.sqrt(2.0 * df)
    lo = -min(max(45.0 / df, 10.0 * sigma), 60.0)
    hi = max(0.5 * math.log1p(110.0 / df) + 0.25, 10.0 * sigma)
    n_panels = int(min(400, max(12, math.ceil((hi - lo) * math.sqrt(2.0 * df) * 1.2))))
    u, wu = _gauss_legendre_panels(lo, hi, n_panels, 10)
    log_norm = 0.5 * df * math.log(df) - math.lgamma(0.5 * df) - (0.5 * df - 1.0) * math.log(2.0)
    log_dens = log_norm + df * u - 0.5 * df * np.exp(2.0 * u)
    return np.exp(u), wu * np.exp(log_dens)


def studentized_range_cdf(q, k, df):
    """CDF of the studentized range distribution.

    Parameters
    ----------
    q : float
        Studentized range value, ``q >= 0``.
    k : int
        Number of groups (>= 2).
    df : float
        Degrees of freedom of the variance estimate; ``math.inf`` gives the
        distribution of the range of ``k`` standard normals.

    Returns
    -------
    float
        ``P(Q <= q)``, absolute error well below 5e-5.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    if df <= 0:
        raise ValueError("df must be positive")
    if q <= 0:
        return 0.0
    if math.isinf(q):
        return 1.0
    if math.isinf(df) or df > 1e5:
        return float(_range_cdf(q, k)[0])
    s, ws = _log_s_nodes(df)
    total = float(ws @ _range_cdf(q * s, k))
    mass = float(ws.sum())
    if abs(mass - 1.0) > 1e-7:
        raise QuadratureError(f"chi density quadrature lost mass ({mass!r}) for df={df}")
    return min(max(total, 0.0), 1.0)


def studentized_range_sf(q, k, df):
    """Upper tail ``P(Q > q)``; the Tukey p-value."""
    return 1.0 - studentized_range_cdf(q, k, df)


def studentized_range_ppf(p, k, df):
    """Quantile of the studentized range distribution (e.g. ``p=0.95`` critical value)."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly inside (0, 1)")
    hi = 4.0
    while studentized_range_cdf(hi, k, df) < p:
        hi *= 2.0
        if hi > 1e6:
            raise QuadratureError("could not bracket the studentized range quantile")
    return brentq(lambda q: studentized_range_cdf(q, k, df) - p, 0.0, hi, xtol=1e-10, rtol=1e-12)
