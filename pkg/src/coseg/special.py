"""Special functions behind the F, chi-squared and Z p-values.

Incomplete beta and gamma follow the classic continued-fraction / series
recipes (modified Lentz evaluation). Each upper tail is computed directly
rather than as ``1 - cdf`` so tiny p-values keep their relative accuracy.
"""

from __future__ import annotations

import math

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 10_000


def _betacf(x: float, a: float, b: float) -> float:
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
        d = _TINY if abs(d) < _TINY else d
        c = 1.0 + aa / c
        c = _TINY if abs(c) < _TINY else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = _TINY if abs(d) < _TINY else d
        c = 1.0 + aa / c
        c = _TINY if abs(c) < _TINY else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b})")


def regularized_incomplete_beta(x: float, a: float, b: float) -> float:
    """Regularized incomplete beta function ``I_x(a, b)``."""
    if not (a > 0 and b > 0):
        raise ValueError(f"a and b must be positive, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
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
        value = front * _betacf(x, a, b) / a
    else:
        value = 1.0 - front * _betacf(1.0 - x, b, a) / b
    return min(1.0, max(0.0, value))


def _gamma_series(a: float, x: float) -> float:
    ap = a
    total = term = 1.0 / a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            return total * math.exp(-x + a * math.log(x) - math.lgamma(a))
    raise ArithmeticError(f"incomplete gamma series did not converge (a={a}, x={x})")


def _gamma_cf(a: float, x: float) -> float:
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        d = _TINY if abs(d) < _TINY else d
        c = b + an / c
        c = _TINY if abs(c) < _TINY else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h
    raise ArithmeticError(f"incomplete gamma fraction did not converge (a={a}, x={x})")


def _check_gamma(x: float, k: float, scale: float) -> float:
    if not (k > 0 and scale > 0):
        raise ValueError(f"shape and scale must be positive, got k={k}, scale={scale}")
    if not x >= 0:
        raise ValueError(f"x must be non-negative, got {x}")
    return x / scale


def gamma_cdf(x: float, k: float, scale: float = 1.0) -> float:
    """Gamma(shape ``k``, ``scale``) CDF, i.e. the regularized lower gamma P(k, x/scale)."""
    z = _check_gamma(x, k, scale)
    if z == 0.0:
        return 0.0
    if math.isinf(z):
        return 1.0
    if z < k + 1.0:
        return min(1.0, _gamma_series(k, z))
    return max(0.0, 1.0 - _gamma_cf(k, z))


def gamma_sf(x: float, k: float, scale: float = 1.0) -> float:
    z = _check_gamma(x, k, scale)
    if z == 0.0:
        return 1.0
    if math.isinf(z):
        return 0.0
    if z < k + 1.0:
        return max(0.0, 1.0 - _gamma_series(k, z))
    return min(1.0, _gamma_cf(k, z))


def chi2_cdf(x: float, df: float) -> float:
    return gamma_cdf(x, df / 2.0, 2.0)


def chi2_sf(x: float, df: float) -> float:
    return gamma_sf(x, df / 2.0, 2.0)


def normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def normal_two_sided_p(z: float) -> float:
    return math.erfc(abs(z) / math.sqrt(2.0))


def f_sf(f: float, d1: float, d2: float) -> float:
    """Upper tail ``P(F > f)`` of the F(d1, d2) distribution."""
    if not (d1 > 0 and d2 > 0):
        raise ValueError(f"degrees of freedom must be positive, got {d1}, {d2}")
    if f <= 0:
        return 1.0
    if math.isinf(f):
        return 0.0
    return regularized_incomplete_beta(d2 / (d2 + d1 * f), d2 / 2.0, d1 / 2.0)
