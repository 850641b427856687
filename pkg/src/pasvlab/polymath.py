"""Hermite and Legendre kernels plus power-series differentiation oracles.

Everything here accepts numpy arrays where it makes sense; degrees are plain
ints. Factorial-bearing coefficients go through ``lgamma`` so that orders up to
``MAX_DEGREE`` stay well conditioned.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError

MAX_DEGREE = 64
MAX_ORACLE_DEGREE = 20


def log_factorial(n: int) -> float:
    return math.lgamma(n + 1)


def _check_degree(n: int, bound: int = MAX_DEGREE) -> int:
    if int(n) != n or n < 0:
        raise DomainError(f"degree must be a nonnegative integer, got {n!r}")
    if n > bound:
        raise DomainError(f"degree {n} exceeds supported bound {bound}")
    return int(n)


def hermite(n: int, z):
    """Physicists' Hermite polynomial H_n(z) by three-term recurrence.

    Works for real or complex scalars and arrays.
    """
    n = _check_degree(n)
    z = np.asarray(z)
    h_prev = np.ones_like(z, dtype=np.result_type(z, float))
    if n == 0:
        return h_prev[()]
    h = 2 * z * h_prev
    for k in range(1, n):
        h_prev, h = h, 2 * z * h - 2 * k * h_prev
    return h[()]


def hermite_explicit(n: int, z):
    """H_n(z) from the explicit finite sum; independent check on ``hermite``."""
    n = _check_degree(n)
    z = np.asarray(z)
    total = np.zeros_like(z, dtype=np.result_type(z, float))
    for l in range(n // 2 + 1):
        coeff = math.exp(log_factorial(n) - log_factorial(l) - log_factorial(n - 2 * l))
        total = total + (-1) ** l * coeff * (2 * z) ** (n - 2 * l)
    return total[()]


def scaled_hermite(n: int, g, e):
    """Return g^{n/2} H_n(e / sqrt(g)) as a polynomial in (e, g).

    The recurrence y_{k+1} = 2 e y_k - 2 k g y_{k-1} never divides by g, so
    the value stays finite (and exact) at g = 0.
    """
    n = _check_degree(n)
    e = np.asarray(e)
    y_prev = np.ones_like(e, dtype=np.result_type(e, float))
    if n == 0:
        return y_prev[()]
    y = 2 * e * y_prev
    for k in range(1, n):
        y_prev, y = y, 2 * e * y - 2 * k * g * y_prev
    return y[()]


def legendre(n: int, x):
    """Legendre polynomial P_n(x) by the Bonnet recurrence; any real x."""
    n = _check_degree(n)
    x = np.asarray(x, dtype=float)
    p_prev = np.ones_like(x)
    if n == 0:
        return p_prev[()]
    p = x.copy()
    for k in range(1, n):
        p_prev, p = p, ((2 * k + 1) * x * p - k * p_prev) / (k + 1)
    return p[()]


def legendre_product_form(n: int, x):
    """P_n(x) written as x^n times a polynomial in (1 - 1/x^2).

    Singular at x = 0, where the standard form is not.
    """
    n = _check_degree(n)
    x = np.asarray(x, dtype=float)
    if np.any(x == 0):
        raise DomainError("product form of P_n is singular at x = 0")
    u = 1.0 - 1.0 / (x * x)
    total = np.zeros_like(x)
    for l in range(n // 2 + 1):
        coeff = math.exp(
            log_factorial(n) - 2 * l * math.log(2) - 2 * log_factorial(l) - log_factorial(n - 2 * l)
        )
        total = total + coeff * u**l
    return (x**n * total)[()]


def generating_derivative(m: int, c: float) -> float:
    """d^{2m}/dt^m dtau^m of exp(-t^2 - tau^2 + 2 c tau t) at the origin.

    Expands each exponential factor and keeps the (n, l, k) terms whose
    monomial tau^{2n+k} t^{2l+k} survives the derivative.
    """
    m = _check_degree(m, MAX_ORACLE_DEGREE)
    total = 0.0
    for n in range(m + 1):
        for l in range(m + 1):
            for k in range(m + 1):
                if 2 * n + k != m or 2 * l + k != m:
                    continue
                # d^m/dtau^m tau^m = m!, same for t
                log_mag = 2 * log_factorial(m) - log_factorial(n) - log_factorial(l) - log_factorial(k)
                total += (-1) ** (n + l) * math.exp(log_mag) * (2 * c) ** k
    return total


def series_exp(coeffs, order: int) -> np.ndarray:
    """Taylor coefficients y_0..y_order of exp(f) given those of f.

    Uses y' = f' y, i.e. n y_n = sum_k k f_k y_{n-k}.
    """
    f = np.zeros(order + 1, dtype=complex)
    c = np.asarray(coeffs, dtype=complex)[: order + 1]
    f[: len(c)] = c
    y = np.zeros(order + 1, dtype=complex)
    y[0] = np.exp(f[0])
    for n in range(1, order + 1):
        k = np.arange(1, n + 1)
        y[n] = np.sum(k * f[k] * y[n - k]) / n
    return y


def series_exp_2d(coeffs, order: int) -> np.ndarray:
    """Bivariate Taylor coefficients Y[i, j] of exp(F(t, tau)).

    ``coeffs[i, j]`` multiplies t^i tau^j. The t-direction uses the same
    recurrence as ``series_exp`` with tau-series convolution in place of
    products.
    """
    f = np.zeros((order + 1, order + 1), dtype=complex)
    c = np.asarray(coeffs, dtype=complex)[: order + 1, : order + 1]
    f[: c.shape[0], : c.shape[1]] = c
    y = np.zeros_like(f)
    y[0] = series_exp(f[0], order)
    for i in range(1, order + 1):
        acc = np.zeros(order + 1, dtype=complex)
        for a in range(1, i + 1):
            acc += a * np.convolve(f[a], y[i - a])[: order + 1]
        y[i] = acc / i
    return y


def gaussian_double_derivative(m: int, g: float, e) -> complex:
    """d^m/dv^m exp(-g v^2 + 2 v e) at v = 0, by series differentiation.

    Closed form is g^{m/2} H_m(e/sqrt(g)); this routine deliberately does not
    use it so it can serve as an oracle.
    """
    m = _check_degree(m, MAX_ORACLE_DEGREE)
    if not g > 0:
        raise DomainError(f"g must be positive, got {g}")
    y = series_exp([0.0, 2 * e, -g], m)
    return complex(y[m] * math.factorial(m))


def bivariate_series_derivative(m: int, c: float) -> float:
    """Series-differentiation oracle for ``generating_derivative``."""
    m = _check_degree(m, MAX_ORACLE_DEGREE)
    f = np.zeros((3, 3))
    f[2, 0] = -1.0
    f[0, 2] = -1.0
    f[1, 1] = 2 * c
    y = series_exp_2d(f, m)
    return float((y[m, m] * math.factorial(m) ** 2).real)


def pairwise_sum(terms):
    """Sum a sequence of equally shaped arrays by recursive halving."""
    terms = list(terms)
    if not terms:
        raise ValueError("pairwise_sum of empty sequence")
    while len(terms) > 1:
        paired = [terms[i] + terms[i + 1] for i in range(0, len(terms) - 1, 2)]
        if len(terms) % 2:
            paired.append(terms[-1])
        terms = paired
    return terms[0]
