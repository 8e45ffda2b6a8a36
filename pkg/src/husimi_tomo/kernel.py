"""Dawson integral and the vacuum-generated Markov kernel.

The kernel that maps homodyne statistics to the Husimi function is

    M^{q,p}(theta, x) = 2 daw'(y),    y = x - q cos(theta) - p sin(theta),

evaluated here in closed form through daw'(y) = 1 - 2 y daw(y), and, for
validation, as the even Hermite series

    M = sum_k (-1)^k k! / (2^k (2k)!) H_{2k}(y).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln

from .states import PhasePoint

__all__ = [
    "dawson",
    "dawson_prime",
    "kernel_closed",
    "kernel_of_y",
    "kernel_series",
    "kernel_series_of_y",
    "hermite_poly",
    "shifted_argument",
    "SERIES_Y_MAX",
    "SERIES_K_MAX",
]

# Below the crossover the Maclaurin series loses < 1e-15 to cancellation;
# above it the continued fraction with _CF_DEPTH levels is converged to 1e-16.
_CROSSOVER = 2.0
_CF_DEPTH = 60
_SERIES_TERMS = 48

SERIES_Y_MAX = 6.0
SERIES_K_MAX = 60


def _dawson_series(x: np.ndarray) -> np.ndarray:
    # daw(x) = sum_k (-1)^k 2^k x^(2k+1) / (2k+1)!!
    x2 = x * x
    term = x.copy()
    total = x.copy()
    for k in range(1, _SERIES_TERMS):
        term *= -2.0 * x2 / (2 * k + 1)
        total += term
    return total


def _dawson_cfrac(x: np.ndarray) -> np.ndarray:
    # daw(x) = x / (1 + 2x^2 - 4x^2 / (3 + 2x^2 - 8x^2 / (5 + 2x^2 - ...)))
    x2 = x * x
    f = (2 * _CF_DEPTH + 1) + 2.0 * x2
    for k in range(_CF_DEPTH, 0, -1):
        f = (2 * k - 1) + 2.0 * x2 - 4.0 * k * x2 / f
    return x / f


def dawson(x):
    """Dawson integral daw(x) = exp(-x^2) * int_0^x exp(t^2) dt.

    Absolute error below 1e-12 for all finite x. The function is evaluated on
    |x| and the sign restored, so daw(-x) == -daw(x) holds bit for bit.
    """
    xa = np.asarray(x, dtype=float)
    ax = np.abs(xa)
    out = np.empty_like(ax)
    small = ax < _CROSSOVER
    if np.any(small):
        out[small] = _dawson_series(ax[small])
    if not np.all(small):
        big = ~small
        out[big] = _dawson_cfrac(ax[big])
    out = np.copysign(out, xa)
    return float(out) if out.ndim == 0 else out


def dawson_prime(x):
    """daw'(x) = 1 - 2 x daw(x), from the defining ODE."""
    xa = np.asarray(x, dtype=float)
    return 1.0 - 2.0 * xa * dawson(xa)


def shifted_argument(pt: PhasePoint, theta, x):
    """y = x - q cos(theta) - p sin(theta)."""
    return np.asarray(x, dtype=float) - pt.q * np.cos(theta) - pt.p * np.sin(theta)


def kernel_of_y(y):
    """2 daw'(y) = 2 - 4 y daw(y); even in y, bounded by 2, vanishing at infinity."""
    ya = np.abs(np.asarray(y, dtype=float))
    out = 2.0 - 4.0 * ya * dawson(ya)
    return float(out) if np.ndim(out) == 0 else out


def kernel_closed(pt: PhasePoint, theta, x):
    """Markov kernel M^{q,p}(theta, x) in closed form. Broadcasts over theta and x."""
    return kernel_of_y(shifted_argument(pt, theta, x))


def hermite_poly(n: int, x):
    """Physicists' Hermite polynomial H_n(x) by the three-term recurrence.

    Overflows for large n*|x|; use the scaled evaluation inside the kernel
    series for anything beyond moderate degrees.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    x = np.asarray(x, dtype=float)
    h_prev = np.ones_like(x)
    if n == 0:
        return float(h_prev) if h_prev.ndim == 0 else h_prev
    h = 2.0 * x
    for k in range(1, n):
        h_prev, h = h, 2.0 * x * h - 2.0 * k * h_prev
    return float(h) if h.ndim == 0 else h


def _scaled_hermite(n_max: int, y: np.ndarray) -> np.ndarray:
    # Ht_n = H_n / sqrt(2^n n!) obeys Ht_{n+1} = sqrt(2/(n+1)) y Ht_n - sqrt(n/(n+1)) Ht_{n-1}.
    out = np.empty((n_max + 1,) + y.shape)
    out[0] = 1.0
    if n_max >= 1:
        out[1] = math.sqrt(2.0) * y
    for n in range(1, n_max):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * y * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


def kernel_series_of_y(y, k_max: int):
    """Partial sum through k = k_max of the Hermite series for 2 daw'(y).

    Each term (-1)^k k!/(2^k (2k)!) H_{2k}(y) is rewritten as
    (-1)^k [k!/sqrt((2k)!)] Ht_{2k}(y) and assembled from logarithms, since
    k!/(2k)! and H_{2k} separately leave double range near k ~ 30.
    """
    if k_max < 0 or k_max > SERIES_K_MAX:
        raise ValueError(f"k_max must lie in [0, {SERIES_K_MAX}], got {k_max}")
    ya = np.asarray(y, dtype=float)
    if np.any(np.abs(ya) > SERIES_Y_MAX):
        raise ValueError(f"series only validated for |y| <= {SERIES_Y_MAX}")
    ht = _scaled_hermite(2 * k_max, ya)[0::2]
    k = np.arange(k_max + 1)
    log_coef = gammaln(k + 1) - 0.5 * gammaln(2 * k + 1)
    sign = np.where(k % 2 == 0, 1.0, -1.0)
    shape = (k_max + 1,) + (1,) * ya.ndim
    with np.errstate(divide="ignore"):
        log_ht = np.log(np.abs(ht))
    terms = sign.reshape(shape) * np.sign(ht) * np.exp(log_coef.reshape(shape) + log_ht)
    out = terms.sum(axis=0)
    return float(out) if out.ndim == 0 else out


def kernel_series(pt: PhasePoint, theta, x, k_max: int):
    return kernel_series_of_y(shifted_argument(pt, theta, x), k_max)
