"""Truncated evaluation of the would-be inverse kernel.

Solving for a kernel N^{theta,x}(u, v) that would rebuild the homodyne
statistics from the Husimi distribution leads, after a double Fourier
transform, to

    (1/(4 pi^2 sqrt(pi))) iint exp(-qt^2/2 + pt^2/2 + i qt alpha + i pt beta - x^2) dqt dpt,

    alpha = -u sin(theta) + v cos(theta),   beta = 2x - u cos(theta) - v sin(theta).

The exp(+pt^2/2) factor makes the integral diverge. Here it is cut off to
the square [-R, R]^2, where it factors into two 1-D integrals, and
evaluated for growing R. This shows the divergence numerically; it is not
a proof that no inverse exists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

__all__ = [
    "DivergenceScan",
    "partial_inverse_integral",
    "partial_inverse_factors",
    "partial_inverse_integral_2d",
    "divergence_scan",
    "R_MAX",
]

R_MAX = 8.0
_PREFACTOR = 1.0 / (4.0 * math.pi**2 * math.sqrt(math.pi))


@dataclass(frozen=True)
class DivergenceScan:
    radii: np.ndarray
    magnitudes: np.ndarray

    def __post_init__(self):
        radii = np.asarray(self.radii, dtype=float)
        mags = np.asarray(self.magnitudes, dtype=float)
        if radii.ndim != 1 or radii.shape != mags.shape:
            raise ValueError("radii and magnitudes must be aligned 1-D arrays")
        if np.any(radii <= 0) or np.any(np.diff(radii) <= 0):
            raise ValueError("radii must be positive and strictly increasing")
        if not np.all(np.isfinite(mags)) or np.any(mags < 0):
            raise ValueError("magnitudes must be finite and nonnegative")
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "magnitudes", mags)

    def growth_residual(self) -> np.ndarray:
        """log(magnitude) - R^2/2 per radius."""
        return np.log(self.magnitudes) - 0.5 * self.radii**2


def _frequencies(theta, x, u, v):
    alpha = -u * math.sin(theta) + v * math.cos(theta)
    beta = 2.0 * x - u * math.cos(theta) - v * math.sin(theta)
    return alpha, beta


def _node_count(R, alpha, beta):
    return int(math.ceil(32 + 8 * R * (1 + abs(alpha) + abs(beta))))


def _check_radius(R):
    if not (R > 0) or R > R_MAX:
        raise ValueError(f"R must lie in (0, {R_MAX:g}], got {R!r}")


def _rule(R, n):
    t, w = leggauss(n)
    return R * t, R * w


def partial_inverse_factors(theta: float, x: float, u: float, v: float, R: float):
    """The two 1-D factors (int e^{-qt^2/2 + i alpha qt}, int e^{pt^2/2 + i beta pt}) over [-R, R]."""
    _check_radius(R)
    alpha, beta = _frequencies(theta, x, u, v)
    nodes, weights = _rule(R, _node_count(R, alpha, beta))
    f_q = np.sum(weights * np.exp(-0.5 * nodes**2 + 1j * alpha * nodes))
    f_p = np.sum(weights * np.exp(0.5 * nodes**2 + 1j * beta * nodes))
    return complex(f_q), complex(f_p)


def partial_inverse_integral(theta: float, x: float, u: float, v: float, R: float) -> complex:
    """Would-be inverse kernel value N^{theta,x}(u, v) with the Fourier integral cut to [-R, R]^2.

    Raises ValueError for R > 8.
    """
    f_q, f_p = partial_inverse_factors(theta, x, u, v, R)
    return _PREFACTOR * math.exp(-x * x) * f_q * f_p


def partial_inverse_integral_2d(theta: float, x: float, u: float, v: float, R: float) -> complex:
    """Same quantity from the tensor-product rule on the square, without factoring."""
    _check_radius(R)
    alpha, beta = _frequencies(theta, x, u, v)
    nodes, weights = _rule(R, _node_count(R, alpha, beta))
    qt = nodes[:, None]
    pt = nodes[None, :]
    integrand = np.exp(-0.5 * qt**2 + 0.5 * pt**2 + 1j * (alpha * qt + beta * pt) - x * x)
    return complex(_PREFACTOR * (weights[:, None] * weights[None, :] * integrand).sum())


def divergence_scan(theta: float, x: float, u: float, v: float, radii) -> DivergenceScan:
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or radii.size == 0:
        raise ValueError("radii must be a nonempty 1-D sequence")
    if np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be strictly increasing")
    mags = np.array([abs(partial_inverse_integral(theta, x, u, v, float(r))) for r in radii])
    return DivergenceScan(radii, mags)
