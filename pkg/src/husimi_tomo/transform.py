"""Husimi function from homodyne data through the Markov kernel.

The kernel average under the homodyne tomography law (theta uniform on
[0, 2pi), x ~ rho^{Q_theta}) is the coherent-state expectation <z|rho|z>:

    <z|rho|z> = int_0^{2pi} dtheta/2pi int dx  M^{q,p}(theta, x) rho^{Q_theta}(x),

and the Husimi density is that divided by 2pi. Deterministic path: trapezoid
rule in theta, Gauss-Legendre in x. Monte Carlo path: plain sample mean of
M/2pi over homodyne samples.

Also hosts the numerical identity checks that back the construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import mpmath
import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import NumericError
from .kernel import kernel_of_y
from .quadrature import (
    TWO_PI,
    QuadratureScheme,
    SampleBatch,
    quad_density,
    quad_density_table,
)
from .states import DensityMatrix, PhasePoint, wigner_points

__all__ = [
    "QuadratureScheme",
    "ScalarField",
    "MCEstimate",
    "husimi_from_kernel",
    "husimi_from_kernel_points",
    "husimi_kernel_field",
    "husimi_mc_estimate",
    "husimi_mc_field",
    "coherent_identity_check",
    "hermite_gaussian_moment_check",
    "radon_wigner_check",
]

_MASS_TOL = 1e-9
_POINT_CHUNK = 16


@dataclass(frozen=True)
class ScalarField:
    """Real values on the tensor grid linspace(q_min, q_max, n_q) x linspace(p_min, p_max, n_p)."""

    q_min: float
    q_max: float
    p_min: float
    p_max: float
    n_q: int
    n_p: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not (self.q_min < self.q_max and self.p_min < self.p_max):
            raise ValueError("grid bounds must satisfy min < max")
        if self.n_q < 1 or self.n_p < 1:
            raise ValueError("grid sizes must be positive")
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.n_q, self.n_p):
            raise ValueError(f"values shape {vals.shape} != ({self.n_q}, {self.n_p})")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def q(self) -> np.ndarray:
        return np.linspace(self.q_min, self.q_max, self.n_q)

    @property
    def p(self) -> np.ndarray:
        return np.linspace(self.p_min, self.p_max, self.n_p)

    def rows(self):
        """(q, p, value) triples in row-major order, q outer."""
        for i, q in enumerate(self.q.tolist()):
            for j, p in enumerate(self.p.tolist()):
                yield q, p, float(self.values[i, j])


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    stderr: float
    n: int


# ---------------------------------------------------------------------------
# Deterministic transform
# ---------------------------------------------------------------------------


def _density_on_scheme(rho: DensityMatrix, scheme: QuadratureScheme):
    thetas = scheme.thetas()
    xs, wx = scheme.x_rule()
    dens = quad_density_table(rho, thetas, xs)
    mass = dens @ wx
    worst = np.max(np.abs(mass - 1.0))
    if worst > _MASS_TOL:
        raise NumericError(
            f"quadrature density mass on [-{scheme.x_limit:g}, {scheme.x_limit:g}] is off by "
            f"{worst:.3g}; widen x_limit or add x_nodes"
        )
    return thetas, xs, wx, dens


def _kernel_average(q, p, thetas, xs, weighted):
    # weighted[j, i] = w_i * f(theta_j, x_i) / T; returns sum_ji M(y_ji) weighted[j, i]
    # for each point, with y = x - q cos(theta) - p sin(theta).
    q = np.atleast_1d(q)
    p = np.atleast_1d(p)
    cos_t, sin_t = np.cos(thetas), np.sin(thetas)
    out = np.empty(q.size)
    for start in range(0, q.size, _POINT_CHUNK):
        sl = slice(start, start + _POINT_CHUNK)
        a = q[sl, None] * cos_t[None, :] + p[sl, None] * sin_t[None, :]
        y = xs[None, None, :] - a[:, :, None]
        out[sl] = np.einsum("kji,ji->k", kernel_of_y(y), weighted)
    return out


def husimi_from_kernel(rho: DensityMatrix, pt: PhasePoint, scheme: QuadratureScheme | None = None) -> float:
    """Husimi function at ``pt`` obtained by applying the kernel to the quadrature densities."""
    if scheme is None:
        scheme = QuadratureScheme.for_dim(rho.dim)
    thetas, xs, wx, dens = _density_on_scheme(rho, scheme)
    weighted = dens * wx[None, :] / (scheme.theta_nodes * TWO_PI)
    return float(_kernel_average(pt.q, pt.p, thetas, xs, weighted)[0])


def husimi_from_kernel_points(rho: DensityMatrix, q, p, scheme: QuadratureScheme | None = None) -> np.ndarray:
    """Kernel transform at the paired points (q[i], p[i]); densities are tabulated once."""
    if scheme is None:
        scheme = QuadratureScheme.for_dim(rho.dim)
    q, p = np.broadcast_arrays(np.asarray(q, dtype=float), np.asarray(p, dtype=float))
    thetas, xs, wx, dens = _density_on_scheme(rho, scheme)
    weighted = dens * wx[None, :] / (scheme.theta_nodes * TWO_PI)
    return _kernel_average(q.ravel(), p.ravel(), thetas, xs, weighted).reshape(q.shape)


def husimi_kernel_field(
    rho: DensityMatrix,
    q_range: tuple[float, float],
    p_range: tuple[float, float],
    n_q: int,
    n_p: int,
    scheme: QuadratureScheme | None = None,
) -> ScalarField:
    if scheme is None:
        scheme = QuadratureScheme.for_dim(rho.dim)
    thetas, xs, wx, dens = _density_on_scheme(rho, scheme)
    weighted = dens * wx[None, :] / (scheme.theta_nodes * TWO_PI)
    qg, pg = np.meshgrid(np.linspace(*q_range, n_q), np.linspace(*p_range, n_p), indexing="ij")
    vals = _kernel_average(qg.ravel(), pg.ravel(), thetas, xs, weighted).reshape(n_q, n_p)
    return ScalarField(*q_range, *p_range, n_q, n_p, vals)


# ---------------------------------------------------------------------------
# Monte Carlo transform
# ---------------------------------------------------------------------------


def husimi_mc_estimate(samples, pt: PhasePoint) -> MCEstimate:
    """Sample mean of M^{q,p}(theta_i, x_i) / 2pi with its standard error.

    The kernel's expectation under the sampling law is <z|rho|z>, hence the
    1/2pi to land on the Husimi density.
    """
    batch = SampleBatch.from_samples(samples)
    n = len(batch)
    if n < 2:
        raise ValueError("need at least two samples for a standard error")
    y = batch.x - pt.q * np.cos(batch.theta) - pt.p * np.sin(batch.theta)
    m = kernel_of_y(y) / TWO_PI
    mean = float(np.mean(m))
    stderr = float(np.std(m, ddof=1) / math.sqrt(n))
    return MCEstimate(mean, stderr, n)


def husimi_mc_field(samples, q_range, p_range, n_q: int, n_p: int) -> tuple[ScalarField, ScalarField]:
    """MC estimates on a grid; returns (mean field, stderr field)."""
    batch = SampleBatch.from_samples(samples)
    q = np.linspace(*q_range, n_q)
    p = np.linspace(*p_range, n_p)
    means = np.empty((n_q, n_p))
    errs = np.empty((n_q, n_p))
    for i, qi in enumerate(q):
        for j, pj in enumerate(p):
            est = husimi_mc_estimate(batch, PhasePoint(float(qi), float(pj)))
            means[i, j] = est.mean
            errs[i, j] = est.stderr
    return (
        ScalarField(*q_range, *p_range, n_q, n_p, means),
        ScalarField(*q_range, *p_range, n_q, n_p, errs),
    )


# ---------------------------------------------------------------------------
# Identity checks
# ---------------------------------------------------------------------------


def coherent_identity_check(z: complex, w: complex, scheme: QuadratureScheme | None = None) -> float:
    """|exp(-|w-z|^2) - (1/sqrt(pi)) oint int M^{q,p}(theta,x) exp(-(x-u~)^2) dtheta dx/2pi|.

    (q, p) is the point of z and u~ = sqrt(2) Re(w e^{-i theta}), the mean of
    the rotated quadrature in the coherent state |w>.
    """
    if scheme is None:
        scheme = QuadratureScheme()
    z, w = complex(z), complex(w)
    pt = PhasePoint.from_z(z)
    thetas = scheme.thetas()
    xs, wx = scheme.x_rule()
    u_tilde = math.sqrt(2.0) * (w * np.exp(-1j * thetas)).real
    gauss = np.exp(-((xs[None, :] - u_tilde[:, None]) ** 2)) / math.sqrt(math.pi)
    weighted = gauss * wx[None, :] / scheme.theta_nodes
    rhs = _kernel_average(pt.q, pt.p, thetas, xs, weighted)[0]
    return abs(math.exp(-abs(w - z) ** 2) - rhs)


@lru_cache(maxsize=None)
def _hermite_rule_mp(n: int, dps: int):
    with mpmath.workdps(dps):
        nodes, weights = mpmath.gauss_quadrature(n, "hermite")
        return tuple(nodes), tuple(weights)


def _hermite_poly_mp(n: int, x):
    h_prev, h = mpmath.mpf(1), 2 * x
    if n == 0:
        return h_prev
    for k in range(1, n):
        h_prev, h = h, 2 * x * h - 2 * k * h_prev
    return h


def hermite_gaussian_moment_check(k: int, y: float, *, dps: int = 50) -> float:
    """Error of Gauss-Hermite quadrature for int H_{2k}(x) exp(-(x-y)^2) dx against sqrt(pi) (2y)^{2k}.

    The rule is centred at y (x = y + t, weight exp(-t^2)). It is exact for
    the polynomial integrand, but the integrand reaches ~1e11 at k = 10 while
    the integral can be O(1), so the sum runs at ``dps`` decimal digits.
    Relative error, or absolute error where the exact value vanishes.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    n = 2 * k + 4
    with mpmath.workdps(dps):
        nodes, weights = _hermite_rule_mp(n, dps)
        ym = mpmath.mpf(y)
        total = mpmath.fsum(wi * _hermite_poly_mp(2 * k, ti + ym) for ti, wi in zip(nodes, weights))
        exact = mpmath.sqrt(mpmath.pi) * (2 * ym) ** (2 * k)
        err = abs(total - exact)
        if exact != 0:
            err /= abs(exact)
        return float(err)


def radon_wigner_check(
    rho: DensityMatrix,
    theta: float,
    x: float,
    *,
    n_nodes: int = 160,
    half_length: float | None = None,
) -> float:
    """|int W(x cos - t sin, x sin + t cos) dt - rho^{Q_theta}(x)| over t in [-L, L]."""
    if half_length is None:
        half_length = math.sqrt(2 * rho.dim) + 6.0
    t, wt = leggauss(n_nodes)
    t = half_length * t
    wt = half_length * wt
    c, s = math.cos(theta), math.sin(theta)
    q = x * c - t * s
    p = x * s + t * c
    line = float(wigner_points(rho, q, p) @ wt)
    return abs(line - quad_density(rho, theta, x))
