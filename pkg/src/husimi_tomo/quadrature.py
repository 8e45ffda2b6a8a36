"""Rotated quadrature densities and sampling of the homodyne tomography law.

The homodyne tomography observable draws a phase theta uniformly on
[0, 2pi) and then a quadrature value x from the density

    rho^{Q_theta}(x) = <x| e^{-i theta N} rho e^{i theta N} |x>
                     = sum_{m,n} rho_{mn} e^{-i (m-n) theta} h_m(x) h_n(x).

The sign of the phase factor is the one for which a coherent state |z> gives
a Gaussian centred at sqrt(2) Re(z e^{-i theta}); tests pin it.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import cumulative_trapezoid

from .errors import NumericError
from .states import DEFAULT_DIM, DensityMatrix, hermite_functions

__all__ = [
    "QuadratureSample",
    "SampleBatch",
    "SamplerTable",
    "QuadratureScheme",
    "quad_density",
    "quad_density_table",
    "quad_cdf",
    "build_sampler",
    "build_samplers",
    "sample_eht",
    "phase_bins",
    "SAMPLER_BINS",
    "SAMPLER_NODES",
]

TWO_PI = 2.0 * math.pi

SAMPLER_BINS = 360
SAMPLER_NODES = 4001
SAMPLER_MASS_TOL = 1e-6
_CHUNK = 1 << 16


@dataclass(frozen=True)
class QuadratureSample:
    theta: float
    x: float

    def __post_init__(self):
        if not 0.0 <= self.theta < TWO_PI:
            raise ValueError(f"theta must lie in [0, 2pi), got {self.theta!r}")


@dataclass(frozen=True)
class SampleBatch(Sequence):
    """Column storage for many homodyne outcomes; behaves as a sequence of QuadratureSample."""

    theta: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        theta = np.ascontiguousarray(self.theta, dtype=float)
        x = np.ascontiguousarray(self.x, dtype=float)
        if theta.shape != x.shape or theta.ndim != 1:
            raise ValueError("theta and x must be 1-D arrays of equal length")
        if theta.size and (theta.min() < 0.0 or theta.max() >= TWO_PI):
            raise ValueError("theta values must lie in [0, 2pi)")
        theta.setflags(write=False)
        x.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "x", x)

    @classmethod
    def from_samples(cls, samples) -> "SampleBatch":
        if isinstance(samples, SampleBatch):
            return samples
        samples = list(samples)
        return cls(
            np.array([s.theta for s in samples], dtype=float),
            np.array([s.x for s in samples], dtype=float),
        )

    def __len__(self) -> int:
        return self.theta.size

    def __getitem__(self, i):
        if isinstance(i, slice):
            return SampleBatch(self.theta[i], self.x[i])
        return QuadratureSample(float(self.theta[i]), float(self.x[i]))

    def __iter__(self) -> Iterator[QuadratureSample]:
        for t, x in zip(self.theta.tolist(), self.x.tolist()):
            yield QuadratureSample(t, x)


@dataclass(frozen=True)
class QuadratureScheme:
    """Discretization of (1/2pi) int_0^{2pi} dtheta int dx.

    theta: trapezoid rule with ``theta_nodes`` equispaced nodes (spectral on
    periodic integrands); x: Gauss-Legendre with ``x_nodes`` nodes on
    [-x_limit, x_limit].
    """

    theta_nodes: int = 128
    x_nodes: int = 160
    x_limit: float = math.sqrt(2 * DEFAULT_DIM) + 6.0

    def __post_init__(self):
        if int(self.theta_nodes) != self.theta_nodes or self.theta_nodes < 16:
            raise ValueError(f"theta_nodes must be an integer >= 16, got {self.theta_nodes!r}")
        if int(self.x_nodes) != self.x_nodes or self.x_nodes < 32:
            raise ValueError(f"x_nodes must be an integer >= 32, got {self.x_nodes!r}")
        if not math.isfinite(self.x_limit) or self.x_limit < 6.0:
            raise ValueError(f"x_limit must be >= 6, got {self.x_limit!r}")

    @classmethod
    def for_dim(cls, dim: int, theta_nodes: int = 128, x_nodes: int = 160) -> "QuadratureScheme":
        return cls(theta_nodes, x_nodes, math.sqrt(2 * dim) + 6.0)

    def thetas(self) -> np.ndarray:
        return TWO_PI * np.arange(self.theta_nodes) / self.theta_nodes

    def x_rule(self) -> tuple[np.ndarray, np.ndarray]:
        t, w = leggauss(self.x_nodes)
        return self.x_limit * t, self.x_limit * w


def _diagonal_components(rho: DensityMatrix, x: np.ndarray) -> np.ndarray:
    # A_k(x) = sum_n rho_{n+k,n} h_{n+k}(x) h_n(x) for k = 0..dim-1
    dim = rho.dim
    h = hermite_functions(dim - 1, x)
    comps = np.empty((dim, x.size), dtype=complex)
    for k in range(dim):
        comps[k] = np.diagonal(rho.elems, offset=-k) @ (h[k:] * h[: dim - k])
    return comps


def quad_density_table(rho: DensityMatrix, thetas, xs) -> np.ndarray:
    """rho^{Q_theta}(x) for every pair, shape (len(thetas), len(xs))."""
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    comps = _diagonal_components(rho, xs)
    k = np.arange(1, rho.dim)
    phases = np.exp(-1j * np.outer(thetas, k))
    return comps[0].real[None, :] + 2.0 * (phases @ comps[1:]).real


def quad_density(rho: DensityMatrix, theta: float, x):
    """Density of the rotated quadrature Q_theta in state ``rho`` at ``x``."""
    theta = math.fmod(float(theta), TWO_PI)
    vals = quad_density_table(rho, [theta], np.ravel(x))[0]
    return float(vals[0]) if np.ndim(x) == 0 else vals.reshape(np.shape(x))


@dataclass(frozen=True)
class SamplerTable:
    """Normalized CDF of one rotated quadrature on a fixed grid.

    ``mass`` is the trapezoid integral of the density before normalization.
    """

    theta: float
    grid: np.ndarray
    cdf: np.ndarray
    mass: float = 1.0

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        cdf = np.asarray(self.cdf, dtype=float)
        if grid.shape != cdf.shape or grid.ndim != 1 or grid.size < 2:
            raise ValueError("grid and cdf must be aligned 1-D arrays")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if cdf[0] > 1e-8 or 1.0 - cdf[-1] > 1e-8 or np.any(np.diff(cdf) < 0):
            raise ValueError("cdf must be nondecreasing from 0 to 1")
        grid.setflags(write=False)
        cdf.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "cdf", cdf)


def _sampler_grid(dim: int, n_nodes: int, x_limit: float | None) -> np.ndarray:
    if x_limit is None:
        x_limit = math.sqrt(2 * dim) + 5.0
    return np.linspace(-x_limit, x_limit, n_nodes)


def _cdf_rows(density: np.ndarray, grid: np.ndarray, thetas):
    cdf = cumulative_trapezoid(np.clip(density, 0.0, None), grid, axis=-1, initial=0.0)
    mass = cdf[:, -1].copy()
    bad = np.abs(mass - 1.0) > SAMPLER_MASS_TOL
    if np.any(bad):
        i = int(np.argmax(bad))
        raise NumericError(
            f"quadrature density at theta={thetas[i]:.6g} has mass {mass[i]:.10g} on the "
            "sampler grid; the Fock cutoff or grid span is inadequate"
        )
    cdf /= mass[:, None]
    cdf[:, -1] = 1.0
    return cdf, mass


def build_sampler(
    rho: DensityMatrix,
    theta: float,
    n_nodes: int = SAMPLER_NODES,
    x_limit: float | None = None,
) -> SamplerTable:
    """Tabulate the normalized trapezoid CDF of rho^{Q_theta} on [-L, L].

    L defaults to sqrt(2 dim) + 5. Raises NumericError when the tabulated mass
    is off from one by more than 1e-6.
    """
    return build_samplers(rho, [theta], n_nodes, x_limit)[0]


def build_samplers(rho, thetas, n_nodes=SAMPLER_NODES, x_limit=None) -> list[SamplerTable]:
    grid = _sampler_grid(rho.dim, n_nodes, x_limit)
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    cdf, mass = _cdf_rows(quad_density_table(rho, thetas, grid), grid, thetas)
    return [SamplerTable(float(t), grid, row, float(m)) for t, row, m in zip(thetas, cdf, mass)]


def quad_cdf(table: SamplerTable, x):
    """Linear interpolation of the tabulated CDF, 0 below and 1 above the grid."""
    out = np.clip(np.interp(x, table.grid, table.cdf, left=0.0, right=1.0), 0.0, 1.0)
    return float(out) if np.ndim(out) == 0 else out


def phase_bins(n_bins: int = SAMPLER_BINS) -> np.ndarray:
    return TWO_PI * np.arange(n_bins) / n_bins


class _InverseCDF:
    """Vectorized inverse-CDF lookup over all phase bins at once.

    Row b of the CDF table is shifted by 2b, so one searchsorted on the
    flattened, globally increasing array locates every sample's cell.
    """

    def __init__(self, grid: np.ndarray, cdf: np.ndarray):
        self.grid = grid
        self.n_nodes = grid.size
        self.offsets = 2.0 * np.arange(cdf.shape[0])
        self.flat = (cdf + self.offsets[:, None]).ravel()
        self.cdf = cdf.ravel()

    def __call__(self, bins: np.ndarray, u: np.ndarray) -> np.ndarray:
        j = np.searchsorted(self.flat, u + self.offsets[bins], side="right")
        row_start = bins * self.n_nodes
        j = np.clip(j, row_start + 1, row_start + self.n_nodes - 1)
        c0 = self.cdf[j - 1]
        c1 = self.cdf[j]
        frac = np.clip((u - c0) / (c1 - c0), 0.0, 1.0)
        local = j - row_start
        x0 = self.grid[local - 1]
        return x0 + frac * (self.grid[local] - x0)


def sample_eht(
    rho: DensityMatrix,
    n: int,
    seed: int,
    *,
    n_bins: int = SAMPLER_BINS,
    n_nodes: int = SAMPLER_NODES,
    threads: int | None = 1,
) -> SampleBatch:
    """Draw ``n`` outcomes (theta, x) of the homodyne tomography observable.

    theta is uniform over ``n_bins`` equispaced phases on [0, 2pi); x is drawn
    by inverse-CDF from that phase's table. Samples are generated in fixed
    chunks of 65536, each from its own child of ``SeedSequence(seed)``, so the
    output depends on (seed, n) only and not on ``threads``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    thetas = phase_bins(n_bins)
    grid = _sampler_grid(rho.dim, n_nodes, None)
    cdf, _ = _cdf_rows(quad_density_table(rho, thetas, grid), grid, thetas)
    inverse = _InverseCDF(grid, cdf)

    sizes = [min(_CHUNK, n - start) for start in range(0, n, _CHUNK)]
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))

    def draw(args):
        size, ss = args
        rng = np.random.default_rng(ss)
        bins = rng.integers(0, n_bins, size=size)
        u = rng.random(size)
        return bins, inverse(bins, u)

    jobs = list(zip(sizes, seeds))
    if threads is not None and threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(draw, jobs))
    else:
        parts = [draw(job) for job in jobs]
    bins = np.concatenate([b for b, _ in parts])
    x = np.concatenate([x for _, x in parts])
    return SampleBatch(thetas[bins], x)
