"""Single-mode states in a truncated Fock basis and their phase-space functions.

Conventions: hbar = 1, Q = (a + a^dag)/sqrt(2), and a phase-space point (q, p)
corresponds to the coherent amplitude z = (q + i p)/sqrt(2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .errors import TruncationError

__all__ = [
    "DEFAULT_DIM",
    "DensityMatrix",
    "PhasePoint",
    "hermite_function",
    "hermite_functions",
    "coherent_vector",
    "check_truncation",
    "make_number_state",
    "make_coherent_state",
    "make_thermal_state",
    "make_pure_state",
    "make_mixture",
    "husimi_direct",
    "husimi_direct_grid",
    "wigner",
    "wigner_grid",
    "wigner_points",
]

DEFAULT_DIM = 64

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
PSD_TOL = 1e-10

_PI_QUARTER = math.pi ** -0.25


@dataclass(frozen=True)
class DensityMatrix:
    """A validated density matrix on span{|0>, ..., |dim-1>}.

    The input is symmetrized to (rho + rho^dag)/2 before the Hermiticity,
    trace and positivity checks, so rounding noise is absorbed but a
    genuinely non-Hermitian input is still rejected.
    """

    elems: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.array(self.elems, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise ValueError(f"density matrix must be square, got shape {m.shape}")
        asym = np.max(np.abs(m - m.conj().T))
        if asym > HERMITIAN_TOL:
            raise ValueError(f"density matrix is not Hermitian (max asymmetry {asym:.3g})")
        m = 0.5 * (m + m.conj().T)
        tr = np.trace(m).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace is {tr!r}, expected 1")
        lam_min = np.linalg.eigvalsh(m)[0]
        if lam_min < -PSD_TOL:
            raise ValueError(f"density matrix has negative eigenvalue {lam_min:.3g}")
        m.setflags(write=False)
        object.__setattr__(self, "elems", m)

    @property
    def dim(self) -> int:
        return self.elems.shape[0]

    def purity(self) -> float:
        return float(np.real(np.vdot(self.elems.conj().T, self.elems)))

    def __eq__(self, other):
        if not isinstance(other, DensityMatrix):
            return NotImplemented
        return self.elems.shape == other.elems.shape and np.array_equal(self.elems, other.elems)

    def __hash__(self):
        return hash(self.elems.tobytes())


@dataclass(frozen=True)
class PhasePoint:
    q: float
    p: float

    @property
    def z(self) -> complex:
        return complex(self.q, self.p) / math.sqrt(2.0)

    @property
    def abs_z_squared(self) -> float:
        return 0.5 * (self.q * self.q + self.p * self.p)

    @classmethod
    def from_z(cls, z: complex) -> "PhasePoint":
        z = complex(z)
        return cls(math.sqrt(2.0) * z.real, math.sqrt(2.0) * z.imag)


# ---------------------------------------------------------------------------
# Hermite functions
# ---------------------------------------------------------------------------


def hermite_functions(n_max: int, x) -> np.ndarray:
    """Normalized Hermite functions h_0 .. h_{n_max} at the points ``x``.

    Uses the recurrence on the normalized functions,

        h_{n+1}(x) = sqrt(2/(n+1)) x h_n(x) - sqrt(n/(n+1)) h_{n-1}(x),

    which never forms H_n(x) or n! explicitly.

    Returns:
        array of shape ``(n_max + 1,) + np.shape(x)``.
    """
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max + 1,) + x.shape)
    out[0] = _PI_QUARTER * np.exp(-0.5 * x * x)
    if n_max >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for n in range(1, n_max):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * x * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


def hermite_function(n: int, x):
    """h_n(x), the L2-normalized Hermite function (position wavefunction of |n>)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    vals = hermite_functions(n, x)[n]
    return float(vals) if vals.ndim == 0 else vals


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------


def check_truncation(z: complex, dim: int) -> None:
    """Reject amplitudes whose coherent state does not fit into ``dim`` levels."""
    z = complex(z)
    mag2 = z.real * z.real + z.imag * z.imag
    if mag2 > dim / 4:
        raise TruncationError(
            f"|z|^2 = {mag2:.6g} exceeds dim/4 = {dim / 4:.6g}; increase the Fock cutoff"
        )


def coherent_vector(z: complex, dim: int) -> np.ndarray:
    """Fock components <n|z> = exp(-|z|^2/2) z^n / sqrt(n!) for n < dim (not renormalized)."""
    z = complex(z)
    n = np.arange(dim)
    if z == 0:
        vec = np.zeros(dim, dtype=complex)
        vec[0] = 1.0
        return vec
    log_mag = -0.5 * abs(z) ** 2 + n * math.log(abs(z)) - 0.5 * gammaln(n + 1)
    return np.exp(log_mag) * np.exp(1j * n * np.angle(z))


def _check_dim(dim: int) -> None:
    if int(dim) != dim or dim < 1:
        raise ValueError(f"dim must be a positive integer, got {dim!r}")


def make_number_state(n: int, dim: int) -> DensityMatrix:
    _check_dim(dim)
    if n < 0 or n >= dim:
        raise ValueError(f"number state |{n}> does not fit into dim={dim}")
    m = np.zeros((dim, dim), dtype=complex)
    m[n, n] = 1.0
    return DensityMatrix(m)


def make_pure_state(amplitudes, dim: int | None = None) -> DensityMatrix:
    """Projector onto the normalized vector ``amplitudes`` (zero-padded to ``dim``)."""
    psi = np.asarray(amplitudes, dtype=complex).ravel()
    if dim is not None:
        _check_dim(dim)
        if psi.size > dim:
            raise ValueError(f"{psi.size} amplitudes do not fit into dim={dim}")
        psi = np.concatenate([psi, np.zeros(dim - psi.size, dtype=complex)])
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise ValueError("amplitude vector is zero")
    psi = psi / norm
    return DensityMatrix(np.outer(psi, psi.conj()))


def make_coherent_state(z: complex, dim: int = DEFAULT_DIM) -> DensityMatrix:
    _check_dim(dim)
    check_truncation(z, dim)
    return make_pure_state(coherent_vector(z, dim))


def make_thermal_state(nbar: float, dim: int = DEFAULT_DIM) -> DensityMatrix:
    _check_dim(dim)
    if nbar < 0:
        raise ValueError("nbar must be nonnegative")
    if nbar == 0:
        return make_number_state(0, dim)
    ratio = nbar / (1.0 + nbar)
    weights = ratio ** np.arange(dim)
    return DensityMatrix(np.diag(weights / weights.sum()).astype(complex))


def make_mixture(weights, states) -> DensityMatrix:
    """Convex combination sum_i w_i rho_i; weights are renormalized to sum to one."""
    weights = np.asarray(weights, dtype=float)
    states = list(states)
    if len(weights) != len(states) or not states:
        raise ValueError("need one weight per component state")
    if np.any(weights < 0) or weights.sum() <= 0:
        raise ValueError("mixture weights must be nonnegative and not all zero")
    dims = {s.dim for s in states}
    if len(dims) != 1:
        raise ValueError(f"mixture components have different dims {sorted(dims)}")
    weights = weights / weights.sum()
    m = sum(w * s.elems for w, s in zip(weights, states))
    return DensityMatrix(m)


# ---------------------------------------------------------------------------
# Phase-space functions
# ---------------------------------------------------------------------------


def _husimi_values(rho: DensityMatrix, z: np.ndarray) -> np.ndarray:
    # c[n, j] = <n|z_j>; exact for rho supported on the first dim levels.
    c = np.empty((rho.dim, z.size), dtype=complex)
    c[0] = np.exp(-0.5 * np.abs(z) ** 2)
    for n in range(1, rho.dim):
        c[n] = c[n - 1] * z / math.sqrt(n)
    vals = np.einsum("mj,mn,nj->j", c.conj(), rho.elems, c)
    imag = np.max(np.abs(vals.imag)) if vals.size else 0.0
    if imag > 1e-12:
        raise ArithmeticError(f"Husimi value has imaginary residue {imag:.3g}")
    return vals.real / (2.0 * math.pi)


def husimi_direct(rho: DensityMatrix, pt: PhasePoint, *, check: bool = True) -> float:
    """Husimi function (1/2pi) <z|rho|z> at z = (q + i p)/sqrt(2).

    The coherent vector is projected onto the truncated basis without
    renormalizing, which is exact for any state living in that basis. With
    ``check=True`` the point must still satisfy |z|^2 <= dim/4.
    """
    z = pt.z
    if check:
        check_truncation(z, rho.dim)
    return float(_husimi_values(rho, np.array([z]))[0])


def husimi_direct_grid(rho: DensityMatrix, q, p, *, check: bool = True) -> np.ndarray:
    """Husimi function on the tensor grid ``q x p``; result has shape (len(q), len(p))."""
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    z = ((q[:, None] + 1j * p[None, :]) / math.sqrt(2.0)).ravel()
    if check and z.size:
        check_truncation(z[np.argmax(np.abs(z))], rho.dim)
    return _husimi_values(rho, z).reshape(q.size, p.size)


def _wigner_matrix(z: np.ndarray, dim: int) -> np.ndarray:
    """Wigner functions of the operators |m><n| at amplitudes z, shape (dim, dim, npts).

    Built by the standard two-index recurrence starting from the vacuum
    Gaussian exp(-2|z|^2)/pi; avoids evaluating large Laguerre polynomials.
    """
    w = np.zeros((dim, dim, z.size), dtype=complex)
    w[0, 0] = np.exp(-2.0 * np.abs(z) ** 2) / math.pi
    for n in range(1, dim):
        w[0, n] = 2.0 * z * w[0, n - 1] / math.sqrt(n)
    zc = np.conj(z)
    for m in range(1, dim):
        sm = math.sqrt(m)
        w[m, m] = (2.0 * zc * w[m - 1, m] - sm * w[m - 1, m - 1]) / sm
        for n in range(m + 1, dim):
            w[m, n] = (2.0 * zc * w[m - 1, n] - math.sqrt(n) * w[m - 1, n - 1]) / sm
    lower = np.tril_indices(dim, -1)
    w[lower[0], lower[1]] = np.conj(w[lower[1], lower[0]])
    return w


def _wigner_values(rho: DensityMatrix, z: np.ndarray) -> np.ndarray:
    # W[m, n] is the Wigner function of |m><n|; W_rho = sum_mn rho_mn W[m, n].
    # Points are processed in blocks to bound the dim x dim x block workspace.
    out = np.empty(z.size)
    block = max(1, 2**22 // (rho.dim * rho.dim))
    for start in range(0, z.size, block):
        w = _wigner_matrix(z[start : start + block], rho.dim)
        out[start : start + block] = np.einsum("mn,mnj->j", rho.elems, w).real
    return out


def wigner(rho: DensityMatrix, pt: PhasePoint) -> float:
    """Wigner function W(q, p), normalized so its line integrals give the quadrature densities."""
    return float(_wigner_values(rho, np.array([pt.z]))[0])


def wigner_points(rho: DensityMatrix, q, p) -> np.ndarray:
    """Wigner function at the paired points (q[i], p[i])."""
    q, p = np.broadcast_arrays(np.asarray(q, dtype=float), np.asarray(p, dtype=float))
    z = ((q + 1j * p) / math.sqrt(2.0)).ravel()
    return _wigner_values(rho, z).reshape(q.shape)


def wigner_grid(rho: DensityMatrix, q, p) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    z = ((q[:, None] + 1j * p[None, :]) / math.sqrt(2.0)).ravel()
    return _wigner_values(rho, z).reshape(q.size, p.size)
