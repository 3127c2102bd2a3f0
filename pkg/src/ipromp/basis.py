"""Phase variables and basis-function families.

Two families live here: normalized Gaussian bases over the phase variable,
used to represent primitives, and cubic radial basis functions
``|x - c|**3``, used to synthesize demonstrations.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError


def phase(t, T):
    """Map time to the dimensionless phase ``z = t / T``.

    Accepts scalars or arrays; values outside ``[0, T]`` raise.
    """
    if not T > 0:
        raise InvalidInputError(f"duration must be positive, got {T}")
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)):
        raise InvalidInputError("time must be finite")
    # tolerate round-off from t = n * dt grids
    eps = 1e-12 * max(1.0, T)
    if np.any(t < -eps) or np.any(t > T + eps):
        raise InvalidInputError(f"time outside [0, {T}]")
    return np.clip(t / T, 0.0, 1.0)


@dataclass(frozen=True)
class GaussianBasis:
    """Family of ``k`` Gaussian bumps over phase with shared bandwidth ``h``.

    Parameters
    ----------
    k : int
        Number of basis functions.
    h : float, optional
        Bandwidth in phase² units. Defaults to ``1 / k**2``.
    centers : array_like, optional
        Phase centers. Defaults to ``k`` points evenly spaced on [0, 1].
    """

    k: int
    h: float | None = None
    centers: np.ndarray | None = field(default=None)

    def __post_init__(self):
        k = int(self.k)
        if k < 1:
            raise InvalidInputError(f"need at least one basis function, got k={self.k}")
        h = 1.0 / k**2 if self.h is None else float(self.h)
        if not (np.isfinite(h) and h > 0):
            raise InvalidInputError(f"bandwidth must be positive, got {self.h}")
        if self.centers is None:
            centers = np.linspace(0.0, 1.0, k) if k > 1 else np.array([0.5])
        else:
            centers = np.array(self.centers, dtype=float).reshape(-1)
        if centers.shape != (k,):
            raise InvalidInputError(f"expected {k} centers, got {centers.size}")
        if not np.all(np.isfinite(centers)):
            raise InvalidInputError("centers must be finite")
        if np.any(np.diff(centers) < 0):
            raise InvalidInputError("centers must be sorted ascending")
        overhang = 2.0 * np.sqrt(h)
        if centers[0] < -overhang - 1e-12 or centers[-1] > 1.0 + overhang + 1e-12:
            raise InvalidInputError("centers extend too far outside [0, 1]")
        centers.setflags(write=False)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "centers", centers)

    def __eq__(self, other):
        if not isinstance(other, GaussianBasis):
            return NotImplemented
        return (self.k == other.k and self.h == other.h
                and np.array_equal(self.centers, other.centers))

    def __hash__(self):
        return hash((self.k, self.h, self.centers.tobytes()))

    def unnormalized(self, z):
        """Raw Gaussian activations, shape ``(len(z), k)``."""
        z = np.atleast_1d(np.asarray(z, dtype=float))
        return np.exp(-((z[:, None] - self.centers[None, :]) ** 2) / (2.0 * self.h))

    def __call__(self, z):
        return eval_gaussian_basis(self, z)


def eval_gaussian_basis(family: GaussianBasis, z):
    """Normalized basis activations at phase ``z``.

    Returns a row of length ``k`` for scalar ``z`` and an ``(n, k)`` matrix
    for an array. Every row sums to one.
    """
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if not np.all(np.isfinite(z)):
        raise InvalidInputError("phase must be finite")
    raw = family.unnormalized(z)
    total = raw.sum(axis=1, keepdims=True)
    if np.any(total <= 0) or not np.all(np.isfinite(total)):
        raise InvalidInputError("basis row underflowed to zero; widen the bandwidth")
    psi = raw / total
    return psi[0] if scalar else psi


def build_basis_matrix(family: GaussianBasis, times, T):
    """Basis matrix with one row per time sample, rows evaluated at ``t / T``."""
    times = np.asarray(times, dtype=float).reshape(-1)
    if times.size == 0:
        raise InvalidInputError("empty time vector")
    if np.any(np.diff(times) < 0):
        raise InvalidInputError("times must be sorted")
    return eval_gaussian_basis(family, phase(times, T))


@dataclass(frozen=True)
class CubicRBF:
    """Cubic radial basis functions ``|x - c|**3`` around fixed centers."""

    centers: np.ndarray

    def __post_init__(self):
        c = np.array(self.centers, dtype=float).reshape(-1)
        if c.size == 0 or not np.all(np.isfinite(c)):
            raise InvalidInputError("centers must be finite and non-empty")
        if np.unique(c).size != c.size:
            raise InvalidInputError("centers must be distinct")
        c.setflags(write=False)
        object.__setattr__(self, "centers", c)

    def __call__(self, x):
        return eval_cubic_rbf(self, x)


def eval_cubic_rbf(family: CubicRBF, x):
    """Evaluate every cubic RBF at ``x``; scalar in, row out."""
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("input must be finite")
    out = np.abs(x[:, None] - family.centers[None, :]) ** 3
    return out[0] if scalar else out
