"""
Direction sets, sphere quadrature and volume grids.

Directions are plain ``(3,)`` float arrays of unit norm; sets of directions are
``(n, 3)`` arrays.  The volume grid is the midpoint (cell-centre) discretization
of a ball, kept on an underlying Cartesian box so that translation-invariant
kernels can be applied by FFT.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "direction",
    "orthonormal_pair",
    "SphereQuadrature",
    "VolumeGrid",
    "build_sphere_quadrature",
    "build_volume_grid",
    "self_cell_integral",
]

UNIT_TOL = 1e-12


def direction(v) -> np.ndarray:
    """Return ``v`` as a float unit 3-vector."""
    v = np.asarray(v, dtype=float).reshape(3)
    n = np.linalg.norm(v)
    if n == 0.0 or not np.isfinite(n):
        raise ValueError("direction must be a non-zero finite 3-vector")
    return v / n


def orthonormal_pair(alpha) -> tuple[np.ndarray, np.ndarray]:
    """Two real unit vectors spanning the plane orthogonal to ``alpha``.

    The pair is a deterministic function of ``alpha`` and ``(e1, e2, alpha)``
    is right-handed.
    """
    alpha = direction(alpha)
    # Cross with the coordinate axis least aligned with alpha.
    axis = np.zeros(3)
    axis[np.argmin(np.abs(alpha))] = 1.0
    e1 = np.cross(alpha, axis)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(alpha, e1)
    return e1, e2


@dataclass(frozen=True)
class SphereQuadrature:
    """Nodes and weights on the unit sphere.

    Attributes
    ----------
    nodes : ndarray, shape (n, 3)
        Unit vectors.
    weights : ndarray, shape (n,)
        Positive weights summing to 4*pi (steradian).
    n_polar, n_azimuth : int
        Sizes of the product rule that generated the nodes.
    """

    nodes: np.ndarray
    weights: np.ndarray
    n_polar: int
    n_azimuth: int

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    def __len__(self):
        return len(self.weights)

    def integrate(self, values) -> complex:
        """Quadrature sum of ``values`` sampled at the nodes."""
        return np.asarray(values) @ self.weights


def build_sphere_quadrature(n_polar: int, n_azimuth: int) -> SphereQuadrature:
    """Gauss-Legendre in cos(theta) times the uniform rule in azimuth.

    Exact for spherical polynomials of degree ``< min(2 n_polar, n_azimuth)``.
    """
    if n_polar < 1 or n_azimuth < 1:
        raise ValueError("n_polar and n_azimuth must be >= 1")
    mu, w_mu = np.polynomial.legendre.leggauss(n_polar)
    phi = 2.0 * np.pi * np.arange(n_azimuth) / n_azimuth
    sin_t = np.sqrt(1.0 - mu**2)

    # polar index varies slowest
    mu_g, phi_g = np.meshgrid(mu, phi, indexing="ij")
    sin_g = np.broadcast_to(sin_t[:, None], mu_g.shape)
    nodes = np.stack(
        [sin_g * np.cos(phi_g), sin_g * np.sin(phi_g), mu_g], axis=-1
    ).reshape(-1, 3)
    weights = np.outer(w_mu, np.full(n_azimuth, 2.0 * np.pi / n_azimuth)).ravel()
    return SphereQuadrature(nodes, weights, n_polar, n_azimuth)


@dataclass(frozen=True)
class VolumeGrid:
    """Cell-centre grid of the ball of radius ``R`` centred at the origin.

    ``index`` holds the integer (i, j, l) position of every retained cell in
    the ``n_per_axis**3`` bounding box; ``centers[m] = -R + (index[m] + 0.5) h``.
    """

    centers: np.ndarray
    index: np.ndarray
    h: float
    R: float
    n_per_axis: int
    cell_volume: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "cell_volume", self.h**3)
        self.centers.setflags(write=False)
        self.index.setflags(write=False)

    def __len__(self):
        return len(self.centers)

    @property
    def box_shape(self) -> tuple[int, int, int]:
        n = self.n_per_axis
        return (n, n, n)

    def flat_index(self) -> np.ndarray:
        """Raveled box index of every cell (C order)."""
        return np.ravel_multi_index(self.index.T, self.box_shape)

    def to_box(self, values: np.ndarray) -> np.ndarray:
        """Scatter per-cell values into a zero-filled box array."""
        values = np.asarray(values)
        out = np.zeros(self.box_shape + values.shape[1:], dtype=values.dtype)
        out[tuple(self.index.T)] = values
        return out

    def from_box(self, box: np.ndarray) -> np.ndarray:
        return box[tuple(self.index.T)]


def build_volume_grid(R_domain: float, n_per_axis: int) -> VolumeGrid:
    """Uniform grid of spacing ``2 R / n`` restricted to cells centred in the ball."""
    if R_domain <= 0:
        raise ValueError("R_domain must be positive")
    if n_per_axis < 1:
        raise ValueError("n_per_axis must be >= 1")
    h = 2.0 * R_domain / n_per_axis
    ax = -R_domain + (np.arange(n_per_axis) + 0.5) * h
    idx = np.stack(
        np.meshgrid(*(np.arange(n_per_axis),) * 3, indexing="ij"), axis=-1
    ).reshape(-1, 3)
    centers = ax[idx]
    keep = np.linalg.norm(centers, axis=1) < R_domain
    return VolumeGrid(centers[keep], idx[keep], h, float(R_domain), n_per_axis)


def self_cell_integral(h: float, k: float) -> complex:
    """Integral of ``exp(ik|y|) / (4 pi |y|)`` over the ball of volume ``h**3``.

    The cube cell is replaced by the sphere of equal volume, radius
    ``a = (3 h^3 / (4 pi))^(1/3)``, which gives ``int_0^a r exp(ikr) dr``.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    a = (3.0 * h**3 / (4.0 * math.pi)) ** (1.0 / 3.0)
    ka = k * a
    if abs(ka) < 0.1:
        # sum_n (ika)^n a^2 / (n! (n+2)); closed form cancels badly here
        total = 0j
        term = 1.0 + 0j
        for n in range(25):
            total += term / (n + 2)
            term *= 1j * ka / (n + 1)
        return complex(a * a * total)
    e = np.exp(1j * ka)
    return complex((e * (1.0 - 1j * ka) - 1.0) / k**2)
