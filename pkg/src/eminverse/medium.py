"""
Analytic permittivity models.

The contrast ``p(x) = K^2(x) - k^2`` is a sum of compactly supported radial
bumps ``k^2 c (1 - |x - x0|^2 / rho^2)^m``.  With ``m >= 3`` both ``p`` and its
gradient vanish on the edge of every bump and the permittivity is C^2, so the
logarithmic derivative ``q = grad K^2 / K^2`` is zero outside the scatterer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateMedium, NegativeAbsorption

__all__ = [
    "WaveParams",
    "Bump",
    "MediumSpec",
    "MediumReport",
    "eval_p",
    "eval_grad_p",
    "eval_q",
    "p_to_eps",
    "eps_to_p",
    "validate_medium",
]

DEGENERACY_TOL = 1e-12


@dataclass(frozen=True)
class WaveParams:
    """Background wave parameters with ``k**2 == omega**2 * eps0 * mu0``."""

    k: float
    omega: float
    eps0: float = 1.0
    mu0: float = 1.0

    def __post_init__(self):
        for name in ("k", "omega", "eps0", "mu0"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        k2 = self.omega**2 * self.eps0 * self.mu0
        if abs(self.k**2 - k2) > 1e-12 * k2:
            raise ValueError("k**2 must equal omega**2 * eps0 * mu0")

    @classmethod
    def from_k(cls, k: float, eps0: float = 1.0, mu0: float = 1.0) -> "WaveParams":
        return cls(k=k, omega=k / math.sqrt(eps0 * mu0), eps0=eps0, mu0=mu0)


@dataclass(frozen=True)
class Bump:
    """One radial bump ``c (1 - |x - center|^2 / radius^2)^power`` (times k^2)."""

    center: tuple
    radius: float
    amplitude: complex
    power: int = 3

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "amplitude", complex(self.amplitude))
        if len(self.center) != 3:
            raise ValueError("center must have 3 components")
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if int(self.power) != self.power or self.power < 3:
            raise ValueError("power must be an integer >= 3")


@dataclass(frozen=True)
class MediumSpec:
    """Sum of bumps, all contained in the ball of radius ``domain_radius``."""

    bumps: tuple = ()
    domain_radius: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "bumps", tuple(self.bumps))
        if not self.domain_radius > 0:
            raise ValueError("domain_radius must be positive")
        for b in self.bumps:
            if np.linalg.norm(b.center) + b.radius > self.domain_radius * (1 + 1e-12):
                raise ValueError(
                    f"bump at {b.center} with radius {b.radius} leaves the "
                    f"domain ball of radius {self.domain_radius}"
                )

    @classmethod
    def single_bump(cls, amplitude, radius=1.0, center=(0.0, 0.0, 0.0),
                    power=3, domain_radius=None) -> "MediumSpec":
        if domain_radius is None:
            domain_radius = np.linalg.norm(center) + radius
        return cls((Bump(center, radius, amplitude, power),), domain_radius)

    def scaled(self, t) -> "MediumSpec":
        """Same geometry with every amplitude multiplied by ``t``."""
        bumps = tuple(
            Bump(b.center, b.radius, b.amplitude * t, b.power) for b in self.bumps
        )
        return MediumSpec(bumps, self.domain_radius)

    @property
    def is_zero(self) -> bool:
        return all(b.amplitude == 0 for b in self.bumps)


def _bump_terms(bump: Bump, x: np.ndarray):
    d = x - np.asarray(bump.center)
    s = 1.0 - np.sum(d * d, axis=-1) / bump.radius**2
    inside = s > 0
    s = np.where(inside, s, 0.0)
    return d, s, inside


def eval_p(medium: MediumSpec, wave: WaveParams, x) -> np.ndarray:
    """Contrast ``p(x) = K^2(x) - k^2`` at points ``x`` of shape ``(..., 3)``."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape[:-1], dtype=complex)
    for b in medium.bumps:
        _, s, _ = _bump_terms(b, x)
        out += b.amplitude * s**b.power
    return wave.k**2 * out


def eval_grad_p(medium: MediumSpec, wave: WaveParams, x) -> np.ndarray:
    """Analytic gradient of ``p``, shape ``(..., 3)``."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape, dtype=complex)
    for b in medium.bumps:
        d, s, _ = _bump_terms(b, x)
        ds = np.asarray(b.amplitude * b.power * s ** (b.power - 1) * (-2.0 / b.radius**2))
        out += ds[..., None] * d
    return wave.k**2 * out


def eval_q(medium: MediumSpec, wave: WaveParams, x) -> np.ndarray:
    """``q(x) = grad K^2 / K^2``, shape ``(..., 3)``.

    Raises
    ------
    DegenerateMedium
        If ``|k^2 + p(x)| < 1e-12 k^2`` at any of the points.
    """
    K2 = wave.k**2 + eval_p(medium, wave, x)
    if np.any(np.abs(K2) < DEGENERACY_TOL * wave.k**2):
        raise DegenerateMedium("K^2 = k^2 + p vanishes at a sample point")
    return eval_grad_p(medium, wave, x) / K2[..., None]


def p_to_eps(p, wave: WaveParams):
    """Complex permittivity ``(k^2 + p) / (omega^2 mu0)``."""
    return (wave.k**2 + np.asarray(p)) / (wave.omega**2 * wave.mu0)


def eps_to_p(eps, wave: WaveParams):
    """Inverse of :func:`p_to_eps`."""
    return wave.omega**2 * wave.mu0 * np.asarray(eps) - wave.k**2


@dataclass(frozen=True)
class MediumReport:
    min_abs_K2: float
    min_im_p: float
    max_rel_p: float
    n_samples: int = field(default=0)

    @property
    def born_small(self) -> bool:
        return self.max_rel_p < 0.1


def validate_medium(medium: MediumSpec, wave: WaveParams, grid) -> MediumReport:
    """Sample the medium on every grid cell and check the standing assumptions.

    Raises DegenerateMedium if ``K^2`` vanishes and NegativeAbsorption if any
    bump has ``Im c < 0`` or a sampled ``Im p`` is negative.
    """
    for b in medium.bumps:
        if b.amplitude.imag < 0:
            raise NegativeAbsorption(
                f"bump at {b.center} has Im(amplitude) = {b.amplitude.imag} < 0"
            )
    k2 = wave.k**2
    p = eval_p(medium, wave, grid.centers)
    K2 = np.abs(k2 + p)
    if K2.size and K2.min() < DEGENERACY_TOL * k2:
        raise DegenerateMedium(f"min |k^2 + p| = {K2.min():.3e} on the grid")
    if p.size and p.imag.min() < -1e-14 * k2:
        raise NegativeAbsorption(f"min Im p = {p.imag.min():.3e} on the grid")
    return MediumReport(
        min_abs_K2=float(K2.min()) if K2.size else k2,
        min_im_p=float(p.imag.min()) if p.size else 0.0,
        max_rel_p=float(np.abs(p).max() / k2) if p.size else 0.0,
        n_samples=len(p),
    )
