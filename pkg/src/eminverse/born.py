"""
Weak-scattering data: the scalar data function ``f(beta, alpha)`` computed
directly from the contrast, the corresponding vector amplitude, and a
norm-exact noise model.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import SphereQuadrature, VolumeGrid
from .medium import MediumSpec, WaveParams, eval_p, eval_q

__all__ = [
    "PROVENANCES",
    "ScatteringDataSet",
    "born_f",
    "born_f_matrix",
    "born_amplitude",
    "synthesize_dataset",
    "add_noise",
    "weighted_norm",
]

PROVENANCES = ("born-exact", "full-solver", "noisy")


@dataclass(frozen=True)
class ScatteringDataSet:
    """Samples of ``f`` on the product of two sphere quadratures.

    ``f[i, j]`` is the value for observation direction ``beta_quadrature.nodes[i]``
    and incident direction ``alpha_quadrature.nodes[j]``.
    """

    alpha_quadrature: SphereQuadrature
    beta_quadrature: SphereQuadrature
    f: np.ndarray
    wave: WaveParams
    noise_level: float = 0.0
    provenance: str = "born-exact"
    seed: int | None = None
    domain_radius: float | None = None
    polarization_choice: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        f = np.asarray(self.f, dtype=complex)
        object.__setattr__(self, "f", f)
        if f.shape != (len(self.beta_quadrature), len(self.alpha_quadrature)):
            raise ValueError(
                f"f has shape {f.shape}, expected "
                f"({len(self.beta_quadrature)}, {len(self.alpha_quadrature)})"
            )
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if (self.noise_level > 0) != (self.provenance == "noisy"):
            raise ValueError("noise_level > 0 exactly when provenance is 'noisy'")

    @property
    def pair_weights(self) -> np.ndarray:
        """``w_beta[i] * w_alpha[j]`` as a ``(n_beta, n_alpha)`` array."""
        return np.outer(self.beta_quadrature.weights, self.alpha_quadrature.weights)

    def norm(self) -> float:
        return weighted_norm(self, self.f)


def weighted_norm(data: ScatteringDataSet, values) -> float:
    """Quadrature approximation of the L2(S^2 x S^2) norm of ``values``."""
    return float(np.sqrt(np.sum(data.pair_weights * np.abs(values) ** 2)))


def born_f_matrix(medium: MediumSpec, wave: WaveParams, alphas, betas,
                  grid: VolumeGrid) -> np.ndarray:
    """``f[i, j] = sum_c exp(ik (alpha_j - beta_i) . y_c) p(y_c) h^3``."""
    alphas = np.atleast_2d(np.asarray(alphas, float))
    betas = np.atleast_2d(np.asarray(betas, float))
    y = grid.centers
    k = wave.k
    p = eval_p(medium, wave, y) * grid.cell_volume
    if not np.any(p):
        return np.zeros((len(betas), len(alphas)), dtype=complex)
    out_phase = np.exp(-1j * k * (betas @ y.T)) * p[None, :]
    in_phase = np.exp(1j * k * (alphas @ y.T))
    return out_phase @ in_phase.T


def born_f(medium: MediumSpec, wave: WaveParams, alpha, beta, grid: VolumeGrid) -> complex:
    """Discrete Fourier transform of ``p`` at ``k (alpha - beta)``."""
    return complex(born_f_matrix(medium, wave, alpha, beta, grid)[0, 0])


def born_amplitude(medium: MediumSpec, wave: WaveParams, alpha, beta,
                   polarization, grid: VolumeGrid) -> np.ndarray:
    """Vector amplitude with the total field replaced by the incident wave.

    ``A = (1/4pi) sum e^{ik(a-b).y} p E h^3 + (ik b / 4pi) sum e^{ik(a-b).y} (q.E) h^3``
    """
    alpha = np.asarray(alpha, float)
    beta = np.asarray(beta, float)
    pol = np.asarray(polarization, float)
    if abs(alpha @ pol) > 1e-12:
        raise ValueError("polarization must be orthogonal to alpha")
    y = grid.centers
    k = wave.k
    phase = np.exp(1j * k * (y @ (alpha - beta))) * grid.cell_volume
    p = eval_p(medium, wave, y)
    q = eval_q(medium, wave, y)
    s_p = phase @ p
    s_q = phase @ (q @ pol)
    return (s_p * pol + 1j * k * s_q * beta) / (4.0 * np.pi)


def synthesize_dataset(medium: MediumSpec, wave: WaveParams,
                       alpha_quad: SphereQuadrature, beta_quad: SphereQuadrature,
                       grid: VolumeGrid) -> ScatteringDataSet:
    """Born-exact data on every (beta, alpha) node pair."""
    f = born_f_matrix(medium, wave, alpha_quad.nodes, beta_quad.nodes, grid)
    return ScatteringDataSet(alpha_quad, beta_quad, f, wave,
                             provenance="born-exact",
                             domain_radius=medium.domain_radius)


def add_noise(data: ScatteringDataSet, delta: float, seed: int) -> ScatteringDataSet:
    """Add complex Gaussian noise rescaled to weighted norm exactly ``delta``."""
    if data.provenance == "noisy":
        raise ValueError("data are already noisy")
    if not delta > 0:
        raise ValueError("delta must be positive")
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(data.f.shape) + 1j * rng.standard_normal(data.f.shape)
    noise *= delta / weighted_norm(data, noise)
    return replace(data, f=data.f + noise, noise_level=float(delta),
                   provenance="noisy", seed=int(seed))
