"""
Regularized inversion of the band-limited Fourier data ``f(k(alpha - beta))``.

The reconstruction is a double quadrature over incident and observation
directions,

    p_N(x) = C sum_ij w_i w_j f_ij h_N(|xi_ij|) exp(-i xi_ij . x),
    xi_ij  = k (alpha_j - beta_i),

with the filter ``h_N(z) = |z| a_N(z) k^2 / (32 pi^4)`` built from the Fourier
transform ``a_N`` of the delta sequence ``delta_N``.  The ``|z|`` factor cancels
the ``1/|xi|`` density of the pair map ``(alpha, beta) -> xi`` on the ball
``|xi| <= 2k``.  That map carries the measure ``(2 pi / k^2) |xi|^-1 d xi``,
so ``C = 2`` makes ``p_N`` the band-limited smoothing ``p * delta_N``.
``normalization="literal"`` keeps ``C = 1``.

The phase is ``exp(-i xi . x)`` because the data use ``exp(+i xi . y)``.  With
the opposite sign the reconstruction is ``p(-x)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .born import ScatteringDataSet
from .errors import InconsistentQuadratures, ZeroTruth
from .geometry import VolumeGrid
from .medium import MediumSpec, WaveParams, eval_p, p_to_eps

__all__ = [
    "InversionConfig",
    "ReconstructionResult",
    "delta_N",
    "a_N",
    "h_N",
    "pair_measure_factor",
    "reconstruct",
    "reconstruct_sweep",
    "choose_N",
    "recover_eps",
    "error_metric",
]

log = logging.getLogger(__name__)

_SERIES_B = 0.05
_BIN = 1e-12
H_CONSTANT = 1.0 / (32.0 * math.pi**4)


@dataclass(frozen=True)
class InversionConfig:
    """Parameters of the inversion.

    ``N`` is a positive integer or ``"auto"`` (quasi-optimality choice, noisy
    data only).
    """

    R: float
    N: int | str = "auto"
    radial_quadrature_points: int = 128
    N_max: int = 12
    normalization: str = "unit"

    def __post_init__(self):
        if not self.R > 0:
            raise ValueError("R must be positive")
        if self.N != "auto" and not (isinstance(self.N, (int, np.integer)) and self.N >= 1):
            raise ValueError("N must be a positive integer or 'auto'")
        if self.N != "auto" and self.N > self.N_max:
            raise ValueError("N exceeds N_max")
        if self.radial_quadrature_points < 32:
            raise ValueError("radial_quadrature_points must be >= 32")
        if self.normalization not in ("unit", "literal"):
            raise ValueError("normalization must be 'unit' or 'literal'")


@dataclass
class ReconstructionResult:
    grid: VolumeGrid
    p_N: np.ndarray
    chosen_N: int
    residual_history: list = field(default_factory=list)
    error_vs_truth: float | None = None


def _ball_ratio(b):
    """``(sin b - b cos b) / (b^3 / 3)`` with its removable singularity at 0."""
    b = np.asarray(b, dtype=float)
    small = b < _SERIES_B
    bs = np.where(small, 1.0, b)
    direct = 3.0 * (np.sin(bs) - bs * np.cos(bs)) / bs**3
    b2 = b * b
    series = 1.0 - b2 / 10.0 + b2 * b2 / 280.0 - b2**3 / 15120.0
    return np.where(small, series, direct)


def delta_N(r, N: int, R: float, k: float):
    """Delta-sequence profile at radius ``r``; zero outside ``[0, 2R]``."""
    r = np.asarray(r, dtype=float)
    b = 2.0 * k * r / (2 * N + 3)
    inside = (r >= 0) & (r <= 2.0 * R)
    rc = np.where(inside, r, 0.0)
    val = (
        (1.0 - rc**2 / (4.0 * R**2)) ** N
        * (N / (4.0 * math.pi * R**2)) ** 1.5
        * _ball_ratio(b * inside) ** (2 * N + 3)
    )
    return np.where(inside, val, 0.0)


def _radial_rule(R: float, points: int):
    t, w = np.polynomial.legendre.leggauss(points)
    return R * (t + 1.0), R * w


def a_N(z_norm, N: int, R: float, k: float, radial_points: int = 128):
    """Fourier transform of ``delta_N`` at ``|z| = z_norm`` (real, radial)."""
    z = np.asarray(z_norm, dtype=float)
    r, w = _radial_rule(R, radial_points)
    radial = 4.0 * math.pi * w * r**2 * delta_N(r, N, R, k)
    # np.sinc(x) = sin(pi x) / (pi x)
    return np.sinc(np.multiply.outer(z, r) / math.pi) @ radial


def h_N(z_norm, N: int, R: float, k: float, radial_points: int = 128):
    """Filter ``|z| a_N(|z|) k^2 / (32 pi^4)``."""
    z = np.asarray(z_norm, dtype=float)
    return z * a_N(z, N, R, k, radial_points) * k**2 * H_CONSTANT


def pair_measure_factor(normalization: str) -> float:
    return 2.0 if normalization == "unit" else 1.0


def _check(data: ScatteringDataSet, config: InversionConfig):
    if data.f.shape != (len(data.beta_quadrature), len(data.alpha_quadrature)):
        raise InconsistentQuadratures("data matrix does not match its quadratures")
    if data.domain_radius is not None and config.R < data.domain_radius * (1 - 1e-12):
        raise InconsistentQuadratures(
            f"config R = {config.R} is smaller than the data domain radius "
            f"{data.domain_radius}"
        )


class _PairFilter:
    """Per-pair geometry and cached ``h_N`` over unique ``|xi|`` values."""

    def __init__(self, data: ScatteringDataSet, config: InversionConfig):
        self.data = data
        self.config = config
        k = data.wave.k
        A = data.alpha_quadrature.nodes
        B = data.beta_quadrature.nodes
        xi = k * np.linalg.norm(A[None, :, :] - B[:, None, :], axis=-1)
        keys = np.round(xi / _BIN).astype(np.int64)
        self.unique_keys, self.inverse = np.unique(keys, return_inverse=True)
        self.unique_xi = self.unique_keys * _BIN
        self.shape = xi.shape
        self.weighted_f = data.pair_weights * data.f * pair_measure_factor(config.normalization)

    def h(self, N: int) -> np.ndarray:
        k = self.data.wave.k
        hv = h_N(self.unique_xi, N, self.config.R, k, self.config.radial_quadrature_points)
        return hv[self.inverse].reshape(self.shape)


def _backproject(data: ScatteringDataSet, M: np.ndarray, x: np.ndarray) -> np.ndarray:
    # sum_ij M_ij exp(-ik(alpha_j - beta_i).x)
    k = data.wave.k
    in_phase = np.exp(-1j * k * (data.alpha_quadrature.nodes @ x.T))
    out_phase = np.exp(1j * k * (data.beta_quadrature.nodes @ x.T))
    return np.einsum("ic,ic->c", out_phase, M @ in_phase)


def _reconstruct_fixed(pf: _PairFilter, grid: VolumeGrid, N: int) -> np.ndarray:
    return _backproject(pf.data, pf.weighted_f * pf.h(N), grid.centers)


def _l2(grid: VolumeGrid, values) -> float:
    return float(np.sqrt(grid.cell_volume * np.sum(np.abs(values) ** 2)))


def reconstruct_sweep(data: ScatteringDataSet, grid: VolumeGrid,
                      config: InversionConfig, Ns=None) -> dict:
    """``{N: p_N}`` for every ``N`` in ``Ns`` (default ``1..N_max``)."""
    _check(data, config)
    pf = _PairFilter(data, config)
    Ns = range(1, config.N_max + 1) if Ns is None else Ns
    return {N: _reconstruct_fixed(pf, grid, N) for N in Ns}


def _quasi_optimal(grid: VolumeGrid, sweep: dict):
    Ns = sorted(sweep)
    diffs = [_l2(grid, sweep[b] - sweep[a]) for a, b in zip(Ns[:-1], Ns[1:])]
    # argmin returns the first minimum: ties go to the smaller N
    return Ns[int(np.argmin(diffs))], diffs


def choose_N(data: ScatteringDataSet, grid: VolumeGrid, config: InversionConfig) -> int:
    """Quasi-optimality choice of ``N`` for noisy data.

    Minimizes ``||p_{N+1} - p_N||`` over ``N = 1 .. N_max - 1``.
    """
    if data.provenance != "noisy" or not data.noise_level > 0:
        raise ValueError("choose_N requires noisy data with a positive noise level")
    return _quasi_optimal(grid, reconstruct_sweep(data, grid, config))[0]


def reconstruct(data: ScatteringDataSet, grid: VolumeGrid,
                config: InversionConfig) -> ReconstructionResult:
    """Evaluate ``p_N`` on every grid cell.

    With ``config.N == "auto"`` the quasi-optimality rule picks ``N`` and the
    successive differences are kept in ``residual_history``.
    """
    _check(data, config)
    if config.N == "auto":
        if data.provenance != "noisy":
            raise ValueError("N='auto' requires noisy data; set N explicitly")
        sweep = reconstruct_sweep(data, grid, config)
        N, diffs = _quasi_optimal(grid, sweep)
        log.info("quasi-optimality chose N=%d", N)
        return ReconstructionResult(grid, sweep[N], N, diffs)
    pf = _PairFilter(data, config)
    return ReconstructionResult(grid, _reconstruct_fixed(pf, grid, config.N), config.N)


def recover_eps(result: ReconstructionResult, wave: WaveParams) -> np.ndarray:
    """Cellwise permittivity from the reconstructed contrast."""
    return p_to_eps(result.p_N, wave)


def error_metric(result: ReconstructionResult, medium: MediumSpec,
                 wave: WaveParams, grid: VolumeGrid | None = None) -> float:
    """Relative L2 error ``||p_N - p|| / ||p||`` over the reconstruction grid."""
    grid = grid or result.grid
    p = eval_p(medium, wave, grid.centers)
    ref = _l2(grid, p)
    if ref == 0.0:
        raise ZeroTruth("true contrast is zero; relative error undefined")
    return _l2(grid, result.p_N - p) / ref
