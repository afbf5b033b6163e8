"""
Forward scattering: the second-kind volume integral equation ``E = E0 + T E``.

On the cell-centre grid the operator is

    (T E)(x_i) = sum_j w_ij p_j E_j + h^3 sum_{j != i} grad_x g(x_i - y_j) (q_j . E_j)

with ``w_ij = g(x_i - y_j) h^3`` off the diagonal and ``w_ii`` the self-cell
integral of :func:`~eminverse.geometry.self_cell_integral`.  The gradient
term's self-cell vanishes by odd symmetry.  Both sums are discrete
convolutions on the bounding box, which is how :class:`VolumeOperator`
applies them (zero-padded FFT).  Small systems are also assembled densely.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from .errors import (
    GridTooCoarse,
    NonConvergence,
    PointInsideDomain,
    SingularPoint,
    SingularSystem,
)
from .geometry import VolumeGrid, direction, self_cell_integral
from .medium import MediumSpec, WaveParams, eval_p, eval_q, validate_medium

__all__ = [
    "IncidentWave",
    "SolverConfig",
    "FieldSolution",
    "VolumeOperator",
    "ForwardSolver",
    "green",
    "grad_green",
    "apply_T",
    "solve_forward",
    "fredholm_residual",
    "divergence_diagnostic",
    "scattered_field_at",
]

log = logging.getLogger(__name__)

FOUR_PI = 4.0 * math.pi
_COINCIDENT = 1e-14


def green(x, y, k):
    """Outgoing Helmholtz kernel ``exp(ik|x-y|) / (4 pi |x-y|)``.

    Broadcasts over leading dimensions of ``x`` and ``y``.
    """
    r = np.linalg.norm(np.asarray(x, float) - np.asarray(y, float), axis=-1)
    if np.any(r < _COINCIDENT):
        raise SingularPoint("green() evaluated at coincident points")
    return np.exp(1j * k * r) / (FOUR_PI * r)


def grad_green(x, y, k):
    """Gradient of :func:`green` with respect to ``x``, shape ``(..., 3)``."""
    d = np.asarray(x, float) - np.asarray(y, float)
    r = np.linalg.norm(d, axis=-1)
    if np.any(r < _COINCIDENT):
        raise SingularPoint("grad_green() evaluated at coincident points")
    g = np.exp(1j * k * r) / (FOUR_PI * r)
    return (g * (1j * k - 1.0 / r) / r)[..., None] * d


@dataclass(frozen=True)
class IncidentWave:
    """Plane wave ``polarization * exp(i k alpha . x)``."""

    alpha: np.ndarray
    polarization: np.ndarray
    wave: WaveParams

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=float).reshape(3)
        pol = np.asarray(self.polarization, dtype=float).reshape(3)
        if abs(np.linalg.norm(alpha) - 1.0) > 1e-12:
            raise ValueError("alpha must be a unit vector")
        if abs(np.linalg.norm(pol) - 1.0) > 1e-12:
            raise ValueError("polarization must be a unit vector")
        if abs(alpha @ pol) > 1e-12:
            raise ValueError("polarization must be orthogonal to alpha")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "polarization", pol)

    @classmethod
    def normalized(cls, alpha, polarization, wave) -> "IncidentWave":
        """Build from arbitrary vectors: normalize both, project out alpha."""
        alpha = direction(alpha)
        pol = np.asarray(polarization, float)
        pol = direction(pol - (pol @ alpha) * alpha)
        return cls(alpha, pol, wave)

    def field(self, x) -> np.ndarray:
        phase = np.exp(1j * self.wave.k * (np.asarray(x, float) @ self.alpha))
        return phase[..., None] * self.polarization


@dataclass(frozen=True)
class SolverConfig:
    method: str = "auto"  # "auto", "dense" or "iterative"
    tol_dense: float = 1e-10
    tol_iterative: float = 1e-8
    max_iter: int = 500
    restart: int = 50
    # 1 CPU / 5 GB desk machines: 1500 cells is a 4500^2 complex matrix (~320 MB)
    dense_max_cells: int = 1500

    def __post_init__(self):
        if self.method not in ("auto", "dense", "iterative"):
            raise ValueError(f"unknown solver method {self.method!r}")

    def resolve(self, n_cells: int) -> str:
        if self.method != "auto":
            return self.method
        return "dense" if n_cells <= self.dense_max_cells else "iterative"

    def tol(self, method: str) -> float:
        return self.tol_dense if method == "dense" else self.tol_iterative


class VolumeOperator:
    """The discrete operator ``T`` for one (grid, medium, wave) triple.

    Parameters
    ----------
    grid : VolumeGrid
    medium : MediumSpec
    wave : WaveParams
    """

    def __init__(self, grid: VolumeGrid, medium: MediumSpec, wave: WaveParams):
        self.grid = grid
        self.medium = medium
        self.wave = wave
        self.p = eval_p(medium, wave, grid.centers)
        self.q = eval_q(medium, wave, grid.centers)
        self.self_term = self_cell_integral(grid.h, wave.k)
        self._kernel_hat = None

    @property
    def n_cells(self) -> int:
        return len(self.grid)

    @property
    def is_zero(self) -> bool:
        return not (np.any(self.p) or np.any(self.q))

    def _offset_kernels(self):
        n = self.grid.n_per_axis
        M = 2 * n
        h = self.grid.h
        k = self.wave.k
        off = np.fft.fftfreq(M, d=1.0 / M)  # 0..n-1, -n..-1
        dx, dy, dz = np.meshgrid(off * h, off * h, off * h, indexing="ij")
        r = np.sqrt(dx**2 + dy**2 + dz**2)
        r[0, 0, 0] = 1.0
        g = np.exp(1j * k * r) / (FOUR_PI * r) * h**3
        radial = g * (1j * k - 1.0 / r) / r
        grad = np.stack([radial * dx, radial * dy, radial * dz])
        g[0, 0, 0] = self.self_term
        grad[:, 0, 0, 0] = 0.0
        return g, grad

    def _kernels(self):
        if self._kernel_hat is None:
            g, grad = self._offset_kernels()
            self._kernel_hat = (
                sfft.fftn(g),
                sfft.fftn(grad, axes=(1, 2, 3)),
            )
        return self._kernel_hat

    def apply(self, E: np.ndarray) -> np.ndarray:
        """Return ``T E`` for a field of shape ``(n_cells, 3)``."""
        E = np.asarray(E, dtype=complex).reshape(self.n_cells, 3)
        if self.is_zero:
            return np.zeros_like(E)
        g_hat, grad_hat = self._kernels()
        n = self.grid.n_per_axis
        M = 2 * n
        idx = tuple(self.grid.index.T)

        src = np.zeros((4, M, M, M), dtype=complex)
        for a in range(3):
            src[a][idx] = self.p * E[:, a]
        src[3][idx] = np.einsum("ia,ia->i", self.q, E)
        src_hat = sfft.fftn(src, axes=(1, 2, 3))
        out_hat = g_hat[None] * src_hat[:3] + grad_hat * src_hat[3][None]
        out = sfft.ifftn(out_hat, axes=(1, 2, 3))
        return np.stack([out[a][idx] for a in range(3)], axis=1)

    def matrix(self) -> np.ndarray:
        """Dense ``T`` of shape ``(3n, 3n)``; unknowns ordered cell-major."""
        x = self.grid.centers
        h3 = self.grid.cell_volume
        k = self.wave.k
        n = self.n_cells
        d = x[:, None, :] - x[None, :, :]
        r = np.linalg.norm(d, axis=-1)
        np.fill_diagonal(r, 1.0)
        W = np.exp(1j * k * r) / (FOUR_PI * r) * h3
        radial = W * (1j * k - 1.0 / r) / r
        np.fill_diagonal(W, self.self_term)
        np.fill_diagonal(radial, 0.0)
        del r

        T = np.zeros((n, 3, n, 3), dtype=complex)
        Wp = W * self.p[None, :]
        for a in range(3):
            T[:, a, :, a] = Wp
            # (grad g)_a (x_i - y_j) q_j[b]
            Ga = radial * d[:, :, a]
            for b in range(3):
                T[:, a, :, b] += Ga * self.q[None, :, b]
        return T.reshape(3 * n, 3 * n)


def apply_T(grid: VolumeGrid, medium: MediumSpec, wave: WaveParams, E) -> np.ndarray:
    """``T E`` on the grid; thin wrapper over :class:`VolumeOperator`."""
    return VolumeOperator(grid, medium, wave).apply(E)


@dataclass
class FieldSolution:
    """Total field on the grid for one incident plane wave."""

    grid: VolumeGrid
    incident: IncidentWave
    medium: MediumSpec
    E: np.ndarray
    solver_residual: float
    method: str = "dense"
    iterations: int = 0

    @property
    def wave(self) -> WaveParams:
        return self.incident.wave

    @property
    def E0(self) -> np.ndarray:
        return self.incident.field(self.grid.centers)


def fredholm_residual(op: VolumeOperator, E, E0) -> float:
    """``||(I - T) E - E0|| / ||E0||`` in the discrete 2-norm over cells."""
    r = E - op.apply(E) - E0
    return float(np.linalg.norm(r) / np.linalg.norm(E0))


class ForwardSolver:
    """Solves ``(I - T) E = E0`` for many incident waves on one medium.

    The dense path factors ``I - T`` once; the iterative path runs restarted
    GMRES with FFT-based operator application.
    """

    def __init__(self, grid: VolumeGrid, medium: MediumSpec, wave: WaveParams,
                 config: SolverConfig | None = None):
        if len(grid) == 0:
            raise ValueError("grid has no cells")
        validate_medium(medium, wave, grid)
        self.config = config or SolverConfig()
        self.operator = VolumeOperator(grid, medium, wave)
        self.method = self.config.resolve(len(grid))
        self.tol = self.config.tol(self.method)
        self._lu = None

    @property
    def grid(self):
        return self.operator.grid

    def _factor(self):
        if self._lu is None:
            n3 = 3 * self.operator.n_cells
            A = np.eye(n3, dtype=complex) - self.operator.matrix()
            try:
                lu, piv = sla.lu_factor(A, overwrite_a=True, check_finite=False)
            except (ValueError, np.linalg.LinAlgError) as exc:
                raise SingularSystem(str(exc)) from exc
            diag = np.abs(np.diag(lu))
            if diag.min() <= np.finfo(float).eps * diag.max():
                raise SingularSystem("I - T is numerically singular on this grid")
            self._lu = (lu, piv)
        return self._lu

    def _solve_dense(self, E0):
        x = sla.lu_solve(self._factor(), E0.ravel(), check_finite=False)
        return x.reshape(-1, 3), 0

    def _solve_iterative(self, E0):
        n3 = 3 * self.operator.n_cells
        op = spla.LinearOperator(
            (n3, n3),
            matvec=lambda v: v - self.operator.apply(v.reshape(-1, 3)).ravel(),
            dtype=complex,
        )
        count = [0]

        def cb(_):
            count[0] += 1

        restart = min(self.config.restart, self.config.max_iter)
        x, info = spla.gmres(
            op, E0.ravel(), rtol=0.1 * self.tol, atol=0.0, restart=restart,
            maxiter=max(1, math.ceil(self.config.max_iter / restart)),
            callback=cb, callback_type="pr_norm",
        )
        if info > 0:
            log.warning("GMRES stopped after %d iterations (info=%d)", count[0], info)
        return x.reshape(-1, 3), count[0]

    def solve(self, incident: IncidentWave) -> FieldSolution:
        E0 = incident.field(self.grid.centers)
        if self.operator.is_zero:
            E, its = E0.copy(), 0
        elif self.method == "dense":
            E, its = self._solve_dense(E0)
        else:
            E, its = self._solve_iterative(E0)
        res = fredholm_residual(self.operator, E, E0)
        if res > self.tol:
            if self.method == "dense":
                raise SingularSystem(
                    f"dense solve residual {res:.2e} exceeds {self.tol:g}"
                )
            raise NonConvergence(f"residual {res:.2e} exceeds {self.tol:g}")
        log.debug("forward solve: %s, %d its, residual %.2e", self.method, its, res)
        return FieldSolution(self.grid, incident, self.operator.medium, E, res,
                             self.method, its)


def solve_forward(grid: VolumeGrid, medium: MediumSpec, incident: IncidentWave,
                  config: SolverConfig | None = None) -> FieldSolution:
    """Solve the discrete Fredholm equation for a single incident wave."""
    return ForwardSolver(grid, medium, incident.wave, config).solve(incident)


def divergence_diagnostic(field: FieldSolution, medium: MediumSpec | None = None) -> float:
    """Relative size of ``div(K^2 E)`` on interior cells.

    Returns ``||div(K^2 E)|| / (k ||K^2 E||)`` with the divergence taken by
    second-order central differences at cells whose six neighbours are all
    on the grid.
    """
    medium = medium or field.medium
    grid = field.grid
    n = grid.n_per_axis
    if n < 3:
        raise GridTooCoarse("divergence diagnostic needs >= 3 cells per axis")
    k = field.wave.k
    K2 = k**2 + eval_p(medium, field.wave, grid.centers)
    F = grid.to_box(K2[:, None] * field.E)
    mask = grid.to_box(np.ones(len(grid), dtype=bool))

    inner = mask[1:-1, 1:-1, 1:-1].copy()
    for ax in range(3):
        for shift in (0, 2):
            sl = [slice(1, -1)] * 3
            sl[ax] = slice(shift, shift + n - 2)
            inner &= mask[tuple(sl)]
    if not inner.any():
        raise GridTooCoarse("no interior cells with a full stencil")

    div = np.zeros(inner.shape, dtype=complex)
    for ax in range(3):
        hi = [slice(1, -1)] * 3
        lo = [slice(1, -1)] * 3
        hi[ax] = slice(2, n)
        lo[ax] = slice(0, n - 2)
        div += (F[tuple(hi) + (ax,)] - F[tuple(lo) + (ax,)]) / (2.0 * grid.h)
    center = F[1:-1, 1:-1, 1:-1][inner]
    return float(np.linalg.norm(div[inner]) / (k * np.linalg.norm(center)))


def scattered_field_at(field: FieldSolution, x) -> np.ndarray:
    """Scattered field ``v = E - E0`` at exterior points ``x`` (shape ``(..., 3)``)."""
    x = np.asarray(x, dtype=float)
    if np.any(np.linalg.norm(x, axis=-1) <= field.grid.R):
        raise PointInsideDomain("scattered_field_at needs |x| > grid radius")
    wave = field.wave
    y = field.grid.centers
    h3 = field.grid.cell_volume
    p = eval_p(field.medium, wave, y)
    q = eval_q(field.medium, wave, y)
    pE = p[:, None] * field.E
    qE = np.einsum("ja,ja->j", q, field.E)

    pts = x.reshape(-1, 3)
    out = np.empty((len(pts), 3), dtype=complex)
    for m, xm in enumerate(pts):
        g = green(xm, y, wave.k)
        gg = grad_green(xm, y, wave.k)
        out[m] = h3 * (g @ pE + qE @ gg)
    return out.reshape(x.shape)
