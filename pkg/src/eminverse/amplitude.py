"""
Far-field amplitude of a solved field and its reduction to scalar data.
"""

from __future__ import annotations

import logging

import numpy as np

from .born import ScatteringDataSet
from .errors import PolarizationDegenerate, ZeroAmplitude
from .forward import FieldSolution, ForwardSolver, IncidentWave, SolverConfig, scattered_field_at
from .geometry import SphereQuadrature, VolumeGrid, orthonormal_pair
from .medium import MediumSpec, WaveParams, eval_p, eval_q

__all__ = [
    "MIN_SIN2",
    "scattering_amplitude",
    "project_f",
    "far_field_residual",
    "build_dataset",
]

log = logging.getLogger(__name__)

MIN_SIN2 = 0.4


def _sources(field: FieldSolution):
    y = field.grid.centers
    p = eval_p(field.medium, field.wave, y)
    q = eval_q(field.medium, field.wave, y)
    h3 = field.grid.cell_volume
    return p[:, None] * field.E * h3, np.einsum("ja,ja->j", q, field.E) * h3


def scattering_amplitude(field: FieldSolution, beta) -> np.ndarray:
    """Vector amplitude ``A(beta, alpha, k)`` of a solved field.

    ``beta`` may be one direction ``(3,)`` or a stack ``(m, 3)``; the result has
    the same leading shape.
    """
    beta = np.asarray(beta, dtype=float)
    b = beta.reshape(-1, 3)
    k = field.wave.k
    pE, qE = _sources(field)
    phase = np.exp(-1j * k * (b @ field.grid.centers.T))
    A = (phase @ pE + 1j * k * (phase @ qE)[:, None] * b) / (4.0 * np.pi)
    return A.reshape(beta.shape)


def project_f(A, beta, polarization, min_sin2: float = MIN_SIN2):
    """Scalar data ``4 pi (beta x A) . (beta x E) / sin^2(theta)``.

    The dot product is bilinear (no conjugation); ``polarization`` is real.

    Raises
    ------
    PolarizationDegenerate
        If ``sin^2`` of the angle between ``beta`` and ``polarization`` is
        below ``min_sin2``.
    """
    A = np.asarray(A)
    beta = np.asarray(beta, float)
    pol = np.asarray(polarization, float)
    bxe = np.cross(beta, pol)
    sin2 = np.sum(bxe * bxe, axis=-1)
    if np.any(sin2 < min_sin2):
        raise PolarizationDegenerate(
            f"sin^2(beta, E) = {np.min(sin2):.3g} below {min_sin2}"
        )
    bxa = np.cross(beta, A)
    return 4.0 * np.pi * np.sum(bxa * bxe, axis=-1) / sin2


def far_field_residual(field: FieldSolution, beta, r: float) -> float:
    """Relative gap between ``v(r beta)`` and ``exp(ikr)/r A(beta)``."""
    beta = np.asarray(beta, float)
    if r < 10.0 * field.grid.R:
        raise ValueError("far_field_residual needs r >= 10 R")
    k = field.wave.k
    far = np.exp(1j * k * r) / r * scattering_amplitude(field, beta)
    scale = np.linalg.norm(far)
    if scale == 0.0:
        raise ZeroAmplitude("scattering amplitude is zero; residual undefined")
    v = scattered_field_at(field, r * beta)
    return float(np.linalg.norm(v - far) / scale)


def build_dataset(medium: MediumSpec, wave: WaveParams, directions: SphereQuadrature,
                  grid: VolumeGrid, beta_quadrature: SphereQuadrature | None = None,
                  solver_config: SolverConfig | None = None) -> ScatteringDataSet:
    """Scalar data from full forward solves.

    For every incident node two orthonormal polarizations are solved; each
    observation direction uses the one with the larger ``|beta x E|``, so
    ``sin^2 >= 1/2`` always holds.  ``directions`` supplies the incident
    nodes and, unless ``beta_quadrature`` is given, the observation nodes.
    """
    beta_quad = beta_quadrature or directions
    betas = beta_quad.nodes
    solver = ForwardSolver(grid, medium, wave, solver_config)

    f = np.zeros((len(betas), len(directions)), dtype=complex)
    choice = np.zeros(f.shape, dtype=np.int8)
    for j, alpha in enumerate(directions.nodes):
        pols = orthonormal_pair(alpha)
        sin2 = np.stack([np.sum(np.cross(betas, e) ** 2, axis=1) for e in pols])
        pick = np.argmax(sin2, axis=0)
        choice[:, j] = pick
        for m, pol in enumerate(pols):
            rows = np.flatnonzero(pick == m)
            if rows.size == 0:
                continue
            sol = solver.solve(IncidentWave(alpha, pol, wave))
            A = scattering_amplitude(sol, betas[rows])
            f[rows, j] = project_f(A, betas[rows], pol)
        log.debug("dataset: incident node %d/%d done", j + 1, len(directions))
    return ScatteringDataSet(directions, beta_quad, f, wave, provenance="full-solver",
                             domain_radius=medium.domain_radius,
                             polarization_choice=choice)
