"""Electromagnetic inverse scattering with a scalar weakly singular kernel.

Forward model: the vector volume integral equation E = E0 + T E on a
cell-centre grid.  Data: the far-field amplitude reduced to a scalar Fourier
sample f(k(alpha - beta)) of the contrast p = K^2 - k^2.  Inversion: a
delta-sequence filtered backprojection over pairs of sphere directions.
"""

from .amplitude import build_dataset, far_field_residual, project_f, scattering_amplitude
from .born import (
    ScatteringDataSet,
    add_noise,
    born_amplitude,
    born_f,
    synthesize_dataset,
)
from .forward import (
    FieldSolution,
    ForwardSolver,
    IncidentWave,
    SolverConfig,
    apply_T,
    divergence_diagnostic,
    green,
    grad_green,
    scattered_field_at,
    solve_forward,
)
from .geometry import (
    SphereQuadrature,
    VolumeGrid,
    build_sphere_quadrature,
    build_volume_grid,
    self_cell_integral,
)
from .inversion import (
    InversionConfig,
    ReconstructionResult,
    a_N,
    choose_N,
    delta_N,
    error_metric,
    h_N,
    reconstruct,
    recover_eps,
)
from .medium import (
    Bump,
    MediumSpec,
    WaveParams,
    eps_to_p,
    eval_p,
    eval_q,
    p_to_eps,
    validate_medium,
)

__version__ = "0.1.0"
