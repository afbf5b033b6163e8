# coding: utf-8

# # Recovering the permittivity from Born data
#
# The reconstruction `p_N` is a filtered back-projection: every node pair
# contributes `f * h_N(|xi|) * exp(-i xi . x)` with `xi = k (alpha - beta)`.
# Larger N means a sharper mollifier and less smoothing.

# In[1]:

import numpy as np
from scipy.integrate import trapezoid

from eminverse import (
    InversionConfig,
    MediumSpec,
    WaveParams,
    build_sphere_quadrature,
    build_volume_grid,
    error_metric,
    reconstruct,
    recover_eps,
    synthesize_dataset,
)
from eminverse.inversion import delta_N
from eminverse.medium import eval_p


# In[2]:

wave = WaveParams.from_k(3.0)
medium = MediumSpec.single_bump(0.1, radius=1.0)
quad = build_sphere_quadrature(16, 32)
grid = build_volume_grid(1.0, 16)
data = synthesize_dataset(medium, wave, quad, quad, grid)


# ## The mollifier
#
# `delta_N` is close to a Gaussian of variance `2 R^2 / N`, truncated to
# `|x| <= 2R`.  Its mass inside that ball is well below one for small N,
# which limits how well `p_N` can match `p` at this scale.

# In[3]:

r = np.linspace(0, 2, 4001)
for N in (1, 4, 8, 12):
    mass = trapezoid(4 * np.pi * r**2 * delta_N(r, N, 1.0, wave.k), r)
    print(f"N={N:2d}  delta_N(0)={delta_N(0.0, N, 1.0, wave.k):.4f}  mass={mass:.3f}")


# ## Reconstruction error against N

# In[4]:

for N in (1, 2, 4, 8, 12):
    res = reconstruct(data, grid, InversionConfig(R=1.0, N=N))
    print(f"N={N:2d}  relative L2 error={error_metric(res, medium, wave):.4f}  "
          f"max |Im p_N|={np.abs(res.p_N.imag).max():.1e}")


# ## Permittivity at the centre

# In[5]:

res = reconstruct(data, grid, InversionConfig(R=1.0, N=12))
eps = recover_eps(res, wave)
centre = np.argmin(np.linalg.norm(grid.centers, axis=1))
print("true eps:", 1 + eval_p(medium, wave, grid.centers[centre]) / wave.k**2)
print("p_N gives:", eps[centre])
