# coding: utf-8

# # Scalar scattering data on the sphere
#
# The inversion works from a scalar `f(beta, alpha)` sampled on a product
# quadrature of incident and observed directions.  Here we build it twice:
# from full forward solves and from the Born formula, which is the Fourier
# transform of the contrast at `k (alpha - beta)`.

# In[1]:

import numpy as np

from eminverse import (
    MediumSpec,
    WaveParams,
    add_noise,
    build_dataset,
    build_sphere_quadrature,
    build_volume_grid,
    synthesize_dataset,
)


# In[2]:

wave = WaveParams.from_k(3.0)
medium = MediumSpec.single_bump(0.05, radius=1.0)
quad = build_sphere_quadrature(6, 12)
grid = build_volume_grid(1.0, 10)
print(len(quad), "directions, weights sum to", quad.weights.sum() / (4 * np.pi), "x 4 pi")


# ## Born data and full-solver data

# In[3]:

born = synthesize_dataset(medium, wave, quad, quad, grid)
full = build_dataset(medium, wave, quad, grid)
gap = np.linalg.norm(full.f - born.f) / np.linalg.norm(born.f)
print(f"relative gap full vs Born: {gap:.3f}")


# The forward direction (alpha = beta) is the total mass of p, the same for
# every node:

# In[4]:

print(np.diag(born.f)[:4].real)


# ## Noise
#
# `add_noise` draws complex Gaussian noise and rescales it so its weighted
# L2 norm over the sphere pair is exactly `delta`.

# In[5]:

noisy = add_noise(born, 1e-2 * born.norm(), seed=1)
print(f"|f| = {born.norm():.4e}  delta = {noisy.noise_level:.4e}  "
      f"measured = {np.sqrt(np.sum(born.pair_weights * abs(noisy.f - born.f)**2)):.4e}")
