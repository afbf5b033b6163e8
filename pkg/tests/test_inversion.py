import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eminverse.born import ScatteringDataSet, add_noise, synthesize_dataset, weighted_norm
from eminverse.errors import InconsistentQuadratures, ZeroTruth
from eminverse.geometry import build_sphere_quadrature, build_volume_grid
from eminverse.inversion import (
    InversionConfig,
    ReconstructionResult,
    a_N,
    choose_N,
    delta_N,
    error_metric,
    h_N,
    pair_measure_factor,
    reconstruct,
    reconstruct_sweep,
    recover_eps,
)
from eminverse.medium import MediumSpec, WaveParams, eval_p
from eminverse.oracle import oracle_pair_integral, oracle_reconstruct

# a_N(0) from a 200^3 midpoint sum of delta_N over the cube [-2, 2]^3 (R=1, k=3)
A0_GRID = {1: 0.10453207931677677, 3: 0.3980613066694005, 6: 0.6405912446669068}


def test_delta_at_origin():
    for N in (1, 4, 9):
        assert delta_N(0.0, N, 1.3, 2.0) == pytest.approx((N / (4 * math.pi * 1.3**2)) ** 1.5, rel=1e-15)


def test_delta_support():
    assert delta_N(2.0, 3, 1.0, 3.0) == 0.0
    assert delta_N(2.0 + 1e-9, 3, 1.0, 3.0) == 0.0
    assert delta_N(-0.1, 3, 1.0, 3.0) == 0.0
    assert delta_N(1.999, 3, 1.0, 3.0) > 0


def test_delta_series_branch_continuous():
    # b = 2kr / (2N+3) crosses the series threshold 0.05
    N, R, k = 2, 1.0, 3.0
    r_switch = 0.05 * (2 * N + 3) / (2 * k)
    below = delta_N(r_switch * (1 - 1e-9), N, R, k)
    above = delta_N(r_switch * (1 + 1e-9), N, R, k)
    assert below == pytest.approx(above, rel=1e-12)
    r = np.linspace(0.0, 0.2, 41)
    assert np.all(np.diff(delta_N(r, N, R, k)) < 0)


@pytest.mark.parametrize("N", sorted(A0_GRID))
def test_a_at_zero_matches_volume_sum(N):
    assert a_N(0.0, N, 1.0, 3.0) == pytest.approx(A0_GRID[N], rel=1e-6)


def test_a_at_zero_radial_value():
    assert a_N(0.0, 1, 1.0, 3.0) == pytest.approx(0.10453208132864547, rel=1e-10)


def test_a_matches_spherical_rule_in_rotated_frame():
    # int delta_N(|x|) exp(-i z.x) dx with a product rule in a tilted frame
    N, R, k = 4, 1.0, 3.0
    quad = build_sphere_quadrature(48, 96)
    t, w = np.polynomial.legendre.leggauss(160)
    r, wr = R * (t + 1), R * w
    c, s = math.cos(0.7), math.sin(0.7)
    rot = np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]]) @ np.array([[1, 0, 0], [0, c, -s], [0, s, c]])
    nodes = quad.nodes @ rot.T
    for zn in (0.5, 2.0, 5.0):
        z = zn * np.array([0.36, 0.48, 0.8])
        ang = np.exp(-1j * np.multiply.outer(r, nodes @ z)) @ quad.weights
        val = np.sum(wr * r**2 * delta_N(r, N, R, k) * ang)
        assert abs(val.imag) < 1e-12
        assert val.real == pytest.approx(a_N(zn, N, R, k), rel=1e-10, abs=1e-13)


def test_h_basic():
    assert h_N(0.0, 3, 1.0, 2.0) == 0.0
    z = np.linspace(0.1, 4.0, 9)
    # a_N depends on k only through delta_N's ball factor; check the explicit k^2
    ratio = h_N(z, 3, 1.0, 2.0) / a_N(z, 3, 1.0, 2.0)
    assert np.allclose(ratio, z * 4.0 / (32 * math.pi**4), rtol=1e-14)
    assert np.all(np.isreal(h_N(z, 3, 1.0, 2.0)))


def test_pair_measure_factor():
    assert pair_measure_factor("unit") == 2.0
    assert pair_measure_factor("literal") == 1.0


def test_config_validation():
    with pytest.raises(ValueError):
        InversionConfig(R=0.0)
    with pytest.raises(ValueError):
        InversionConfig(R=1.0, N=0)
    with pytest.raises(ValueError):
        InversionConfig(R=1.0, N=13, N_max=12)
    with pytest.raises(ValueError):
        InversionConfig(R=1.0, normalization="other")


@pytest.fixture(scope="module")
def wave():
    return WaveParams.from_k(3.0)


@pytest.fixture(scope="module")
def radial_data(wave):
    medium = MediumSpec.single_bump(0.1, radius=1.0)
    quad = build_sphere_quadrature(16, 32)
    data = synthesize_dataset(medium, wave, quad, quad, build_volume_grid(1.0, 16))
    return medium, data


def test_reconstruct_zero_data(wave):
    quad = build_sphere_quadrature(4, 8)
    data = ScatteringDataSet(quad, quad, np.zeros((32, 32), complex), wave)
    res = reconstruct(data, build_volume_grid(1.0, 6), InversionConfig(R=1.0, N=3))
    assert np.all(res.p_N == 0)
    assert res.chosen_N == 3


@pytest.mark.parametrize("normalization", ["unit", "literal"])
def test_reconstruct_matches_oracle(wave, normalization, rng):
    quad = build_sphere_quadrature(2, 4)
    f = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    data = ScatteringDataSet(quad, quad, f, wave)
    grid = build_volume_grid(1.0, 4)
    cfg = InversionConfig(R=1.0, N=5, normalization=normalization)
    fast = reconstruct(data, grid, cfg).p_N
    slow = oracle_reconstruct(data, grid.centers, cfg)
    assert np.linalg.norm(fast - slow) <= 1e-10 * np.linalg.norm(slow)


def test_reconstruct_linear(wave, rng):
    quad = build_sphere_quadrature(3, 6)
    grid = build_volume_grid(1.0, 5)
    cfg = InversionConfig(R=1.0, N=4)
    f1 = rng.normal(size=(18, 18)) + 0j
    f2 = 1j * rng.normal(size=(18, 18))
    r = lambda f: reconstruct(ScatteringDataSet(quad, quad, f, wave), grid, cfg).p_N
    assert np.allclose(r(2 * f1 + 3 * f2), 2 * r(f1) + 3 * r(f2), rtol=1e-12, atol=1e-14)


def test_point_mass_normalization(wave):
    # f = 1 is the transform of a unit point mass at the origin; the pair sum
    # must reproduce the ball integral, up to the rule's error at alpha = beta
    # where h_N has a square-root kink in alpha . beta
    origin = build_volume_grid(1.0, 1)
    gaps = []
    for n in (8, 16):
        quad = build_sphere_quadrature(n, 2 * n)
        data = ScatteringDataSet(quad, quad, np.ones((len(quad), len(quad)), complex), wave)
        for N in (2, 6):
            cfg = InversionConfig(R=1.0, N=N)
            got = reconstruct(data, origin, cfg).p_N[0]
            ball = oracle_pair_integral(lambda t: h_N(t, N, 1.0, wave.k), wave.k)
            gaps.append(abs(got.real / (2 * ball) - 1))
            lit = reconstruct(data, origin, dataclasses.replace(cfg, normalization="literal")).p_N[0]
            assert lit == pytest.approx(got / 2, rel=1e-14)
    assert max(gaps[2:]) < 2e-3
    assert gaps[2] < gaps[0] / 4 and gaps[3] < gaps[1] / 4


def test_reconstruction_nearly_real(radial_data):
    _, data = radial_data
    grid = build_volume_grid(1.0, 10)
    p = reconstruct(data, grid, InversionConfig(R=1.0, N=8)).p_N
    assert np.max(np.abs(p.imag)) <= 1e-2 * np.max(np.abs(p))


def test_off_centre_bump_lands_on_the_right_side(wave):
    medium = MediumSpec.single_bump(0.1, radius=0.5, center=(0.45, 0.0, 0.0), domain_radius=1.0)
    quad = build_sphere_quadrature(12, 24)
    data = synthesize_dataset(medium, wave, quad, quad, build_volume_grid(1.0, 16))
    line = np.array([[x, 0.0, 0.0] for x in np.linspace(-0.9, 0.9, 37)])
    grid = dataclasses.replace(build_volume_grid(1.0, 1), centers=line,
                               index=np.zeros((37, 3), int))
    p = reconstruct(data, grid, InversionConfig(R=1.0, N=8)).p_N.real
    assert line[np.argmax(p), 0] > 0.2


def test_sweep_matches_fixed(radial_data):
    _, data = radial_data
    grid = build_volume_grid(1.0, 6)
    sweep = reconstruct_sweep(data, grid, InversionConfig(R=1.0, N_max=5), Ns=[2, 5])
    assert set(sweep) == {2, 5}
    fixed = reconstruct(data, grid, InversionConfig(R=1.0, N=5)).p_N
    assert np.array_equal(sweep[5], fixed)


def test_choose_N_requires_noise(radial_data):
    _, data = radial_data
    grid = build_volume_grid(1.0, 6)
    with pytest.raises(ValueError):
        choose_N(data, grid, InversionConfig(R=1.0))
    with pytest.raises(ValueError):
        reconstruct(data, grid, InversionConfig(R=1.0))


def test_choose_N_deterministic_and_auto(radial_data):
    _, data = radial_data
    grid = build_volume_grid(1.0, 8)
    noisy = add_noise(data, 1e-3 * data.norm(), seed=5)
    cfg = InversionConfig(R=1.0, N_max=8)
    n1 = choose_N(noisy, grid, cfg)
    assert n1 == choose_N(noisy, grid, cfg)
    res = reconstruct(noisy, grid, cfg)
    assert res.chosen_N == n1
    assert len(res.residual_history) == 7
    assert 1 <= n1 <= 7


def test_choose_N_small_noise_near_trend_optimum(radial_data):
    medium, data = radial_data
    grid = build_volume_grid(1.0, 12)
    cfg = InversionConfig(R=1.0, N_max=12)
    sweep = reconstruct_sweep(data, grid, cfg)
    errs = {N: error_metric(ReconstructionResult(grid, p, N), medium, data.wave) for N, p in sweep.items()}
    best = min(errs, key=errs.get)
    noisy = add_noise(data, 1e-6 * data.norm(), seed=2)
    assert choose_N(noisy, grid, cfg) >= best - 1


def test_choose_N_heavy_noise(radial_data):
    # white noise on 512 x 512 node pairs is averaged by the back-projection:
    # at delta = ||f|| p_N moves by under 1 %, so the choice does not move.
    # Under noise-dominated data the successive differences are nearly flat,
    # so the rule is not informative there; only boundedness is asserted.
    _, data = radial_data
    grid = build_volume_grid(1.0, 12)
    cfg = InversionConfig(R=1.0, N_max=12)
    mild = add_noise(data, data.norm(), seed=5)
    assert choose_N(mild, grid, cfg) == choose_N(add_noise(data, 1e-6 * data.norm(), 5), grid, cfg)
    heavy = reconstruct(add_noise(data, 1e3 * data.norm(), seed=5), grid, cfg)
    diffs = np.array(heavy.residual_history)
    assert diffs.max() < 2 * diffs.min()
    clean = reconstruct(data, grid, dataclasses.replace(cfg, N=heavy.chosen_N)).p_N
    assert np.linalg.norm(heavy.p_N - clean) < 1e3 * np.linalg.norm(clean)


def test_noise_propagation_bound(radial_data):
    # pointwise Cauchy-Schwarz: |p_N(noisy) - p_N(clean)| <= 2 delta ||h_N||_w
    _, data = radial_data
    grid = build_volume_grid(1.0, 6)
    cfg = InversionConfig(R=1.0, N=6)
    clean = reconstruct(data, grid, cfg).p_N
    k = data.wave.k
    xi = k * np.linalg.norm(data.alpha_quadrature.nodes[None] - data.beta_quadrature.nodes[:, None], axis=-1)
    hw = weighted_norm(data, h_N(xi, 6, 1.0, k))
    delta = 1e-2 * data.norm()
    bound = 2 * delta * hw * math.sqrt(grid.cell_volume * len(grid))
    for seed in range(20):
        noisy = reconstruct(add_noise(data, delta, seed), grid, cfg).p_N
        gap = math.sqrt(grid.cell_volume) * np.linalg.norm(noisy - clean)
        assert gap <= bound


def test_recover_eps(wave):
    grid = build_volume_grid(1.0, 3)
    p = np.array([0.0, 1j * wave.k**2] + [0.0] * (len(grid) - 2))
    eps = recover_eps(ReconstructionResult(grid, p, 1), wave)
    assert eps[0] == pytest.approx(wave.eps0)
    assert eps[1] == pytest.approx(wave.eps0 * (1 + 1j))


def test_error_metric(wave):
    medium = MediumSpec.single_bump(0.1, radius=1.0)
    grid = build_volume_grid(1.0, 6)
    p = eval_p(medium, wave, grid.centers)
    assert error_metric(ReconstructionResult(grid, p, 1), medium, wave) == 0.0
    assert error_metric(ReconstructionResult(grid, 0 * p, 1), medium, wave) == pytest.approx(1.0)
    with pytest.raises(ZeroTruth):
        error_metric(ReconstructionResult(grid, p, 1), MediumSpec((), 1.0), wave)


def test_inconsistent_quadratures(wave, radial_data):
    _, data = radial_data
    grid = build_volume_grid(1.0, 4)
    with pytest.raises(InconsistentQuadratures):
        reconstruct(data, grid, InversionConfig(R=0.8, N=2))
    # the container rejects a mismatched matrix; force one past it
    bad = dataclasses.replace(data)
    object.__setattr__(bad, "f", data.f[:, :10])
    with pytest.raises(InconsistentQuadratures):
        reconstruct(bad, grid, InversionConfig(R=1.0, N=2))


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 12), st.floats(0.0, 2.0))
def test_delta_nonnegative_and_bounded(N, r):
    d = delta_N(r, N, 1.0, 3.0)
    assert 0.0 <= d <= delta_N(0.0, N, 1.0, 3.0) * (1 + 1e-12)
