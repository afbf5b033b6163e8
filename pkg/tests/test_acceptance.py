"""Acceptance criteria 1-12; each test prints one PASS/FAIL line in the summary."""

import json
import math

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from eminverse.amplitude import build_dataset, far_field_residual, project_f, scattering_amplitude
from eminverse.born import add_noise, born_amplitude, born_f, synthesize_dataset
from eminverse.cli import main
from eminverse.forward import ForwardSolver, IncidentWave, SolverConfig, divergence_diagnostic, solve_forward
from eminverse.geometry import (
    VolumeGrid,
    build_sphere_quadrature,
    build_volume_grid,
    orthonormal_pair,
    self_cell_integral,
)
from eminverse.inversion import (
    InversionConfig,
    ReconstructionResult,
    a_N,
    choose_N,
    delta_N,
    error_metric,
    h_N,
    reconstruct,
    reconstruct_sweep,
)
from eminverse.medium import MediumSpec, WaveParams
from eminverse.oracle import oracle_reconstruct


def record(n: int, ok: bool, detail: str):
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] C{n:<2d} {detail}")
    assert ok, detail


def _random_unit(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def _random_incident(rng, wave):
    alpha = _random_unit(rng)
    e1, e2 = orthonormal_pair(alpha)
    t = rng.uniform(0, 2 * math.pi)
    return IncidentWave(alpha, math.cos(t) * e1 + math.sin(t) * e2, wave)


def test_c01_zero_scatterer(rng):
    wave = WaveParams.from_k(2.0)
    grid = build_volume_grid(1.0, 8)
    zero = MediumSpec((), 1.0)
    worst_E = worst_A = 0.0
    for _ in range(10):
        inc = _random_incident(rng, wave)
        sol = solve_forward(grid, zero, inc)
        worst_E = max(worst_E, np.linalg.norm(sol.E - sol.E0) / np.linalg.norm(sol.E0))
        worst_A = max(worst_A, np.linalg.norm(scattering_amplitude(sol, _random_unit(rng))))
    record(1, worst_E <= 1e-12 and worst_A <= 1e-12,
           f"zero scatterer: max |E-E0|/|E0| = {worst_E:.1e}, max |A| = {worst_A:.1e} (<= 1e-12)")


def test_c02_fredholm_residual(rng, lumpy_medium):
    wave = WaveParams.from_k(2.0)
    checks = []
    for n, method in ((10, "dense"), (16, "iterative")):
        cfg = SolverConfig(method=method)
        solver = ForwardSolver(build_volume_grid(1.0, n), lumpy_medium, wave, cfg)
        for _ in range(3):
            sol = solver.solve(_random_incident(rng, wave))
            checks.append((sol.solver_residual, cfg.tol(method), method, n))
    ok = all(r <= tol for r, tol, *_ in checks)
    worst = max(checks, key=lambda c: c[0] / c[1])
    record(2, ok, f"Fredholm residual <= tol on {len(checks)} solves; "
                  f"worst {worst[0]:.1e} vs tol {worst[1]:g} ({worst[2]}, {worst[3]}^3)")


def test_c03_divergence_identity():
    wave = WaveParams.from_k(2.0)
    medium = MediumSpec.single_bump(0.1, radius=1.0)
    inc = IncidentWave(np.array([0, 0, 1.0]), np.array([1.0, 0, 0]), wave)
    d = [divergence_diagnostic(solve_forward(build_volume_grid(1.0, n), medium, inc)) for n in (12, 24)]
    factor = d[0] / d[1]
    record(3, factor >= 2, f"divergence diagnostic 12^3 -> 24^3: {d[0]:.2e} -> {d[1]:.2e}, factor {factor:.2f} (>= 2)")


def test_c04_born_quadratic():
    wave = WaveParams.from_k(2.0)
    grid = build_volume_grid(1.0, 10)
    inc = IncidentWave(np.array([0, 0, 1.0]), np.array([1.0, 0, 0]), wave)
    betas = build_sphere_quadrature(4, 8).nodes

    def gap(t):
        m = MediumSpec.single_bump(t, radius=1.0)
        full = scattering_amplitude(solve_forward(grid, m, inc), betas)
        born = np.array([born_amplitude(m, wave, inc.alpha, b, inc.polarization, grid) for b in betas])
        return np.linalg.norm(full - born)

    ratio = gap(0.05) / gap(0.1)
    record(4, 0.15 <= ratio <= 0.4, f"Born gap r(t/2)/r(t) at t=0.1: {ratio:.3f} (in [0.15, 0.4])")


def test_c05_far_field():
    wave = WaveParams.from_k(2.0)
    medium = MediumSpec.single_bump(0.1, radius=1.0)
    inc = IncidentWave(np.array([0, 0, 1.0]), np.array([1.0, 0, 0]), wave)
    sol = solve_forward(build_volume_grid(1.0, 10), medium, inc)
    beta = np.array([0.6, 0.0, 0.8])
    res = {kr: far_field_residual(sol, beta, kr / wave.k) for kr in (100, 1000)}
    decay = res[100] / res[1000]
    ok = all(res[kr] <= 5 / kr for kr in res) and 5 <= decay <= 20
    record(5, ok, f"far-field residual {res[100]:.2e} (kr=100), {res[1000]:.2e} (kr=1000), "
                  f"decay {decay:.1f} (bound 5/kr, decay in [5, 20])")


def test_c06_projection_identity(rng, lumpy_medium):
    wave = WaveParams.from_k(2.0)
    grid = build_volume_grid(1.0, 6)
    worst = 0.0
    count = 0
    while count < 50:
        inc = _random_incident(rng, wave)
        beta = _random_unit(rng)
        if np.sum(np.cross(beta, inc.polarization) ** 2) < 0.4:
            continue
        A = born_amplitude(lumpy_medium, wave, inc.alpha, beta, inc.polarization, grid)
        ref = born_f(lumpy_medium, wave, inc.alpha, beta, grid)
        worst = max(worst, abs(project_f(A, beta, inc.polarization) - ref) / abs(ref))
        count += 1
    record(6, worst <= 1e-12, f"project_f(born_amplitude) vs born_f over 50 triples: max rel {worst:.1e} (<= 1e-12)")


def test_c07_inversion_oracle(rng, lumpy_medium):
    wave = WaveParams.from_k(3.0)
    quad = build_sphere_quadrature(2, 4)
    data = add_noise(synthesize_dataset(lumpy_medium, wave, quad, quad, build_volume_grid(1.0, 8)), 1e-3, 3)
    # full 3 x 3 x 3 lattice of cells
    n, R = 3, 1.0
    h = 2 * R / n
    idx = np.stack(np.meshgrid(*(np.arange(n),) * 3, indexing="ij"), -1).reshape(-1, 3)
    grid = VolumeGrid(-R + (idx + 0.5) * h, idx, h, R, n)
    cfg = InversionConfig(R=1.0, N=6)
    fast = reconstruct(data, grid, cfg).p_N
    slow = oracle_reconstruct(data, grid.centers, cfg)
    rel = np.linalg.norm(fast - slow) / np.linalg.norm(slow)
    record(7, len(grid) == 27 and rel <= 1e-10,
           f"reconstruct vs oracle, 8x8 nodes x {len(grid)} cells: rel {rel:.1e} (<= 1e-10)")


def test_c08_kernel_internals():
    R, k = 1.3, 3.0
    d0 = max(abs(delta_N(0.0, N, R, k) / (N / (4 * math.pi * R * R)) ** 1.5 - 1) for N in range(1, 13))
    h0 = max(abs(h_N(0.0, N, R, k)) for N in range(1, 13))
    # a_N(z) by direct 3D integration in a tilted product rule, |z| fixed, two directions
    quad = build_sphere_quadrature(48, 96)
    t, w = np.polynomial.legendre.leggauss(160)
    r, wr = R * (t + 1), R * w
    c, s = math.cos(0.9), math.sin(0.9)
    rot = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]]) @ np.array([[1, 0, 0], [0, c, -s], [0, s, c]])
    worst_a = 0.0
    for zn in (0.7, 2.5, 6.0):
        for zdir in ([0, 0, 1.0], [0.48, 0.6, 0.64]):
            z = zn * np.asarray(zdir)
            nodes = quad.nodes @ rot.T
            ang = np.exp(-1j * np.multiply.outer(r, nodes @ z)) @ quad.weights
            val = np.sum(wr * r**2 * delta_N(r, 5, R, k) * ang)
            ref = a_N(zn, 5, R, k)
            worst_a = max(worst_a, abs(val - ref) / a_N(0.0, 5, R, k))
    a = (3 * 0.1**3 / (4 * math.pi)) ** (1 / 3)
    sc = abs(self_cell_integral(0.1, 1e-8) - a * a / 2)
    ok = d0 <= 1e-12 and h0 == 0.0 and worst_a <= 1e-10 and sc <= 1e-10
    record(8, ok, f"delta_N(0) rel {d0:.1e}; h_N(0) = {h0}; a_N 3D rotated rel {worst_a:.1e}; "
                  f"self-cell k->0 gap {sc:.1e}")


@pytest.fixture(scope="module")
def standard():
    wave = WaveParams.from_k(3.0)
    medium = MediumSpec.single_bump(0.1, radius=1.0)
    quad = build_sphere_quadrature(16, 32)
    data = synthesize_dataset(medium, wave, quad, quad, build_volume_grid(1.0, 16))
    grid = build_volume_grid(1.0, 16)
    return wave, medium, data, grid


def _errors(sweep, grid, medium, wave):
    return {N: error_metric(ReconstructionResult(grid, p, N), medium, wave) for N, p in sweep.items()}


def test_c09_reconstruction_trend(standard):
    wave, medium, data, grid = standard
    errs = _errors(reconstruct_sweep(data, grid, InversionConfig(R=1.0, N_max=8)), grid, medium, wave)
    best = min(errs, key=errs.get)
    ok = errs[best] <= 0.5 and errs[best] < errs[1]
    record(9, ok, f"trend: error N=1 {errs[1]:.3f}, best N={best} {errs[best]:.3f} "
                  f"(needs <= 0.5 and < error at N=1)")


def test_c10_noise_stability(standard):
    wave, medium, data, grid = standard
    cfg = InversionConfig(R=1.0, N_max=12)
    clean = _errors(reconstruct_sweep(data, grid, cfg), grid, medium, wave)
    best_clean = min(clean.values())
    f_norm = data.norm()
    errs, Ns = [], []
    for rel in (1e-2, 1e-3, 1e-4):
        res = reconstruct(add_noise(data, rel * f_norm, seed=2024), grid, cfg)
        Ns.append(res.chosen_N)
        errs.append(error_metric(res, medium, wave))
    monotone = all(b <= 1.05 * a for a, b in zip(errs, errs[1:]))
    ok = monotone and errs[-1] <= 2 * best_clean
    record(10, ok, "noisy errors at delta/|f| = 1e-2, 1e-3, 1e-4: "
                   + ", ".join(f"{e:.4f} (N={n})" for e, n in zip(errs, Ns))
                   + f"; noiseless best {best_clean:.4f}")


@pytest.mark.slow
def test_c11_full_physics_pipeline():
    wave = WaveParams.from_k(3.0)
    medium = MediumSpec.single_bump(0.05, radius=1.0)
    quad = build_sphere_quadrature(12, 24)
    fwd = build_volume_grid(1.0, 16)
    grid = build_volume_grid(1.0, 16)
    cfg = InversionConfig(R=1.0, N=8)
    full = build_dataset(medium, wave, quad, fwd, solver_config=SolverConfig(method="iterative"))
    born = synthesize_dataset(medium, wave, quad, quad, fwd)
    e_full = error_metric(reconstruct(full, grid, cfg), medium, wave)
    e_born = error_metric(reconstruct(born, grid, cfg), medium, wave)
    record(11, e_full <= e_born + 0.15,
           f"full-solver data error {e_full:.4f} vs Born-exact {e_born:.4f} (+0.15 allowed)")


def _numeric_leaves(obj, path=""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            if k == "timings":
                continue
            yield from _numeric_leaves(v, f"{path}.{k}")
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from _numeric_leaves(v, f"{path}[{i}]")
    elif isinstance(obj, (int, float)) and not isinstance(obj, bool):
        yield path, obj


def test_c12_determinism(tmp_path):
    import pathlib

    config = pathlib.Path(__file__).resolve().parents[1] / "configs" / "standard_bump.yaml"
    runs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["pipeline", "--config", str(config), "--output", str(out), "--quiet"]) == 0
        runs.append(dict(_numeric_leaves(json.loads((out / "manifest.json").read_text()))))
    a, b = runs
    worst = max(abs(a[k] - b[k]) / max(abs(a[k]), 1e-300) if a[k] else abs(b[k]) for k in a)
    ok = a.keys() == b.keys() and worst <= 1e-12
    record(12, ok, f"two pipeline runs: {len(a)} numeric manifest fields, max rel diff {worst:.1e} (<= 1e-12)")
