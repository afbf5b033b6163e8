"""
Batch driver: ``eminverse {synth,forward,invert,pipeline,validate}``.

Exit codes: 0 success, 2 configuration error, 3 solver failure, 4 I/O failure.
Set ``EMINVERSE_THREADS`` to cap the BLAS/FFT thread count.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from contextlib import ExitStack
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from . import io
from .amplitude import build_dataset
from .born import add_noise, synthesize_dataset
from .errors import ConfigError, EMInverseError, ZeroTruth
from .forward import ForwardSolver, IncidentWave, SolverConfig, divergence_diagnostic
from .geometry import build_sphere_quadrature, build_volume_grid, orthonormal_pair
from .inversion import InversionConfig, error_metric, reconstruct, recover_eps
from .medium import Bump, MediumSpec, WaveParams, validate_medium

log = logging.getLogger("eminverse")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4
THREADS_ENV = "EMINVERSE_THREADS"


@dataclass
class RunConfig:
    wave: WaveParams
    medium: MediumSpec
    forward_n: int | None
    reconstruction_n: int
    data_n: int
    alpha_shape: tuple
    beta_shape: tuple
    mode: str = "born-exact"
    noise_relative: float = 0.0
    noise_absolute: float = 0.0
    seed: int = 0
    inversion: InversionConfig = None
    solver: SolverConfig = field(default_factory=SolverConfig)
    output: Path = Path("out")
    data_path: Path | None = None
    incident_alpha: tuple = (0.0, 0.0, 1.0)
    incident_polarization: tuple | None = None
    raw: dict = field(default_factory=dict)


def _get(d: dict, path: str, default=KeyError):
    cur = d
    for part in path.split("."):
        if not isinstance(cur, dict) or part not in cur:
            if default is KeyError:
                raise ConfigError(f"{path}: missing required field")
            return default
        cur = cur[part]
    return cur


def _complex(v, name):
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, dict):
        return complex(float(v.get("re", 0.0)), float(v.get("im", 0.0)))
    try:
        return complex(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: expected a number or [re, im]") from None


def _shape(v, name):
    try:
        a, b = (int(x) for x in v)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: expected [n_polar, n_azimuth]") from None
    if a < 1 or b < 1:
        raise ConfigError(f"{name}: sizes must be >= 1")
    return a, b


def parse_run_config(raw: dict, *, output=None, seed=None, N=None) -> RunConfig:
    """Validate a raw config mapping; errors name the offending field."""
    try:
        k = float(_get(raw, "wave.k"))
        eps0 = float(_get(raw, "wave.eps0", 1.0))
        mu0 = float(_get(raw, "wave.mu0", 1.0))
        if k <= 0:
            raise ConfigError("wave.k: must be positive")
        if eps0 <= 0 or mu0 <= 0:
            raise ConfigError("wave.eps0/wave.mu0: must be positive")
        wave = WaveParams.from_k(k, eps0, mu0)

        R_D = float(_get(raw, "medium.domain_radius"))
        if R_D <= 0:
            raise ConfigError("medium.domain_radius: must be positive")
        bumps = []
        for i, b in enumerate(_get(raw, "medium.bumps", []) or []):
            name = f"medium.bumps[{i}]"
            rho = float(_get(b, "radius"))
            if rho <= 0:
                raise ConfigError(f"{name}.radius: must be positive (got {rho})")
            power = int(b.get("power", 3))
            if power < 3:
                raise ConfigError(f"{name}.power: must be >= 3")
            center = tuple(float(c) for c in b.get("center", (0.0, 0.0, 0.0)))
            if len(center) != 3:
                raise ConfigError(f"{name}.center: expected 3 components")
            amp = _complex(_get(b, "amplitude"), f"{name}.amplitude")
            if amp.imag < 0:
                raise ConfigError(f"{name}.amplitude: imaginary part must be >= 0")
            if np.linalg.norm(center) + rho > R_D * (1 + 1e-12):
                raise ConfigError(f"{name}.radius: bump leaves medium.domain_radius")
            bumps.append(Bump(center, rho, amp, power))
        medium = MediumSpec(tuple(bumps), R_D)

        mode = _get(raw, "data.mode", "born-exact")
        if mode not in ("born-exact", "full-solver"):
            raise ConfigError("data.mode: must be 'born-exact' or 'full-solver'")
        forward_n = _get(raw, "grids.forward_n", None)
        if forward_n is not None:
            forward_n = int(forward_n)
            if forward_n < 1:
                raise ConfigError("grids.forward_n: must be >= 1")
        if mode == "full-solver" and forward_n is None:
            raise ConfigError("grids.forward_n: required for data.mode full-solver")
        rec_n = int(_get(raw, "grids.reconstruction_n"))
        if rec_n < 1:
            raise ConfigError("grids.reconstruction_n: must be >= 1")
        data_n = int(_get(raw, "grids.data_n", forward_n or rec_n))
        if data_n < 1:
            raise ConfigError("grids.data_n: must be >= 1")

        a_shape = _shape(_get(raw, "quadrature.alpha"), "quadrature.alpha")
        b_shape = _shape(_get(raw, "quadrature.beta", a_shape), "quadrature.beta")

        noise = _get(raw, "data.noise", {}) or {}
        rel = float(noise.get("relative", 0.0))
        ab = float(noise.get("absolute", 0.0))
        if rel < 0 or ab < 0 or (rel > 0 and ab > 0):
            raise ConfigError("data.noise: give one non-negative 'relative' or 'absolute'")
        run_seed = int(seed if seed is not None else _get(raw, "data.seed", 0))

        inv = _get(raw, "inversion", {}) or {}
        n_val = N if N is not None else inv.get("N", "auto")
        if n_val != "auto":
            n_val = int(n_val)
        if n_val == "auto" and rel == 0 and ab == 0:
            raise ConfigError("inversion.N: 'auto' needs data.noise > 0")
        try:
            inversion = InversionConfig(
                R=float(inv.get("R", R_D)), N=n_val,
                radial_quadrature_points=int(inv.get("radial_points", 128)),
                N_max=int(inv.get("N_max", 12)),
                normalization=inv.get("normalization", "unit"),
            )
        except ValueError as exc:
            raise ConfigError(f"inversion: {exc}") from None
        if inversion.R < R_D:
            raise ConfigError("inversion.R: must be >= medium.domain_radius")

        sol = _get(raw, "solver", {}) or {}
        try:
            solver = SolverConfig(**sol)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"solver: {exc}") from None

        inc = _get(raw, "forward", {}) or {}
        out = Path(output if output is not None else _get(raw, "output", "out"))
        data_path = _get(raw, "data.path", None)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config: {exc}") from None

    return RunConfig(
        wave=wave, medium=medium, forward_n=forward_n, reconstruction_n=rec_n,
        data_n=data_n, alpha_shape=a_shape, beta_shape=b_shape, mode=mode,
        noise_relative=rel, noise_absolute=ab, seed=run_seed, inversion=inversion,
        solver=solver, output=out, data_path=Path(data_path) if data_path else None,
        incident_alpha=tuple(inc.get("alpha", (0.0, 0.0, 1.0))),
        incident_polarization=inc.get("polarization"), raw=raw,
    )


class StageError(Exception):
    def __init__(self, stage, code, exc):
        super().__init__(f"{stage}: {exc}")
        self.stage, self.code = stage, code


class _Stage:
    """Times a pipeline stage and maps its failures to exit codes."""

    def __init__(self, name, timings):
        self.name, self.timings = name, timings

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, et, exc, tb):
        self.timings[self.name] = time.perf_counter() - self.t0
        if exc is None or isinstance(exc, StageError):
            return False
        if isinstance(exc, OSError):
            raise StageError(self.name, EXIT_IO, exc) from exc
        if isinstance(exc, ConfigError):
            raise StageError(self.name, EXIT_CONFIG, exc) from exc
        if isinstance(exc, (EMInverseError, ValueError, np.linalg.LinAlgError, MemoryError)):
            raise StageError(self.name, EXIT_SOLVER, exc) from exc
        return False


def make_dataset(cfg: RunConfig, timings: dict):
    aq = build_sphere_quadrature(*cfg.alpha_shape)
    bq = build_sphere_quadrature(*cfg.beta_shape)
    with _Stage("synthesize", timings):
        if cfg.mode == "full-solver":
            grid = build_volume_grid(cfg.medium.domain_radius, cfg.forward_n)
            data = build_dataset(cfg.medium, cfg.wave, aq, grid, bq, cfg.solver)
        else:
            grid = build_volume_grid(cfg.medium.domain_radius, cfg.data_n)
            validate_medium(cfg.medium, cfg.wave, grid)
            data = synthesize_dataset(cfg.medium, cfg.wave, aq, bq, grid)
    clean_norm = data.norm()
    delta = cfg.noise_absolute or cfg.noise_relative * clean_norm
    if delta > 0:
        with _Stage("corrupt", timings):
            data = add_noise(data, delta, cfg.seed)
    return data, clean_norm


def run_invert(cfg: RunConfig, data, timings: dict, manifest: dict):
    grid = build_volume_grid(cfg.inversion.R, cfg.reconstruction_n)
    with _Stage("invert", timings):
        result = reconstruct(data, grid, cfg.inversion)
        eps = recover_eps(result, cfg.wave)
    with _Stage("score", timings):
        try:
            err = error_metric(result, cfg.medium, cfg.wave, grid)
            result.error_vs_truth = err
            manifest["error_metric"] = {"relative_l2": err}
        except ZeroTruth:
            manifest["error_metric"] = {"relative_l2": None, "note": "ZeroTruth"}
    manifest["chosen_N"] = int(result.chosen_N)
    manifest["residual_history"] = [float(v) for v in result.residual_history]
    manifest["reconstruction_cells"] = len(grid)
    with _Stage("write", timings):
        io.write_volume(cfg.output / "reconstruction.csv", grid, result.p_N, "p_N")
        io.write_volume(cfg.output / "eps.csv", grid, eps, "eps")
    return result


def _base_manifest(cfg: RunConfig, command: str) -> dict:
    return {"command": command, "config": cfg.raw, "seed": cfg.seed,
            "wave": {"k": cfg.wave.k, "omega": cfg.wave.omega,
                     "eps0": cfg.wave.eps0, "mu0": cfg.wave.mu0}}


def _data_manifest(data, clean_norm):
    return {"provenance": data.provenance, "noise_level": data.noise_level,
            "clean_norm": clean_norm, "n_alpha": len(data.alpha_quadrature),
            "n_beta": len(data.beta_quadrature)}


def cmd_synth(cfg, manifest, timings):
    data, clean = make_dataset(cfg, timings)
    manifest["data"] = _data_manifest(data, clean)
    with _Stage("write", timings):
        io.write_dataset(cfg.output / "dataset.csv", data)


def cmd_pipeline(cfg, manifest, timings):
    data, clean = make_dataset(cfg, timings)
    manifest["data"] = _data_manifest(data, clean)
    with _Stage("write", timings):
        io.write_dataset(cfg.output / "dataset.csv", data)
    run_invert(cfg, data, timings, manifest)


def cmd_invert(cfg, manifest, timings):
    path = cfg.data_path or cfg.output / "dataset.csv"
    with _Stage("read", timings):
        data = io.read_dataset(path)
    if cfg.inversion.N == "auto" and data.provenance != "noisy":
        raise StageError("invert", EXIT_CONFIG,
                         ConfigError("inversion.N: 'auto' needs noisy data"))
    manifest["data"] = _data_manifest(data, None)
    run_invert(cfg, data, timings, manifest)


def cmd_forward(cfg, manifest, timings):
    if cfg.forward_n is None:
        raise StageError("config", EXIT_CONFIG, ConfigError("grids.forward_n: required"))
    grid = build_volume_grid(cfg.medium.domain_radius, cfg.forward_n)
    with _Stage("forward", timings):
        alpha = np.asarray(cfg.incident_alpha, float)
        pol = (cfg.incident_polarization if cfg.incident_polarization is not None
               else orthonormal_pair(alpha)[0])
        incident = IncidentWave.normalized(alpha, pol, cfg.wave)
        sol = ForwardSolver(grid, cfg.medium, cfg.wave, cfg.solver).solve(incident)
        diag = divergence_diagnostic(sol) if grid.n_per_axis >= 3 else None
    manifest["forward"] = {"cells": len(grid), "method": sol.method,
                           "iterations": sol.iterations,
                           "solver_residual": sol.solver_residual,
                           "divergence_diagnostic": diag}
    with _Stage("write", timings):
        io.write_field(cfg.output / "field.csv", grid, sol.E)


def cmd_validate(cfg, manifest, timings):
    report = {}
    with _Stage("validate", timings):
        for name, n in (("data", cfg.data_n), ("reconstruction", cfg.reconstruction_n),
                        ("forward", cfg.forward_n)):
            if n is None:
                continue
            grid = build_volume_grid(cfg.medium.domain_radius, n)
            if len(grid) == 0:
                raise ConfigError(f"grids.{name}_n: grid has no cells")
            rep = validate_medium(cfg.medium, cfg.wave, grid)
            report[name] = {"cells": len(grid), "min_abs_K2": rep.min_abs_K2,
                            "min_im_p": rep.min_im_p, "max_rel_p": rep.max_rel_p}
        for name, shape in (("alpha", cfg.alpha_shape), ("beta", cfg.beta_shape)):
            q = build_sphere_quadrature(*shape)
            err = abs(q.weights.sum() - 4 * np.pi)
            if err > 1e-12:
                raise EMInverseError(f"quadrature.{name}: weights sum off by {err:g}")
            report[f"quadrature_{name}"] = {"nodes": len(q), "weight_sum_error": err}
    manifest["validation"] = report


COMMANDS = {
    "synth": cmd_synth,
    "forward": cmd_forward,
    "invert": cmd_invert,
    "pipeline": cmd_pipeline,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eminverse", description=__doc__.splitlines()[1])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, type=Path)
        sp.add_argument("--output", type=Path, default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--n", dest="N", type=int, default=None, help="override N")
        sp.add_argument("--quiet", action="store_true")
    return parser


def _thread_limits(stack: ExitStack):
    n = os.environ.get(THREADS_ENV)
    if not n:
        return
    n = int(n)
    stack.enter_context(sfft.set_workers(n))
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        return
    stack.enter_context(threadpool_limits(limits=n))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")

    try:
        raw = io.load_config(args.config)
    except OSError as exc:
        print(f"eminverse: config: cannot read {args.config}: {exc}", file=sys.stderr)
        return EXIT_IO
    except Exception as exc:  # yaml errors
        print(f"eminverse: config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = parse_run_config(raw, output=args.output, seed=args.seed, N=args.N)
    except ConfigError as exc:
        print(f"eminverse: config: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    manifest = _base_manifest(cfg, args.command)
    timings = {}
    try:
        cfg.output.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"eminverse: output: {exc}", file=sys.stderr)
        return EXIT_IO
    t0 = time.perf_counter()
    with ExitStack() as stack:
        _thread_limits(stack)
        try:
            COMMANDS[args.command](cfg, manifest, timings)
        except StageError as exc:
            print(f"eminverse: {exc}", file=sys.stderr)
            return exc.code
    timings["total"] = time.perf_counter() - t0
    manifest["timings"] = timings
    manifest["exit_status"] = EXIT_OK
    try:
        io.write_manifest(cfg.output / "manifest.json", manifest)
    except OSError as exc:
        print(f"eminverse: write: {exc}", file=sys.stderr)
        return EXIT_IO
    if not args.quiet:
        summary = {k: manifest[k] for k in ("chosen_N", "error_metric") if k in manifest}
        print(f"eminverse {args.command}: ok {summary}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
