"""
Plain-text file formats: datasets, scalar volumes, vector fields, run
configuration and manifests.

CSV files start with one ``#`` preamble line of ``key=value`` pairs followed
by a header row.  Floats are written with 17 significant digits so that every
file reads back bit-exactly.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
import yaml

from .born import ScatteringDataSet
from .geometry import SphereQuadrature, VolumeGrid
from .medium import WaveParams

__all__ = [
    "DATASET_COLUMNS",
    "VOLUME_COLUMNS",
    "FIELD_COLUMNS",
    "write_dataset",
    "read_dataset",
    "write_volume",
    "read_volume",
    "write_field",
    "read_field",
    "load_config",
    "write_manifest",
]

DATASET_COLUMNS = [
    "alpha_index", "beta_index",
    "alpha_x", "alpha_y", "alpha_z",
    "beta_x", "beta_y", "beta_z",
    "weight_alpha", "weight_beta",
    "f_re", "f_im",
]
VOLUME_COLUMNS = ["x", "y", "z", "re", "im"]
FIELD_COLUMNS = ["x", "y", "z", "ex_re", "ex_im", "ey_re", "ey_im", "ez_re", "ez_im"]


def _fmt(v) -> str:
    return format(float(v), ".17g")


def _preamble(**kw) -> str:
    return "# " + " ".join(f"{k}={v}" for k, v in kw.items()) + "\n"


def _parse_preamble(line: str) -> dict:
    if not line.startswith("#"):
        raise ValueError("missing '#' preamble line")
    out = {}
    for tok in line[1:].split():
        key, _, val = tok.partition("=")
        out[key] = val
    return out


def _read_table(path):
    path = Path(path)
    with path.open(newline="") as fh:
        meta = _parse_preamble(fh.readline())
        header = fh.readline().strip().split(",")
        rows = np.loadtxt(fh, delimiter=",", ndmin=2)
    return meta, header, rows


def write_dataset(path, data: ScatteringDataSet) -> None:
    path = Path(path)
    A, B = data.alpha_quadrature, data.beta_quadrature
    w = data.wave
    pre = _preamble(
        k=_fmt(w.k), delta=_fmt(data.noise_level), provenance=data.provenance,
        omega=_fmt(w.omega), eps0=_fmt(w.eps0), mu0=_fmt(w.mu0),
        seed="none" if data.seed is None else data.seed,
        domain_radius="none" if data.domain_radius is None else _fmt(data.domain_radius),
        alpha_shape=f"{A.n_polar}x{A.n_azimuth}", beta_shape=f"{B.n_polar}x{B.n_azimuth}",
    )
    with path.open("w", newline="") as fh:
        fh.write(pre)
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(DATASET_COLUMNS)
        for j, (a, wa) in enumerate(zip(A.nodes, A.weights)):
            for i, (b, wb) in enumerate(zip(B.nodes, B.weights)):
                fv = data.f[i, j]
                writer.writerow([j, i, *map(_fmt, a), *map(_fmt, b), _fmt(wa), _fmt(wb),
                                 _fmt(fv.real), _fmt(fv.imag)])


def _quad_from_rows(idx, nodes, weights, shape: str) -> SphereQuadrature:
    n = int(idx.max()) + 1
    out_nodes = np.zeros((n, 3))
    out_w = np.zeros(n)
    out_nodes[idx] = nodes
    out_w[idx] = weights
    n_polar, n_azimuth = (int(s) for s in shape.split("x"))
    return SphereQuadrature(out_nodes, out_w, n_polar, n_azimuth)


def read_dataset(path) -> ScatteringDataSet:
    meta, header, rows = _read_table(path)
    if header != DATASET_COLUMNS:
        raise ValueError(f"unexpected dataset header {header}")
    ja = rows[:, 0].astype(int)
    ib = rows[:, 1].astype(int)
    A = _quad_from_rows(ja, rows[:, 2:5], rows[:, 8], meta["alpha_shape"])
    B = _quad_from_rows(ib, rows[:, 5:8], rows[:, 9], meta["beta_shape"])
    f = np.zeros((len(B), len(A)), dtype=complex)
    f[ib, ja] = rows[:, 10] + 1j * rows[:, 11]
    wave = WaveParams(float(meta["k"]), float(meta["omega"]),
                      float(meta["eps0"]), float(meta["mu0"]))
    seed = None if meta.get("seed", "none") == "none" else int(meta["seed"])
    dr = meta.get("domain_radius", "none")
    return ScatteringDataSet(
        A, B, f, wave, noise_level=float(meta["delta"]), provenance=meta["provenance"],
        seed=seed, domain_radius=None if dr == "none" else float(dr),
    )


def _grid_preamble(grid: VolumeGrid, quantity: str) -> str:
    return _preamble(quantity=quantity, n_per_axis=grid.n_per_axis,
                     h=_fmt(grid.h), R=_fmt(grid.R), cells=len(grid))


def _grid_from(meta, xyz) -> VolumeGrid:
    R = float(meta["R"])
    h = float(meta["h"])
    index = np.rint((xyz + R) / h - 0.5).astype(int)
    return VolumeGrid(np.ascontiguousarray(xyz), index, h, R, int(meta["n_per_axis"]))


def write_volume(path, grid: VolumeGrid, values, quantity: str = "p") -> None:
    values = np.asarray(values, dtype=complex)
    with Path(path).open("w", newline="") as fh:
        fh.write(_grid_preamble(grid, quantity))
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(VOLUME_COLUMNS)
        for x, v in zip(grid.centers, values):
            writer.writerow([*map(_fmt, x), _fmt(v.real), _fmt(v.imag)])


def read_volume(path):
    """Return ``(grid, values, quantity)``."""
    meta, header, rows = _read_table(path)
    if header != VOLUME_COLUMNS:
        raise ValueError(f"unexpected volume header {header}")
    return _grid_from(meta, rows[:, :3]), rows[:, 3] + 1j * rows[:, 4], meta.get("quantity")


def write_field(path, grid: VolumeGrid, E) -> None:
    E = np.asarray(E, dtype=complex)
    with Path(path).open("w", newline="") as fh:
        fh.write(_grid_preamble(grid, "E"))
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FIELD_COLUMNS)
        for x, e in zip(grid.centers, E):
            cols = []
            for c in e:
                cols += [_fmt(c.real), _fmt(c.imag)]
            writer.writerow([*map(_fmt, x), *cols])


def read_field(path):
    """Return ``(grid, E)`` with ``E`` of shape ``(n, 3)``."""
    meta, header, rows = _read_table(path)
    if header != FIELD_COLUMNS:
        raise ValueError(f"unexpected field header {header}")
    E = rows[:, 3::2] + 1j * rows[:, 4::2]
    return _grid_from(meta, rows[:, :3]), E


def load_config(path) -> dict:
    with Path(path).open() as fh:
        cfg = yaml.safe_load(fh)
    if not isinstance(cfg, dict):
        raise ValueError("config must be a mapping")
    return cfg


def write_manifest(path, manifest: dict) -> None:
    with Path(path).open("w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
