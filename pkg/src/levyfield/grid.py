"""Sampling lattices and gridded field values, with CSV/JSON artifact IO.

Grid points are enumerated in row-major order over the axes (the first axis
varies slowest), matching numpy's 'ij' meshgrid indexing; FieldSample.values
is the flat vector in that order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError

COMPONENT_TAGS = ("gaussian", "jump", "drift", "combined")


@dataclass(frozen=True)
class GridSpec:
    """Product grid: per-axis (min, max, count) with count >= 2 and min < max."""

    mins: tuple[float, ...]
    maxs: tuple[float, ...]
    counts: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "mins", tuple(float(v) for v in self.mins))
        object.__setattr__(self, "maxs", tuple(float(v) for v in self.maxs))
        object.__setattr__(self, "counts", tuple(int(v) for v in self.counts))
        if not (len(self.mins) == len(self.maxs) == len(self.counts)):
            raise ConfigError("grid axes must agree in length")
        if self.dim not in (1, 2, 3):
            raise ConfigError(f"unsupported grid dimension {len(self.mins)}")
        for lo, hi, n in zip(self.mins, self.maxs, self.counts):
            if not lo < hi:
                raise ConfigError("each grid axis needs min < max")
            if n < 2:
                raise ConfigError("each grid axis needs at least 2 points")

    @property
    def dim(self) -> int:
        return len(self.mins)

    @property
    def n_points(self) -> int:
        return int(np.prod(self.counts))

    @property
    def spacings(self) -> tuple[float, ...]:
        return tuple((hi - lo) / (n - 1) for lo, hi, n in zip(self.mins, self.maxs, self.counts))

    def axis(self, i: int) -> np.ndarray:
        return np.linspace(self.mins[i], self.maxs[i], self.counts[i])

    def axes(self) -> list[np.ndarray]:
        return [self.axis(i) for i in range(self.dim)]

    def points(self) -> np.ndarray:
        """All grid points as an (n_points, dim) array in flat enumeration order."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.column_stack([m.ravel() for m in mesh])

    def max_norm(self) -> float:
        """Largest Euclidean norm over the grid (attained at a corner)."""
        corners = [max(abs(lo), abs(hi)) for lo, hi in zip(self.mins, self.maxs)]
        return float(np.linalg.norm(corners))

    def origin_index(self, tol: float = 1e-12) -> int | None:
        """Flat index of the origin if it is a grid point, else None."""
        idx = []
        for i in range(self.dim):
            ax = self.axis(i)
            j = int(np.argmin(np.abs(ax)))
            if abs(ax[j]) > tol:
                return None
            idx.append(j)
        flat = 0
        for j, n in zip(idx, self.counts):
            flat = flat * n + j
        return flat

    def to_dict(self) -> dict:
        return {"min": list(self.mins), "max": list(self.maxs), "count": list(self.counts)}

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        return cls(tuple(d["min"]), tuple(d["max"]), tuple(d["count"]))


class FieldSample:
    """Field values on a grid, tagged with provenance (component, seed, triple hash)."""

    __slots__ = ("grid", "values", "component_tag", "seed", "triple_fingerprint")

    def __init__(self, grid: GridSpec, values, component_tag: str, seed: int,
                 triple_fingerprint: str):
        if component_tag not in COMPONENT_TAGS:
            raise ConfigError(f"unknown component tag {component_tag!r}")
        values = np.asarray(values, dtype=float).reshape(-1)
        if values.size != grid.n_points:
            raise ConfigError("value vector does not match the grid size")
        values.flags.writeable = False
        self.grid = grid
        self.values = values
        self.component_tag = component_tag
        self.seed = int(seed)
        self.triple_fingerprint = str(triple_fingerprint)

    def reshaped(self) -> np.ndarray:
        return self.values.reshape(self.grid.counts)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_field_csv(sample: FieldSample, csv_path, sidecar_path=None) -> None:
    """CSV with columns t_1..t_d, value plus a JSON sidecar with the metadata."""
    csv_path = Path(csv_path)
    pts = sample.grid.points()
    with open(csv_path, "w", newline="\n") as fh:
        cols = [f"t_{i + 1}" for i in range(sample.grid.dim)] + ["value"]
        fh.write(",".join(cols) + "\n")
        for row, v in zip(pts, sample.values):
            fh.write(",".join(_fmt(c) for c in row) + "," + _fmt(v) + "\n")
    if sidecar_path is None:
        sidecar_path = csv_path.with_suffix(".json")
    meta = {
        "component_tag": sample.component_tag,
        "seed": sample.seed,
        "triple_fingerprint": sample.triple_fingerprint,
        "grid": sample.grid.to_dict(),
    }
    with open(sidecar_path, "w", newline="\n") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_field_csv(csv_path, sidecar_path=None) -> FieldSample:
    csv_path = Path(csv_path)
    if sidecar_path is None:
        sidecar_path = csv_path.with_suffix(".json")
    with open(sidecar_path) as fh:
        meta = json.load(fh)
    grid = GridSpec.from_dict(meta["grid"])
    data = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[0] != grid.n_points:
        raise ConfigError("field CSV does not match its sidecar grid")
    return FieldSample(grid, data[:, -1], meta["component_tag"], meta["seed"],
                       meta["triple_fingerprint"])
