"""Poisson hyperplane jump fields: atom sampling, grid evaluation, truncation
control and characteristic-function validation.

An atom (rho, s, x) is a jump of size x across the hyperplane {t : rho = <s, t>}.
Atoms come from a Poisson measure with intensity Lebesgue(rho) x nu, sampled
band by band with one independent rng substream per band, derived from the
master seed as SeedSequence([seed, 2, band]).  Within a band the draw order is
fixed (count, rho, directions, magnitudes, signs), so an atom set sampled with
a larger truncation depth extends a smaller one atom for atom.

Band j >= 1 is compensated: the evaluated field subtracts the linear map
(1/2) <b_j, t> where b_j is the two-sided first moment stored in
CompensatorTable; by the (s, x) -> (-s, -x) symmetry of the measure this halved
two-sided moment equals the positive-radial-half compensator integral that
centers the band.  Band 0 (jumps above one) is never compensated.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError
from .grid import FieldSample, GridSpec
from .measures import ATOMLIST, Direction, JumpMeasure, _band_of, band_mass

JUMP_STREAM_TAG = 2
CF_STREAM_TAG = 3
_ATOM_CHUNK = 1024  # fixed so evaluation order (hence bytes) is grid independent
_CF_REPLICA_CHUNK = 256


@dataclass(frozen=True)
class HyperplaneAtom:
    rho: float
    s: Direction
    x: float
    band: int

    def __post_init__(self):
        if self.rho <= 0.0:
            raise ConfigError("atom distance rho must be positive")
        if _band_of(np.array([abs(self.x)]))[0] != self.band:
            raise ConfigError(f"jump size {self.x} is not in band {self.band}")


class AtomSet:
    """Sampled hyperplane atoms grouped by magnitude band, rho < domain_radius.

    Bands are stored 0..j_trunc as (rho, dirs, x) arrays in a canonical order
    (sorted by rho, ties broken lexicographically), which makes every
    evaluation order independent of how the atoms were produced.
    """

    __slots__ = ("dim", "domain_radius", "j_trunc", "seed",
                 "jump_measure_fingerprint", "_bands")

    def __init__(self, dim: int, domain_radius: float, j_trunc: int, seed: int,
                 bands: dict, jump_measure_fingerprint: str = ""):
        if domain_radius <= 0.0:
            raise ConfigError("domain radius must be positive")
        self.dim = int(dim)
        self.domain_radius = float(domain_radius)
        self.j_trunc = int(j_trunc)
        self.seed = int(seed)
        self.jump_measure_fingerprint = str(jump_measure_fingerprint)
        canonical = {}
        for j in range(self.j_trunc + 1):
            rho, dirs, x = bands.get(j, (np.zeros(0), np.zeros((0, dim)), np.zeros(0)))
            rho = np.asarray(rho, dtype=float)
            dirs = np.asarray(dirs, dtype=float).reshape(rho.size, dim)
            x = np.asarray(x, dtype=float)
            if rho.size:
                if float(rho.max(initial=0.0)) >= self.domain_radius:
                    raise ConfigError("atom has rho beyond the domain radius")
                if float(rho.min()) <= 0.0:
                    raise ConfigError("atom distances rho must be positive")
                if np.any(_band_of(np.abs(x)) != j):
                    raise ConfigError(f"band {j} contains a jump size outside its range")
                order = np.lexsort((x,) + tuple(dirs[:, k] for k in range(dim - 1, -1, -1)) + (rho,))
                rho, dirs, x = rho[order], dirs[order], x[order]
            for arr in (rho, dirs, x):
                arr.flags.writeable = False
            canonical[j] = (rho, dirs, x)
        self._bands = canonical

    def band(self, j: int):
        return self._bands[j]

    def band_counts(self) -> dict[int, int]:
        return {j: rho.size for j, (rho, _, _) in self._bands.items()}

    @property
    def n_atoms(self) -> int:
        return sum(rho.size for rho, _, _ in self._bands.values())

    def truncated(self, j_trunc: int) -> "AtomSet":
        """The same atoms restricted to bands 0..j_trunc."""
        if j_trunc > self.j_trunc:
            raise ConfigError("cannot extend an atom set by truncating")
        bands = {j: self._bands[j] for j in range(j_trunc + 1)}
        return AtomSet(self.dim, self.domain_radius, j_trunc, self.seed, bands,
                       self.jump_measure_fingerprint)

    def iter_atoms(self):
        for j in range(self.j_trunc + 1):
            rho, dirs, x = self._bands[j]
            for i in range(rho.size):
                yield HyperplaneAtom(float(rho[i]), Direction(dirs[i]), float(x[i]), j)


def _band_rng(seed: int, band: int, tag: int = JUMP_STREAM_TAG):
    return np.random.default_rng(np.random.SeedSequence([int(seed), tag, int(band)]))


def _draw_directions(rng, directional, n: int) -> np.ndarray:
    """Directions from a spherical weighting: isotropic part, then atom part."""
    d = directional.dim
    out = np.empty((n, d))
    iso = directional.isotropic_mass
    total = directional.total_mass
    has_atoms = directional.atom_weights.size > 0
    if iso > 0.0 and has_atoms:
        iso_mask = rng.random(n) < iso / total
    elif iso > 0.0:
        iso_mask = np.ones(n, dtype=bool)
    else:
        iso_mask = np.zeros(n, dtype=bool)
    n_iso = int(iso_mask.sum())
    if n_iso:
        if d == 1:
            vals = np.where(rng.random(n_iso) < 0.5, 1.0, -1.0)[:, None]
        elif d == 2:
            theta = rng.uniform(0.0, 2.0 * math.pi, n_iso)
            vals = np.column_stack([np.cos(theta), np.sin(theta)])
        else:
            vals = rng.standard_normal((n_iso, 3))
            vals /= np.linalg.norm(vals, axis=1, keepdims=True)
        out[iso_mask] = vals
    n_atom = n - n_iso
    if n_atom:
        dirs, weights = directional.expanded()
        idx = rng.choice(dirs.shape[0], size=n_atom, p=weights / weights.sum())
        out[~iso_mask] = dirs[idx]
    return out


def _sample_band(rng, nu: JumpMeasure, j: int, n: int):
    """n (direction, jump size) pairs from the band-j restriction of nu."""
    if nu.coupling == ATOMLIST:
        sel = nu.atom_bands() == j
        w = nu.atom_weights[sel]
        idx = rng.choice(w.size, size=n, p=w / w.sum())
        return nu.atom_dirs[sel][idx], nu.atom_x[sel][idx]
    dirs = _draw_directions(rng, nu.directional, n)
    mags = nu.radial.sample_magnitudes(rng, j, n)
    signs = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    return dirs, mags * signs


def sample_atoms(nu: JumpMeasure, domain_radius: float, j_trunc: int, seed: int,
                 fingerprint: str = "") -> AtomSet:
    """Poisson hyperplane atoms with rho < domain_radius, bands 0..j_trunc.

    Per band the count is Poisson(domain_radius * nu_j), rho is uniform on
    (0, domain_radius), and (s, x) follows the normalized band restriction of
    the measure (atom choice for ATOMLIST, directional mixture plus exact
    inverse-CDF or tabulated magnitudes for PRODUCT families).
    """
    if domain_radius <= 0.0:
        raise ConfigError("domain radius must be positive")
    if j_trunc < 1:
        raise ConfigError("j_trunc must be at least 1")
    bands = {}
    for j in range(j_trunc + 1):
        lam = domain_radius * band_mass(nu, j)
        if not math.isfinite(lam):
            raise ConfigError(f"band {j} has infinite mass; the measure is not integrable")
        if lam == 0.0:
            continue
        rng = _band_rng(seed, j)
        n = int(rng.poisson(lam))
        if n == 0:
            continue
        rho = rng.uniform(0.0, domain_radius, n)
        dirs, x = _sample_band(rng, nu, j, n)
        bands[j] = (rho, dirs, x)
    return AtomSet(nu.dim, domain_radius, j_trunc, seed, bands, fingerprint)


class CompensatorTable:
    """Per-band linear compensators b_j = int_{|x| in I_j} x s nu(ds, dx), j >= 1.

    Stored two-sided; the field evaluation subtracts (1/2) <b_j, t>, the
    positive-half compensator, per the measure symmetry.
    """

    __slots__ = ("dim", "j_trunc", "vectors")

    def __init__(self, dim: int, j_trunc: int, vectors: np.ndarray):
        self.dim = int(dim)
        self.j_trunc = int(j_trunc)
        self.vectors = np.asarray(vectors, dtype=float).reshape(self.j_trunc, dim)
        self.vectors.flags.writeable = False

    def vector(self, j: int) -> np.ndarray:
        if not 1 <= j <= self.j_trunc:
            raise ConfigError(f"band {j} outside the table range 1..{self.j_trunc}")
        return self.vectors[j - 1]

    def truncated(self, j_trunc: int) -> "CompensatorTable":
        return CompensatorTable(self.dim, j_trunc, self.vectors[:j_trunc])


def compensator_table(nu: JumpMeasure, j_trunc: int) -> CompensatorTable:
    """Exact band compensator vectors.

    For PRODUCT coupling both marginal first moments vanish by symmetry, so
    every b_j is zero; ATOMLIST measures get exact sums over their atoms.
    """
    vectors = np.zeros((j_trunc, nu.dim))
    if nu.coupling == ATOMLIST and nu.atom_x.size:
        bands_idx = nu.atom_bands()
        contrib = (nu.atom_weights * nu.atom_x)[:, None] * nu.atom_dirs
        for j in range(1, j_trunc + 1):
            sel = bands_idx == j
            if sel.any():
                vectors[j - 1] = contrib[sel].sum(axis=0)
    return CompensatorTable(nu.dim, j_trunc, vectors)


def _indicator_sums_line(rho, dirs, x, ts: np.ndarray) -> np.ndarray:
    """sum of x over atoms with rho < s * t, for a vector of line positions."""
    out = np.zeros(ts.size)
    s = dirs[:, 0]
    for positive in (True, False):
        sel = s > 0 if positive else s < 0
        if not sel.any():
            continue
        thresh = rho[sel] / s[sel]
        order = np.argsort(thresh, kind="stable")
        thresh, xs = thresh[order], x[sel][order]
        if positive:
            prefix = np.concatenate([[0.0], np.cumsum(xs)])
            out += prefix[np.searchsorted(thresh, ts, side="left")]
        else:
            suffix = np.concatenate([np.cumsum(xs[::-1])[::-1], [0.0]])
            out += suffix[np.searchsorted(thresh, ts, side="right")]
    return out


def _indicator_sums_grid(rho, dirs, x, grid: GridSpec) -> np.ndarray:
    """Half-space indicator sums over a product grid, flat enumeration order.

    Per atom and per line of the last axis the indicator is a suffix or prefix
    of the line, so contributions are scattered as difference-array entries and
    cumulated once per band.  Chunking is by a fixed atom count so the bytes do
    not depend on the grid shape.
    """
    axes = grid.axes()
    col = axes[-1]
    y0, dy = float(col[0]), grid.spacings[-1]
    ncols = col.size
    if grid.dim == 2:
        row_pts = axes[0][:, None]
    else:
        row_pts = np.column_stack([m.ravel() for m in np.meshgrid(*axes[:-1], indexing="ij")])
    nrows = row_pts.shape[0]
    width = ncols + 1  # sentinel column absorbs out-of-range scatter
    diff = np.zeros(nrows * width)
    for start in range(0, rho.size, _ATOM_CHUNK):
        stop = min(start + _ATOM_CHUNK, rho.size)
        s_row = dirs[start:stop, :-1]
        s_last = dirs[start:stop, -1]
        xs = x[start:stop]
        cthr = rho[start:stop][None, :] - row_pts @ s_row.T  # (nrows, m)
        row_base = (np.arange(nrows) * width)[:, None]
        flat_idx = []
        flat_w = []
        nonzero = s_last != 0.0
        if nonzero.any():
            with np.errstate(over="ignore"):
                q = (cthr[:, nonzero] / s_last[nonzero][None, :] - y0) / dy
            pos = s_last[nonzero] > 0.0
            if pos.any():
                k0 = np.clip(np.floor(q[:, pos]) + 1.0, 0.0, ncols).astype(np.int64)
                flat_idx.append((row_base + k0).ravel())
                flat_w.append(np.broadcast_to(xs[nonzero][pos], k0.shape).ravel())
            neg = ~pos
            if neg.any():
                k1 = np.clip(np.ceil(q[:, neg]), 0.0, ncols).astype(np.int64)
                w_neg = np.broadcast_to(xs[nonzero][neg], k1.shape)
                flat_idx.append(np.broadcast_to(row_base, k1.shape).ravel())
                flat_w.append(w_neg.ravel())
                flat_idx.append((row_base + k1).ravel())
                flat_w.append(-w_neg.ravel())
        if (~nonzero).any():
            active = cthr[:, ~nonzero] < 0.0  # whole line on or off
            w_zero = np.broadcast_to(xs[~nonzero], active.shape) * active
            flat_idx.append(np.broadcast_to(row_base, active.shape).ravel())
            flat_w.append(w_zero.ravel())
        if flat_idx:
            diff += np.bincount(np.concatenate(flat_idx),
                                weights=np.concatenate(flat_w),
                                minlength=nrows * width)
    return np.cumsum(diff.reshape(nrows, width)[:, :ncols], axis=1).ravel()


def evaluate_jump_field(atoms: AtomSet, comp: CompensatorTable, grid: GridSpec,
                        fingerprint: str | None = None) -> FieldSample:
    """Evaluate the truncated jump field on the grid.

    value(t) = sum over bands of the indicator sums minus the band compensators
    (1/2) <b_j, t>; bands accumulate in increasing order, so extending the atom
    set by one band changes the output by exactly that band's contribution.
    The grid must sit inside the closed sampling ball: an atom with
    rho >= domain_radius could never fire anywhere on it because the indicator
    needs rho < <s, t> <= ||t||.
    """
    if grid.dim != atoms.dim:
        raise ConfigError("grid and atom set dimensions disagree")
    if comp.dim != atoms.dim:
        raise ConfigError("compensator table dimension mismatch")
    if comp.j_trunc < atoms.j_trunc:
        raise ConfigError("compensator table does not cover every band")
    if grid.max_norm() > atoms.domain_radius + 1e-12:
        raise ConfigError("grid escapes the sampling ball of the atom set")
    pts = grid.points()
    values = np.zeros(grid.n_points)
    for j in range(atoms.j_trunc + 1):
        # one contribution array per band, accumulated in band order: the
        # field for j_trunc + 1 is then bitwise the field for j_trunc plus the
        # last band's contribution
        rho, dirs, x = atoms.band(j)
        contrib = None
        if rho.size:
            if grid.dim == 1:
                contrib = _indicator_sums_line(rho, dirs, x, pts[:, 0])
            else:
                contrib = _indicator_sums_grid(rho, dirs, x, grid)
        if j >= 1:
            b = comp.vector(j)
            if b.any():
                linear = 0.5 * (pts @ b)
                contrib = -linear if contrib is None else contrib - linear
        if contrib is not None:
            values += contrib
    origin = grid.origin_index()
    if origin is not None:
        # exactly zero by construction: rho > 0 = <s, 0> never fires and the
        # compensator vanishes; overwrite the difference-encoding roundoff
        values[origin] = 0.0
    if fingerprint is None:
        fingerprint = atoms.jump_measure_fingerprint
    return FieldSample(grid, values, "jump", atoms.seed, fingerprint)


def evaluate_at_points(atoms: AtomSet, comp: CompensatorTable, pts: np.ndarray) -> np.ndarray:
    """Reference evaluation at arbitrary points by direct summation over atoms."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    values = np.zeros(pts.shape[0])
    for j in range(atoms.j_trunc + 1):
        rho, dirs, x = atoms.band(j)
        if rho.size:
            values += ((pts @ dirs.T > rho[None, :]) * x[None, :]).sum(axis=1)
        if j >= 1:
            b = comp.vector(j)
            if b.any():
                values -= 0.5 * (pts @ b)
    return values


def truncation_error_std(nu: JumpMeasure, domain_radius: float, j_trunc: int, t) -> float:
    """Standard deviation of the dropped bands at the point t.

    The variance of each compensated band at t is int max(<s, t>, 0) x^2 nu;
    the dropped tail sums this over bands above j_trunc through the family's
    continuation rule, bounded by ||t|| sum_{j > J} 2^(2 - 2j) nu_j.
    """
    t = np.asarray(t, dtype=float).reshape(-1)
    if np.linalg.norm(t) > domain_radius + 1e-12:
        raise ConfigError("the point lies outside the sampling ball")
    if nu.coupling == ATOMLIST:
        bands = nu.atom_bands()
        sel = bands > j_trunc
        if not sel.any():
            return 0.0
        pos = np.maximum(nu.atom_dirs[sel] @ t, 0.0)
        return math.sqrt(float((nu.atom_weights[sel] * pos * nu.atom_x[sel] ** 2).sum()))
    if nu.directional.total_mass == 0.0:
        return 0.0
    d_pos = nu.directional_pos_part(t)
    return math.sqrt(d_pos * nu.radial.tail_second_moment(j_trunc))


def campbell_variance(nu: JumpMeasure, t, j_list: Sequence[int]) -> float:
    """Variance of the sum of the listed compensated bands at t (band 0 excluded
    from compensation but included in the count sum if listed)."""
    t = np.asarray(t, dtype=float).reshape(-1)
    total = 0.0
    if nu.coupling == ATOMLIST:
        bands = nu.atom_bands()
        pos = np.maximum(nu.atom_dirs @ t, 0.0)
        for j in j_list:
            sel = bands == j
            total += float((nu.atom_weights[sel] * pos[sel] * nu.atom_x[sel] ** 2).sum())
        return total
    d_pos = nu.directional_pos_part(t)
    for j in j_list:
        total += d_pos * nu.radial.second_moment_band(j)
    return total


def truncation_gap(nu: JumpMeasure, domain_radius: float, grid: GridSpec, seed: int,
                   j_trunc: int, extra_bands: int = 4) -> float:
    """Empirical uniform truncation error proxy: max over the grid of
    |field at j_trunc + extra_bands - field at j_trunc| for nested atom sets."""
    deep = sample_atoms(nu, domain_radius, j_trunc + extra_bands, seed)
    comp = compensator_table(nu, j_trunc + extra_bands)
    full = evaluate_jump_field(deep, comp, grid)
    shallow = evaluate_jump_field(deep.truncated(j_trunc), comp.truncated(j_trunc), grid)
    return float(np.abs(full.values - shallow.values).max())


def analytic_cf(nu: JumpMeasure, t, thetas) -> np.ndarray:
    """Characteristic function of the full (untruncated) field value at t.

    exp of the integral of max(<s, t>, 0) (e^{i theta x} - 1 - i theta x 1_{|x|<=1})
    against nu; exact sums for atom lists, directional closed forms times the
    radial integral (quadrature for power-law families) for products.
    """
    t = np.asarray(t, dtype=float).reshape(-1)
    thetas = np.asarray(thetas, dtype=float).reshape(-1)
    out = np.empty(thetas.size, dtype=complex)
    if nu.coupling == ATOMLIST:
        if nu.atom_x.size == 0:
            return np.ones(thetas.size, dtype=complex)
        pos = np.maximum(nu.atom_dirs @ t, 0.0)
        comp = np.where(np.abs(nu.atom_x) <= 1.0, nu.atom_x, 0.0)
        for i, th in enumerate(thetas):
            terms = np.exp(1j * th * nu.atom_x) - 1.0 - 1j * th * comp
            out[i] = np.exp((nu.atom_weights * pos * terms).sum())
        return out
    if nu.directional.total_mass == 0.0:
        return np.ones(thetas.size, dtype=complex)
    d_pos = nu.directional_pos_part(t)
    for i, th in enumerate(thetas):
        out[i] = np.exp(d_pos * nu.radial.cf_term(th))
    return out


def _draw_projections(rng, nu: JumpMeasure, j: int, n: int, t: np.ndarray):
    """(<s, t>, x) pairs from the band-j restriction, without materializing s.

    For product measures <s, t> under the isotropic part is ||t|| cos(angle)
    in d=2 and ||t|| times a uniform sign or coordinate in d=1 / d=3.
    """
    if nu.coupling == ATOMLIST:
        sel = nu.atom_bands() == j
        w = nu.atom_weights[sel]
        idx = rng.choice(w.size, size=n, p=w / w.sum())
        return (nu.atom_dirs[sel] @ t)[idx], nu.atom_x[sel][idx]
    directional = nu.directional
    norm_t = float(np.linalg.norm(t))
    iso = directional.isotropic_mass
    has_atoms = directional.atom_weights.size > 0
    if iso > 0.0 and has_atoms:
        iso_mask = rng.random(n) < iso / directional.total_mass
    elif iso > 0.0:
        iso_mask = np.ones(n, dtype=bool)
    else:
        iso_mask = np.zeros(n, dtype=bool)
    proj = np.empty(n)
    n_iso = int(iso_mask.sum())
    if n_iso:
        d = directional.dim
        if d == 1:
            proj_iso = norm_t * np.where(rng.random(n_iso) < 0.5, 1.0, -1.0) * np.sign(t[0])
        elif d == 2:
            proj_iso = norm_t * np.cos(rng.uniform(0.0, 2.0 * math.pi, n_iso))
        else:
            proj_iso = norm_t * rng.uniform(-1.0, 1.0, n_iso)
        proj[iso_mask] = proj_iso
    if n - n_iso:
        dirs, weights = directional.expanded()
        idx = rng.choice(dirs.shape[0], size=n - n_iso, p=weights / weights.sum())
        proj[~iso_mask] = (dirs @ t)[idx]
    mags = nu.radial.sample_magnitudes(rng, j, n)
    signs = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    return proj, mags * signs


@dataclass
class CFReport:
    theta: np.ndarray
    analytic: np.ndarray
    empirical: np.ndarray
    stderr: float
    replicas: int
    j_trunc: int

    def max_abs_error(self) -> float:
        return float(np.abs(self.empirical - self.analytic).max())

    def fraction_within(self, k_stderr: float = 4.0) -> float:
        ok = np.abs(self.empirical - self.analytic) <= k_stderr * self.stderr
        return float(ok.mean())


def cf_validate(nu: JumpMeasure, t, theta_grid, replicas: int, seed: int,
                j_trunc: int = 12, domain_radius: float | None = None) -> CFReport:
    """Empirical versus analytic characteristic function of the field at t.

    Each replica draws fresh atoms (per-band substreams, replica draws consumed
    in fixed chunks) and evaluates the compensated field value at t; stderr is
    the conservative replicas^(-1/2) bound for the complex mean.
    """
    if replicas < 100:
        raise ConfigError("at least 100 replicas are needed")
    t = np.asarray(t, dtype=float).reshape(-1)
    thetas = np.asarray(theta_grid, dtype=float).reshape(-1)
    if domain_radius is None:
        domain_radius = float(np.linalg.norm(t))
    if float(np.linalg.norm(t)) > domain_radius + 1e-12:
        raise ConfigError("t lies outside the sampling ball")
    comp = compensator_table(nu, j_trunc)
    values = np.zeros(replicas)
    for j in range(j_trunc + 1):
        lam = domain_radius * band_mass(nu, j)
        if lam > 0.0:
            rng = _band_rng(seed, j, tag=CF_STREAM_TAG)
            for start in range(0, replicas, _CF_REPLICA_CHUNK):
                stop = min(start + _CF_REPLICA_CHUNK, replicas)
                counts = rng.poisson(lam, stop - start)
                total = int(counts.sum())
                if total == 0:
                    continue
                rho = rng.uniform(0.0, domain_radius, total)
                proj, x = _draw_projections(rng, nu, j, total, t)
                contrib = np.where(rho < proj, x, 0.0)
                owner = np.repeat(np.arange(stop - start), counts)
                values[start:stop] += np.bincount(owner, weights=contrib,
                                                  minlength=stop - start)
        if j >= 1:
            b = comp.vector(j)
            if b.any():
                values -= 0.5 * float(b @ t)
    phases = np.exp(1j * np.outer(thetas, values))
    empirical = phases.mean(axis=1)
    return CFReport(thetas, analytic_cf(nu, t, thetas), empirical,
                    1.0 / math.sqrt(replicas), replicas, j_trunc)


def write_atoms_csv(atoms: AtomSet, csv_path, sidecar_path=None) -> None:
    """CSV columns band, rho, s_1..s_d, x plus a JSON metadata sidecar."""
    csv_path = Path(csv_path)
    with open(csv_path, "w", newline="\n") as fh:
        cols = ["band", "rho"] + [f"s_{i + 1}" for i in range(atoms.dim)] + ["x"]
        fh.write(",".join(cols) + "\n")
        for j in range(atoms.j_trunc + 1):
            rho, dirs, x = atoms.band(j)
            for i in range(rho.size):
                row = [str(j), repr(float(rho[i]))]
                row += [repr(float(c)) for c in dirs[i]]
                row.append(repr(float(x[i])))
                fh.write(",".join(row) + "\n")
    if sidecar_path is None:
        sidecar_path = csv_path.with_suffix(".json")
    meta = {
        "A": atoms.domain_radius,
        "J_trunc": atoms.j_trunc,
        "seed": atoms.seed,
        "fingerprint": atoms.jump_measure_fingerprint,
        "dim": atoms.dim,
    }
    with open(sidecar_path, "w", newline="\n") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_atoms_csv(csv_path, sidecar_path=None) -> AtomSet:
    csv_path = Path(csv_path)
    if sidecar_path is None:
        sidecar_path = csv_path.with_suffix(".json")
    with open(sidecar_path) as fh:
        meta = json.load(fh)
    dim = int(meta["dim"])
    data = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
    bands = {}
    if data.size:
        band_idx = data[:, 0].astype(int)
        for j in np.unique(band_idx):
            sel = band_idx == j
            bands[int(j)] = (data[sel, 1], data[sel, 2:2 + dim], data[sel, 2 + dim])
    return AtomSet(dim, meta["A"], meta["J_trunc"], meta["seed"], bands,
                   meta["fingerprint"])
