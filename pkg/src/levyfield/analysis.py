"""Regularity estimation from gridded field samples.

Pointwise smoothness is estimated from dyadic-scale oscillations (sup - inf
over balls, optionally after removing the best affine fit); singularity
spectra from large-deviation box counting of those oscillations; and the
hyperplane-approximation exponent directly from sampled atom sets.  The
oscillation proxy resolves exponents below one, the detrended variant
exponents in [1, 2); higher smoothness saturates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.ndimage import maximum_filter1d, minimum_filter1d

from . import _kernels
from .errors import ConfigError
from .grid import FieldSample, GridSpec
from .jumps import AtomSet

SATURATION_TOL = 1e-12
DETREND_SLOPE_TRIGGER = 0.95

FLAG_OK = 0
FLAG_SATURATED = 1
FLAG_JUMP_LOCUS = 2
FLAG_NAMES = {FLAG_OK: "OK", FLAG_SATURATED: "SATURATED", FLAG_JUMP_LOCUS: "JUMP_LOCUS"}


# ---------------------------------------------------------------------------
# oscillation maps


def _ball_widths(grid: GridSpec, k: int) -> list[int]:
    radius = 2.0 ** (-k)
    return [int(radius / h + 1e-9) for h in grid.spacings]


def _check_scale(grid: GridSpec, k: int) -> None:
    radius = 2.0 ** (-k)
    if radius < max(grid.spacings):
        raise ConfigError(f"scale 2^-{k} is below the grid resolution")


def _disc_extrema(arr: np.ndarray, grid: GridSpec, k: int):
    """Max and min over the Euclidean 2^-k ball around every grid point.

    Separable sweep: per row-offset a 1D extrema filter along the last axis
    with the offset-dependent half width, then a clipped shift-combine across
    rows.  Edge-replicating filters equal clipped-window extrema exactly.
    """
    radius = 2.0 ** (-k)
    if grid.dim == 1:
        w = _ball_widths(grid, k)[0]
        return (maximum_filter1d(arr, 2 * w + 1, mode="nearest"),
                minimum_filter1d(arr, 2 * w + 1, mode="nearest"))
    hs = grid.spacings
    shape = grid.counts
    out_max = np.full(shape, -np.inf)
    out_min = np.full(shape, np.inf)
    if grid.dim == 2:
        r0 = int(radius / hs[0] + 1e-9)
        for dy in range(-r0, r0 + 1):
            rem2 = radius * radius - (dy * hs[0]) ** 2
            if rem2 < 0.0:
                continue
            w = int(math.sqrt(rem2) / hs[1] + 1e-9)
            row_max = maximum_filter1d(arr, 2 * w + 1, axis=1, mode="nearest")
            row_min = minimum_filter1d(arr, 2 * w + 1, axis=1, mode="nearest")
            if dy >= 0:
                np.maximum(out_max[: shape[0] - dy], row_max[dy:], out=out_max[: shape[0] - dy])
                np.minimum(out_min[: shape[0] - dy], row_min[dy:], out=out_min[: shape[0] - dy])
            else:
                np.maximum(out_max[-dy:], row_max[:dy], out=out_max[-dy:])
                np.minimum(out_min[-dy:], row_min[:dy], out=out_min[-dy:])
        return out_max, out_min
    r0 = int(radius / hs[0] + 1e-9)
    r1 = int(radius / hs[1] + 1e-9)
    for d0 in range(-r0, r0 + 1):
        for d1 in range(-r1, r1 + 1):
            rem2 = radius * radius - (d0 * hs[0]) ** 2 - (d1 * hs[1]) ** 2
            if rem2 < 0.0:
                continue
            w = int(math.sqrt(rem2) / hs[2] + 1e-9)
            row_max = maximum_filter1d(arr, 2 * w + 1, axis=2, mode="nearest")
            row_min = minimum_filter1d(arr, 2 * w + 1, axis=2, mode="nearest")
            src0 = slice(max(d0, 0), shape[0] + min(d0, 0))
            dst0 = slice(max(-d0, 0), shape[0] + min(-d0, 0))
            src1 = slice(max(d1, 0), shape[1] + min(d1, 0))
            dst1 = slice(max(-d1, 0), shape[1] + min(-d1, 0))
            np.maximum(out_max[dst0, dst1], row_max[src0, src1], out=out_max[dst0, dst1])
            np.minimum(out_min[dst0, dst1], row_min[src0, src1], out=out_min[dst0, dst1])
    return out_max, out_min


def _raw_osc_map(sample: FieldSample, k: int) -> np.ndarray:
    arr = sample.reshaped()
    mx, mn = _disc_extrema(arr, sample.grid, k)
    return (mx - mn).ravel()


def _detrended_osc_1d(values: np.ndarray, xs: np.ndarray, w: int) -> np.ndarray:
    """Residual sup - inf over clipped windows of half width w after the
    window's least-squares affine fit, vectorized over all centers."""
    n = values.size
    idx = np.arange(n)
    lo = np.maximum(idx - w, 0)
    hi = np.minimum(idx + w, n - 1)
    cnt = (hi - lo + 1).astype(float)

    def wsum(a):
        c = np.concatenate([[0.0], np.cumsum(a)])
        return c[hi + 1] - c[lo]

    sv, sx = wsum(values), wsum(xs)
    sxx, sxv = wsum(xs * xs), wsum(xs * values)
    denom = cnt * sxx - sx * sx
    slope = np.where(denom > 0, (cnt * sxv - sx * sv) / np.where(denom > 0, denom, 1.0), 0.0)
    inter = (sv - slope * sx) / cnt
    rmax = np.full(n, -np.inf)
    rmin = np.full(n, np.inf)
    for off in range(-w, w + 1):
        if off >= 0:
            sl_c, sl_t = slice(0, n - off), slice(off, n)
        else:
            sl_c, sl_t = slice(-off, n), slice(0, n + off)
        r = values[sl_t] - inter[sl_c] - slope[sl_c] * xs[sl_t]
        np.maximum(rmax[sl_c], r, out=rmax[sl_c])
        np.minimum(rmin[sl_c], r, out=rmin[sl_c])
    return rmax - rmin


def _detrended_osc_point(sample: FieldSample, flat_idx: int, k: int) -> float:
    """Detrended oscillation at one grid point (gather the ball, fit, residuals)."""
    grid = sample.grid
    radius = 2.0 ** (-k)
    widths = _ball_widths(grid, k)
    center = np.unravel_index(flat_idx, grid.counts)
    slices = tuple(slice(max(c - w, 0), min(c + w, n - 1) + 1)
                   for c, w, n in zip(center, widths, grid.counts))
    axes = grid.axes()
    sub_axes = [axes[i][slices[i]] for i in range(grid.dim)]
    mesh = np.meshgrid(*sub_axes, indexing="ij")
    pts = np.column_stack([m.ravel() for m in mesh])
    t0 = np.array([axes[i][center[i]] for i in range(grid.dim)])
    mask = ((pts - t0) ** 2).sum(axis=1) <= radius * radius + 1e-15
    vals = sample.reshaped()[slices].ravel()[mask]
    pts = pts[mask]
    design = np.column_stack([np.ones(pts.shape[0]), pts])
    coef, *_ = np.linalg.lstsq(design, vals, rcond=None)
    resid = vals - design @ coef
    return float(resid.max() - resid.min())


def _detrended_osc_map(sample: FieldSample, k: int, only: np.ndarray | None = None) -> np.ndarray:
    grid = sample.grid
    if grid.dim == 1:
        full = _detrended_osc_1d(sample.values, grid.axis(0), _ball_widths(grid, k)[0])
        return full if only is None else full[only]
    targets = np.arange(grid.n_points) if only is None else np.asarray(only)
    return np.array([_detrended_osc_point(sample, int(i), k) for i in targets])


def oscillation(sample: FieldSample, t, k: int, detrended: bool = False) -> float:
    """sup - inf of the field over grid points within 2^-k of t; the detrended
    variant first removes the ball's least-squares affine fit."""
    _check_scale(sample.grid, k)
    t = np.asarray(t, dtype=float).reshape(-1)
    pts = sample.grid.points()
    flat = int(np.argmin(((pts - t) ** 2).sum(axis=1)))
    if not np.allclose(pts[flat], t, atol=1e-9):
        raise ConfigError("t is not a grid point")
    radius = 2.0 ** (-k)
    in_ball = ((pts - pts[flat]) ** 2).sum(axis=1) <= radius * radius + 1e-15
    if in_ball.sum() < 4:
        raise ConfigError("ball holds fewer than 4 grid points at this scale")
    if detrended:
        return _detrended_osc_point(sample, flat, k)
    vals = sample.values[in_ball]
    return float(vals.max() - vals.min())


# ---------------------------------------------------------------------------
# pointwise exponent map


@dataclass
class HolderMap:
    grid: GridSpec
    exponent: np.ndarray  # NaN where saturated
    r2: np.ndarray
    flags: np.ndarray  # FLAG_OK / FLAG_SATURATED
    k_min: int
    k_max: int

    def ok_exponents(self) -> np.ndarray:
        return self.exponent[self.flags == FLAG_OK]


def _masked_regression(osc: np.ndarray, ks: np.ndarray):
    """Per-point slope of log2 oscillation against -k, skipping dead scales."""
    m = osc > SATURATION_TOL
    x = (-ks.astype(float))[:, None]
    y = np.where(m, np.log2(np.where(m, osc, 1.0)), 0.0)
    n = m.sum(axis=0).astype(float)
    sx = (m * x).sum(axis=0)
    sxx = (m * x * x).sum(axis=0)
    sy = y.sum(axis=0)
    sxy = (y * x).sum(axis=0)
    syy = (y * y).sum(axis=0)
    denom = n * sxx - sx * sx
    usable = (n >= 2) & (denom > 1e-12)
    slope = np.where(usable, (n * sxy - sx * sy) / np.where(usable, denom, 1.0), np.nan)
    yvar = n * syy - sy * sy
    with np.errstate(invalid="ignore", divide="ignore"):
        r2 = np.where(yvar > 1e-20,
                      (n * sxy - sx * sy) ** 2 / (denom * yvar),
                      1.0)
    r2 = np.where(usable, np.clip(r2, 0.0, 1.0), np.nan)
    return slope, r2, usable


def holder_map(sample: FieldSample, k_min: int = 2, k_max: int | None = None,
               h_max: float = 2.0, detrend: str = "auto") -> HolderMap:
    """Pointwise regularity estimates from oscillation decay across scales.

    The exponent at t is the regression slope of log2 oscillation on -k over
    k in [k_min, k_max], clipped to [0, h_max].  Points whose oscillations all
    sit below 1e-12 (or leave under two regressable scales) are SATURATED:
    the field is affine there to working precision.  detrend: "auto" switches
    a point to detrended oscillations when its raw slope exceeds 0.95 (the raw
    proxy cannot see past exponent one), "always"/"never" force the variant.
    """
    if detrend not in ("auto", "always", "never"):
        raise ConfigError("detrend must be auto, always or never")
    grid = sample.grid
    if k_max is None:
        k_max = int(math.floor(-math.log2(max(grid.spacings)))) - 2
    if k_max - k_min < 3:
        raise ConfigError("need k_max - k_min >= 3 usable scales")
    _check_scale(grid, k_max)
    ks = np.arange(k_min, k_max + 1)
    if detrend == "always":
        osc = np.stack([_detrended_osc_map(sample, int(k)) for k in ks])
        slope, r2, usable = _masked_regression(osc, ks)
    else:
        osc = np.stack([_raw_osc_map(sample, int(k)) for k in ks])
        slope, r2, usable = _masked_regression(osc, ks)
        if detrend == "auto":
            redo = usable & (slope > DETREND_SLOPE_TRIGGER)
            if redo.any():
                idx = np.nonzero(redo)[0]
                osc_d = np.stack([_detrended_osc_map(sample, int(k), only=idx) for k in ks])
                slope_d, r2_d, usable_d = _masked_regression(osc_d, ks)
                slope[idx], r2[idx], usable[idx] = slope_d, r2_d, usable_d
    flags = np.where(usable, FLAG_OK, FLAG_SATURATED).astype(np.uint8)
    exponent = np.where(usable, np.clip(slope, 0.0, h_max), np.nan)
    return HolderMap(grid, exponent, r2, flags, int(k_min), int(k_max))


# ---------------------------------------------------------------------------
# singularity spectrum


@dataclass
class SpectrumEstimate:
    h_centers: np.ndarray
    delta_h: float
    dims: np.ndarray            # NaN marks ABSENT bins
    r2: np.ndarray
    ks: np.ndarray
    counts: np.ndarray          # (n_scales, n_bins)
    total_boxes: np.ndarray     # per scale
    saturated_boxes: np.ndarray  # per scale, oscillation below tolerance

    def absent(self) -> np.ndarray:
        return np.isnan(self.dims)


def _box_oscillations(sample: FieldSample, k: int) -> np.ndarray:
    """sup - inf per full closed box of side 2^-k, boxes anchored at the grid
    corner; trailing partial boxes are dropped."""
    grid = sample.grid
    arr = sample.reshaped()
    mx = arr
    mn = arr
    for axis in range(grid.dim):
        m = int(round(2.0 ** (-k) / grid.spacings[axis]))
        if m < 1:
            return np.zeros(0)
        nb = (grid.counts[axis] - 1) // m
        if nb < 1:
            return np.zeros(0)
        idx = np.arange(nb)[:, None] * m + np.arange(m + 1)[None, :]
        mx = np.take(mx, idx, axis=axis).max(axis=axis + 1)
        mn = np.take(mn, idx, axis=axis).min(axis=axis + 1)
    return (mx - mn).ravel()


def spectrum_estimate(sample: FieldSample, bin_centers, delta_h: float = 0.1,
                      k_min: int = 2, k_max: int | None = None,
                      fit_scales: int = 3) -> SpectrumEstimate:
    """Large-deviation box-counting spectrum.

    At scale 2^-k each full box contributes a coarse exponent
    h = -log2(osc) / k; N_k(h) counts boxes with |h - center| < delta_h.
    Centers spaced 2 delta_h apart make the windows a partition, so the counts
    per scale sum to at most the box total (boxes with h outside every bin or
    with zero oscillation are left out; the latter are reported separately as
    saturated boxes, the box-counting image of affine regions).  D(h) is the
    log2 N_k(h) vs k slope over the finest fit_scales scales; a bin with no
    boxes at the two finest scales is ABSENT.
    """
    if not 0.05 <= delta_h <= 0.3:
        raise ConfigError("bin half-width must lie in [0.05, 0.3]")
    grid = sample.grid
    if k_max is None:
        k_max = int(math.floor(-math.log2(max(grid.spacings)))) - 2
    ks = np.arange(k_min, k_max + 1)
    if ks.size < 3:
        raise ConfigError("need at least 3 scales")
    centers = np.asarray(bin_centers, dtype=float).reshape(-1)
    counts = np.zeros((ks.size, centers.size))
    totals = np.zeros(ks.size)
    saturated = np.zeros(ks.size)
    for i, k in enumerate(ks):
        osc = _box_oscillations(sample, int(k))
        totals[i] = osc.size
        if osc.size == 0:
            continue
        alive = osc > SATURATION_TOL
        saturated[i] = osc.size - int(alive.sum())
        h_est = -np.log2(osc[alive]) / float(k)
        for b, c in enumerate(centers):
            counts[i, b] = np.count_nonzero((h_est >= c - delta_h) & (h_est < c + delta_h))
    dims = np.full(centers.size, np.nan)
    r2 = np.full(centers.size, np.nan)
    fit = slice(max(0, ks.size - fit_scales), ks.size)
    d = grid.dim
    for b in range(centers.size):
        if counts[-1, b] == 0 and counts[-2, b] == 0:
            continue
        kk = ks[fit].astype(float)
        nn = counts[fit, b]
        pos = nn > 0
        if pos.sum() < 2:
            continue
        slope, inter = np.polyfit(kk[pos], np.log2(nn[pos]), 1)
        pred = slope * kk[pos] + inter
        resid = np.log2(nn[pos]) - pred
        tot = np.log2(nn[pos]) - np.log2(nn[pos]).mean()
        denom = float((tot ** 2).sum())
        r2[b] = 1.0 if denom < 1e-20 else max(0.0, 1.0 - float((resid ** 2).sum()) / denom)
        dims[b] = min(max(slope, 0.0), float(d))
    return SpectrumEstimate(centers, float(delta_h), dims, r2, ks, counts,
                            totals, saturated)


# ---------------------------------------------------------------------------
# hyperplane approximation exponents


@dataclass
class ApproxExponentMap:
    grid: GridSpec
    a_hat: np.ndarray           # +inf where no witness below the cap
    flags: np.ndarray           # FLAG_OK / FLAG_JUMP_LOCUS
    band_minima: np.ndarray     # (n_bands, n_points) per-band minima diagnostic
    bands: np.ndarray
    j_floor: int
    alpha_cap: float | None


def _row_col_split(grid: GridSpec):
    axes = grid.axes()
    if grid.dim == 1:
        row_pts = np.zeros((1, 0))
    elif grid.dim == 2:
        row_pts = axes[0][:, None]
    else:
        row_pts = np.column_stack(
            [m.ravel() for m in np.meshgrid(*axes[:-1], indexing="ij")])
    col = axes[-1]
    return row_pts, float(col[0]), grid.spacings[-1], col.size


def approx_exponent_map(atoms: AtomSet, grid: GridSpec, j_floor: int | None = None,
                        alpha_cap: float | None = None,
                        use_reference: bool = False) -> ApproxExponentMap:
    """Critical hyperplane-approximation exponent at every grid point.

    A band-j atom within distance d < 1 of t witnesses approximation at every
    rate above log|x| / log d; the estimate is the minimum witness over bands
    j_floor..j_trunc (default j_floor = j_trunc - 8), with per-band minima kept
    so stabilization can be inspected.  This is a finite-truncation stand-in
    for a limit over infinitely many bands, hence an upper-bound-style proxy.
    Points on a sampled hyperplane (distance within 1e-14) are flagged
    JUMP_LOCUS: the exponent is zero there, not an approximation rate.
    alpha_cap trades exactness above the cap for speed: finite values below it
    are exact, anything above is reported as +inf.
    """
    if j_floor is None:
        j_floor = max(1, atoms.j_trunc - 8)
    if atoms.j_trunc < j_floor + 4:
        raise ConfigError("atom set needs bands through j_floor + 4")
    if grid.dim != atoms.dim:
        raise ConfigError("grid and atom set dimensions disagree")
    bands = np.arange(max(1, j_floor), atoms.j_trunc + 1)
    n = grid.n_points
    band_minima = np.full((bands.size, n), np.inf)
    locus = np.zeros(n, dtype=bool)
    row_pts, y0, dy, ncols = _row_col_split(grid)
    points = grid.points() if use_reference else None
    for bi, j in enumerate(bands):
        rho, dirs, x = atoms.band(int(j))
        if rho.size == 0:
            continue
        if alpha_cap is None:
            rcut = 1.0
        else:
            rcut = min(1.0, 2.0 ** (float(-j + 1) / alpha_cap))
        if use_reference:
            mins, loc = _kernels.band_alpha_min_reference(rho, dirs, x, points, rcut)
        else:
            mins, loc = _kernels.band_alpha_min(rho, dirs, x, row_pts, y0, dy, ncols, rcut)
            mins, loc = mins.ravel(), loc.ravel()
        band_minima[bi] = mins
        locus |= loc
    a_hat = band_minima.min(axis=0) if bands.size else np.full(n, np.inf)
    flags = np.where(locus, FLAG_JUMP_LOCUS, FLAG_OK).astype(np.uint8)
    return ApproxExponentMap(grid, a_hat, flags, band_minima, bands,
                             int(j_floor), alpha_cap)


# ---------------------------------------------------------------------------
# agreement between the two exponent routes


@dataclass
class AgreementReport:
    n_pairs: int
    median_abs_diff: float
    fraction_within: float
    tolerance: float
    holder_values: np.ndarray = field(repr=False)
    reference_values: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "n_pairs": self.n_pairs,
            "median_abs_diff": self.median_abs_diff,
            "fraction_within": self.fraction_within,
            "tolerance": self.tolerance,
        }


def exponent_agreement(holder: HolderMap, approx: ApproxExponentMap,
                       combined: bool = False, tolerance: float = 0.2) -> AgreementReport:
    """Pointwise comparison of oscillation exponents against approximation
    exponents; pairs exclude SATURATED and JUMP_LOCUS points.  For fields with
    a Gaussian part the reference is min(1/2, A_hat), the smaller of the two
    component exponents."""
    if holder.grid != approx.grid:
        raise ConfigError("exponent maps live on different grids")
    ref = np.minimum(0.5, approx.a_hat) if combined else approx.a_hat
    eligible = (holder.flags == FLAG_OK) & (approx.flags == FLAG_OK) & np.isfinite(ref)
    hv = holder.exponent[eligible]
    rv = ref[eligible]
    if hv.size == 0:
        return AgreementReport(0, math.nan, math.nan, tolerance, hv, rv)
    diff = np.abs(hv - rv)
    return AgreementReport(int(hv.size), float(np.median(diff)),
                           float((diff <= tolerance).mean()), tolerance, hv, rv)


# ---------------------------------------------------------------------------
# CSV export


def _fmt(x: float) -> str:
    return repr(float(x))


def write_holder_csv(hm: HolderMap, path) -> None:
    pts = hm.grid.points()
    with open(Path(path), "w", newline="\n") as fh:
        cols = [f"t_{i + 1}" for i in range(hm.grid.dim)] + ["exponent", "flag", "r2"]
        fh.write(",".join(cols) + "\n")
        for i in range(pts.shape[0]):
            row = [_fmt(c) for c in pts[i]]
            e = hm.exponent[i]
            row.append("" if math.isnan(e) else _fmt(e))
            row.append(FLAG_NAMES[int(hm.flags[i])])
            r = hm.r2[i]
            row.append("" if math.isnan(r) else _fmt(r))
            fh.write(",".join(row) + "\n")


def write_approx_csv(am: ApproxExponentMap, path, band_minima_path=None) -> None:
    pts = am.grid.points()
    with open(Path(path), "w", newline="\n") as fh:
        cols = [f"t_{i + 1}" for i in range(am.grid.dim)] + ["exponent", "flag"]
        fh.write(",".join(cols) + "\n")
        for i in range(pts.shape[0]):
            row = [_fmt(c) for c in pts[i]]
            a = am.a_hat[i]
            row.append("inf" if math.isinf(a) else _fmt(a))
            row.append(FLAG_NAMES[int(am.flags[i])])
            fh.write(",".join(row) + "\n")
    if band_minima_path is not None:
        with open(Path(band_minima_path), "w", newline="\n") as fh:
            fh.write(",".join(f"band_{j}" for j in am.bands) + "\n")
            for i in range(pts.shape[0]):
                fh.write(",".join("inf" if math.isinf(v) else _fmt(v)
                                  for v in am.band_minima[:, i]) + "\n")


def write_spectrum_csv(est: SpectrumEstimate, path) -> None:
    with open(Path(path), "w", newline="\n") as fh:
        fh.write("h_center,D,r2\n")
        for i, c in enumerate(est.h_centers):
            d = est.dims[i]
            r = est.r2[i]
            fh.write(",".join([_fmt(c),
                               "ABSENT" if math.isnan(d) else _fmt(d),
                               "" if math.isnan(r) else _fmt(r)]) + "\n")
        fh.write("# per-scale box counts: k,total,saturated," +
                 ",".join(_fmt(c) for c in est.h_centers) + "\n")
        for i, k in enumerate(est.ks):
            fh.write(",".join([str(int(k)), _fmt(est.total_boxes[i]),
                               _fmt(est.saturated_boxes[i])] +
                              [_fmt(v) for v in est.counts[i]]) + "\n")
