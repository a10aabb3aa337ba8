"""Scan kernels for the hyperplane-approximation exponent maps.

Per band the map needs, for every grid point t, the minimum over atoms of
log|x| / log d(t, H) restricted to distances d < min(1, r_cut).  The scan
visits only the grid slab within r_cut of each hyperplane; rows (all axes but
the last) own their output cells, so the row-parallel kernel is race free.
Results agree with the straight numpy reference up to libm rounding in log.
"""

from __future__ import annotations

import math

import numpy as np

LOCUS_TOL = 1e-14

try:
    from numba import njit, prange

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def deco(fn):
            return fn
        return deco

    prange = range


@njit(cache=True, parallel=True)
def _scan_rows(row_pts, rho, s_row, s_last, log_absx, y0, dy, ncols, rcut,
               out_min, out_locus):  # pragma: no cover - compiled
    nrows = row_pts.shape[0]
    natoms = rho.shape[0]
    dcap = min(1.0, rcut)
    for i in prange(nrows):
        for a in range(natoms):
            c = rho[a]
            for m in range(row_pts.shape[1]):
                c -= s_row[a, m] * row_pts[i, m]
            sl = s_last[a]
            if sl != 0.0:
                ystar = c / sl
                half = rcut / abs(sl)
                k_lo = int(math.ceil((ystar - half - y0) / dy))
                k_hi = int(math.floor((ystar + half - y0) / dy))
                if k_lo < 0:
                    k_lo = 0
                if k_hi > ncols - 1:
                    k_hi = ncols - 1
                for k in range(k_lo, k_hi + 1):
                    d = abs(c - sl * (y0 + k * dy))
                    if d <= LOCUS_TOL:
                        out_locus[i, k] = True
                    elif d < dcap:
                        alpha = log_absx[a] / math.log(d)
                        if alpha < out_min[i, k]:
                            out_min[i, k] = alpha
            else:
                d = abs(c)
                if d <= LOCUS_TOL:
                    for k in range(ncols):
                        out_locus[i, k] = True
                elif d < dcap:
                    alpha = log_absx[a] / math.log(d)
                    for k in range(ncols):
                        if alpha < out_min[i, k]:
                            out_min[i, k] = alpha
    return out_min


def band_alpha_min(rho, dirs, x, row_pts, y0, dy, ncols, rcut):
    """Per-point minimum approximation exponents for one band of atoms.

    Returns (min_map, locus) with shape (nrows, ncols); min_map is +inf where
    no atom passes within min(1, rcut) of the point.
    """
    nrows = row_pts.shape[0]
    out_min = np.full((nrows, ncols), np.inf)
    out_locus = np.zeros((nrows, ncols), dtype=np.bool_)
    if rho.size == 0:
        return out_min, out_locus
    log_absx = np.log(np.abs(x))
    _scan_rows(np.ascontiguousarray(row_pts, dtype=np.float64),
               np.ascontiguousarray(rho, dtype=np.float64),
               np.ascontiguousarray(dirs[:, :-1], dtype=np.float64),
               np.ascontiguousarray(dirs[:, -1], dtype=np.float64),
               log_absx, float(y0), float(dy), int(ncols), float(rcut),
               out_min, out_locus)
    return out_min, out_locus


def band_alpha_min_reference(rho, dirs, x, points, rcut):
    """Straight dense evaluation over (points x atoms); the oracle for the scan."""
    n = points.shape[0]
    out_min = np.full(n, np.inf)
    out_locus = np.zeros(n, dtype=bool)
    if rho.size == 0:
        return out_min, out_locus
    dcap = min(1.0, rcut)
    log_absx = np.log(np.abs(x))
    chunk = max(1, int(4e6) // n)
    for start in range(0, rho.size, chunk):
        stop = min(start + chunk, rho.size)
        dist = np.abs(rho[start:stop][None, :] - points @ dirs[start:stop].T)
        out_locus |= (dist <= LOCUS_TOL).any(axis=1)
        valid = (dist > LOCUS_TOL) & (dist < dcap)
        with np.errstate(divide="ignore", invalid="ignore"):
            alpha = np.where(valid, log_absx[start:stop][None, :] / np.log(dist), np.inf)
        out_min = np.minimum(out_min, alpha.min(axis=1))
    return out_min, out_locus
