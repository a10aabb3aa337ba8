"""Characteristic triples and the deterministic calculus derived from them.

A field is configured by a triple (drift, spherical Gaussian measure, hyperplane
jump measure).  Everything in this module is pure arithmetic on those measures:
dyadic band masses, the activity index, the admissibility sum, power-gauge
exponents, theoretical singularity spectra, and trace (restriction to a
subspace) triples.  All types are immutable after construction.

Dyadic magnitude bands: band 0 holds jump sizes |x| > 1 and band j >= 1 holds
|x| in (2^-j, 2^-j+1].
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, IntegrabilityError

UNIT_NORM_TOL = 1e-12
ORTHONORMAL_TOL = 1e-10
PROJECTION_DROP_TOL = 1e-12

# Half-atom counts used when an isotropic directional component has to be
# discretized (trace pushforwards of the uniform sphere measure).
CIRCLE_HALF_ATOMS = 720
SPHERE_HALF_ATOMS = 2048

# Mean of |<s, u>| / ||u|| over the uniform unit sphere, per dimension.
_ISO_MEAN_ABS = {1: 1.0, 2: 2.0 / math.pi, 3: 0.5}


def _as_unit_vector(coords, dim=None) -> np.ndarray:
    v = np.asarray(coords, dtype=float).reshape(-1)
    if dim is not None and v.size != dim:
        raise ConfigError(f"direction has dimension {v.size}, expected {dim}")
    if v.size not in (1, 2, 3):
        raise ConfigError(f"unsupported dimension {v.size}; expected 1, 2 or 3")
    n = float(np.linalg.norm(v))
    if abs(n - 1.0) > UNIT_NORM_TOL:
        raise ConfigError(f"direction {v.tolist()} is not a unit vector (norm {n})")
    v.flags.writeable = False
    return v


class Direction:
    """A unit vector on the sphere of R^d, d in {1, 2, 3}."""

    __slots__ = ("coords",)

    def __init__(self, coords):
        object.__setattr__(self, "coords", _as_unit_vector(coords))

    @property
    def dim(self) -> int:
        return self.coords.size

    def __neg__(self) -> "Direction":
        return Direction(-self.coords)

    def __repr__(self):
        return f"Direction({self.coords.tolist()})"


class SphericalMeasure:
    """Finite symmetric measure on the unit sphere.

    Stored as an isotropic (uniform) mass plus a list of half-atoms: each
    half-atom (s, w) puts mass w at s AND mass w at -s, so symmetry holds by
    construction and the total mass is isotropic_mass + 2 * sum(weights).
    """

    __slots__ = ("dim", "isotropic_mass", "atom_dirs", "atom_weights")

    def __init__(self, dim: int, isotropic_mass: float = 0.0, atoms: Iterable = ()):
        if dim not in (1, 2, 3):
            raise ConfigError(f"unsupported dimension {dim}")
        iso = float(isotropic_mass)
        if iso < 0.0:
            raise ConfigError("isotropic mass must be nonnegative")
        dirs, weights = [], []
        for coords, w in atoms:
            if isinstance(coords, Direction):
                coords = coords.coords
            w = float(w)
            if w <= 0.0:
                raise ConfigError("atom weights must be positive")
            dirs.append(_as_unit_vector(coords, dim))
            weights.append(w)
        self.dim = dim
        self.isotropic_mass = iso
        self.atom_dirs = np.array(dirs, dtype=float).reshape(len(dirs), dim)
        self.atom_weights = np.asarray(weights, dtype=float)
        self.atom_dirs.flags.writeable = False
        self.atom_weights.flags.writeable = False

    @property
    def total_mass(self) -> float:
        return self.isotropic_mass + 2.0 * float(self.atom_weights.sum())

    @property
    def is_zero(self) -> bool:
        return self.total_mass == 0.0

    @property
    def c_mu(self) -> float:
        """Scale constant (total mass / 2)^(1/2) of the square-root modulus bound."""
        return math.sqrt(self.total_mass / 2.0)

    def expanded(self) -> tuple[np.ndarray, np.ndarray]:
        """Atoms with the symmetric partner made explicit: (2k, d) dirs, (2k,) weights."""
        dirs = np.vstack([self.atom_dirs, -self.atom_dirs])
        return dirs, np.concatenate([self.atom_weights, self.atom_weights])

    def half_abs_integral(self, u) -> float:
        """(1/2) * integral of |<s, u>| against the measure.

        Equals the integral of max(<s, u>, 0) by symmetry.  Closed forms are
        used for the isotropic part (see isotropic_mean_abs).
        """
        u = np.asarray(u, dtype=float).reshape(-1)
        if u.size != self.dim:
            raise ConfigError(f"vector has dimension {u.size}, expected {self.dim}")
        total = 0.0
        if self.atom_weights.size:
            total += float(self.atom_weights @ np.abs(self.atom_dirs @ u))
        if self.isotropic_mass > 0.0:
            total += 0.5 * self.isotropic_mass * _ISO_MEAN_ABS[self.dim] * float(np.linalg.norm(u))
        return total


def isotropic_mean_abs(dim: int) -> float:
    """Mean of |<s, e>| over the uniform unit sphere, e any unit vector."""
    return _ISO_MEAN_ABS[dim]


def _band_of(abs_x: np.ndarray) -> np.ndarray:
    """Dyadic band index of each magnitude: 0 for |x| > 1, else j with |x| in (2^-j, 2^-j+1]."""
    abs_x = np.asarray(abs_x, dtype=float)
    out = np.zeros(abs_x.shape, dtype=np.int64)
    small = abs_x <= 1.0
    out[small] = np.floor(-np.log2(abs_x[small])).astype(np.int64) + 1
    return out


def band_interval(j: int) -> tuple[float, float]:
    """Magnitude interval (a, b] of band j; band 0 is (1, inf)."""
    if j == 0:
        return 1.0, math.inf
    return 2.0 ** (-j), 2.0 ** (-j + 1)


class StableRadial:
    """Two-sided power-law radial family with density scale * |x|^(-1-alpha)."""

    kind = "stable"
    __slots__ = ("alpha", "scale")

    def __init__(self, alpha: float, scale: float = 1.0):
        alpha = float(alpha)
        scale = float(scale)
        if not 0.0 < alpha < 2.0:
            raise ConfigError("stable exponent must lie in (0, 2)")
        if scale <= 0.0:
            raise ConfigError("stable scale must be positive")
        self.alpha = alpha
        self.scale = scale

    def band_mass(self, j: int) -> float:
        a = self.alpha
        if j == 0:
            return 2.0 * self.scale / a
        return (2.0 * self.scale / a) * (2.0 ** (j * a) - 2.0 ** ((j - 1) * a))

    def second_moment_band(self, j: int) -> float:
        # two-sided integral of x^2 over band j; infinite for band 0 since
        # alpha < 2 (band 0 is never compensated, so this is diagnostic only)
        if j == 0:
            return math.inf
        a, b = band_interval(j)
        g = 2.0 - self.alpha
        return 2.0 * self.scale * (b ** g - a ** g) / g

    def tail_second_moment(self, j_from: int) -> float:
        """Sum of second_moment_band over all bands j > j_from (telescoping)."""
        g = 2.0 - self.alpha
        return 2.0 * self.scale * (2.0 ** (-j_from * g)) / g

    def max_band(self):
        return None

    def index(self) -> float:
        return self.alpha

    def sample_magnitudes(self, rng, j: int, n: int) -> np.ndarray:
        # inverse CDF of the power law truncated to band j; rejection-free
        u = rng.random(n)
        a = self.alpha
        if j == 0:
            return u ** (-1.0 / a)
        lo, hi = band_interval(j)
        la, ha = lo ** (-a), hi ** (-a)
        return (la - u * (la - ha)) ** (-1.0 / a)

    def cf_term(self, theta: float) -> float:
        """Integral of (e^{i theta x} - 1 - i theta x 1_{|x|<=1}) against the family.

        Real by symmetry: 2 * scale * int_0^inf (cos(theta x) - 1) x^(-1-alpha) dx.
        """
        from scipy.integrate import quad

        th = abs(float(theta))
        if th == 0.0:
            return 0.0
        a = self.alpha
        inner = quad(lambda x: (math.cos(th * x) - 1.0) * x ** (-1.0 - a), 0.0, 1.0,
                     limit=200)[0]
        # Fourier-weight quadrature for the oscillatory tail
        osc = quad(lambda x: x ** (-1.0 - a), 1.0, np.inf, weight="cos", wvar=th)[0]
        return 2.0 * self.scale * (inner + osc - 1.0 / a)


class FiniteAtomsRadial:
    """Finitely many symmetric radial atoms: each (x, w) puts mass w at +|x| and -|x|."""

    kind = "atoms"
    __slots__ = ("magnitudes", "weights")

    def __init__(self, atoms: Iterable):
        mags, weights = [], []
        for x, w in atoms:
            x = float(x)
            w = float(w)
            if x == 0.0:
                raise ConfigError("radial atoms must be nonzero")
            if w <= 0.0:
                raise ConfigError("radial atom weights must be positive")
            mags.append(abs(x))
            weights.append(w)
        self.magnitudes = np.asarray(mags, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        self.magnitudes.flags.writeable = False
        self.weights.flags.writeable = False

    def _bands(self) -> np.ndarray:
        return _band_of(self.magnitudes)

    def band_mass(self, j: int) -> float:
        sel = self._bands() == j
        return 2.0 * float(self.weights[sel].sum())

    def second_moment_band(self, j: int) -> float:
        sel = self._bands() == j
        return 2.0 * float((self.weights[sel] * self.magnitudes[sel] ** 2).sum())

    def tail_second_moment(self, j_from: int) -> float:
        sel = self._bands() > j_from
        return 2.0 * float((self.weights[sel] * self.magnitudes[sel] ** 2).sum())

    def max_band(self):
        if self.magnitudes.size == 0:
            return 0
        return int(self._bands().max())

    def index(self) -> float:
        return 0.0

    def sample_magnitudes(self, rng, j: int, n: int) -> np.ndarray:
        sel = self._bands() == j
        mags = self.magnitudes[sel]
        w = self.weights[sel]
        if mags.size == 0:
            raise ConfigError(f"band {j} carries no mass")
        idx = rng.choice(mags.size, size=n, p=w / w.sum())
        return mags[idx]

    def cf_term(self, theta: float) -> float:
        th = float(theta)
        return 2.0 * float((self.weights * (np.cos(th * self.magnitudes) - 1.0)).sum())


class BandTableRadial:
    """Radial family given directly by its dyadic band masses.

    nu0 is the mass of |x| > 1 and nu[j-1] the mass of band j for
    j = 1..len(nu).  Beyond the table the masses follow the continuation rule:
    'geometric' fits log2(nu_j) ~ a + b j on the last fit_window positive bands
    and extrapolates 2^(a + b j); 'zero' puts no mass beyond the table.
    Within a band, magnitudes are treated as uniform on (2^-j, 2^-j+1]
    (uniform on (1, 2] for band 0); this convention fixes the sampling law and
    the second moments consistently.
    """

    kind = "bandtable"
    __slots__ = ("nu0", "nu", "continuation", "fit_window", "_geom_a", "_geom_b")

    def __init__(self, nu0: float, nu: Sequence[float], continuation: str = "geometric",
                 fit_window: int = 8):
        nu0 = float(nu0)
        nu = np.asarray(nu, dtype=float)
        if nu0 < 0.0 or not math.isfinite(nu0):
            raise ConfigError("band-0 mass must be finite and nonnegative")
        if nu.ndim != 1 or nu.size == 0:
            raise ConfigError("band table must be a nonempty 1-d sequence")
        if np.any(nu < 0.0) or not np.all(np.isfinite(nu)):
            raise ConfigError("band masses must be finite and nonnegative")
        if continuation not in ("geometric", "zero"):
            raise ConfigError(f"unknown continuation rule {continuation!r}")
        self.nu0 = nu0
        self.nu = nu
        self.nu.flags.writeable = False
        self.continuation = continuation
        self.fit_window = int(fit_window)
        self._geom_a, self._geom_b = self._fit_geometric()

    def _fit_geometric(self):
        if self.continuation != "geometric":
            return None, None
        j = np.arange(1, self.nu.size + 1, dtype=float)
        window = slice(max(0, self.nu.size - self.fit_window), self.nu.size)
        jj, vv = j[window], self.nu[window]
        pos = vv > 0.0
        if pos.sum() < 2:
            return None, None  # not enough signal, fall back to zero continuation
        b, a = np.polyfit(jj[pos], np.log2(vv[pos]), 1)
        return float(a), float(b)

    @property
    def table_size(self) -> int:
        return self.nu.size

    def band_mass(self, j: int) -> float:
        if j == 0:
            return self.nu0
        if j <= self.nu.size:
            return float(self.nu[j - 1])
        if self._geom_b is None:
            return 0.0
        return 2.0 ** (self._geom_a + self._geom_b * j)

    def second_moment_band(self, j: int) -> float:
        m = self.band_mass(j)
        if m == 0.0:
            return 0.0
        a, b = (1.0, 2.0) if j == 0 else band_interval(j)
        return m * (a * a + a * b + b * b) / 3.0  # E[x^2] under uniform magnitude

    def tail_second_moment(self, j_from: int) -> float:
        total = 0.0
        for j in range(j_from + 1, self.nu.size + 1):
            total += self.second_moment_band(j)
        if self._geom_b is not None:
            # extrapolated bands are exactly geometric: E[x^2] per band is
            # (7/3) 2^-2j, so terms scale by 2^(b - 2) from band to band
            if self._geom_b >= 2.0:
                return math.inf
            j0 = max(j_from + 1, self.nu.size + 1)
            total += self.second_moment_band(j0) / (1.0 - 2.0 ** (self._geom_b - 2.0))
        return total

    def max_band(self):
        if self._geom_b is not None:
            return None
        nonzero = np.nonzero(self.nu)[0]
        if nonzero.size:
            return int(nonzero[-1] + 1)
        return 0

    def index(self) -> float:
        j = np.arange(1, self.nu.size + 1, dtype=float)
        half = self.nu.size // 2
        jj, vv = j[half:], self.nu[half:]
        pos = vv > 0.0
        candidates = []
        if pos.any():
            candidates.append(float(np.max(np.log2(vv[pos]) / jj[pos])))
        if self._geom_b is not None:
            candidates.append(self._geom_b + max(self._geom_a, 0.0) / (self.nu.size + 1))
        if not candidates:
            return 0.0
        return min(max(max(candidates), 0.0), 2.0)

    def sample_magnitudes(self, rng, j: int, n: int) -> np.ndarray:
        a, b = (1.0, 2.0) if j == 0 else band_interval(j)
        return rng.uniform(a, b, n)

    def cf_term(self, theta: float) -> float:
        th = abs(float(theta))
        if th == 0.0:
            return 0.0
        total = 0.0
        for j in range(self.nu.size + 400):
            m = self.band_mass(j)
            a, b = (1.0, 2.0) if j == 0 else band_interval(j)
            if m > 0.0:
                # E[cos(theta x) - 1] under uniform magnitude on (a, b]
                total += m * ((math.sin(th * b) - math.sin(th * a)) / (th * (b - a)) - 1.0)
            if j > self.nu.size and (self._geom_b is None or m * (th * b) ** 2 < 1e-16):
                break
        return total


RadialFamily = StableRadial | FiniteAtomsRadial | BandTableRadial

PRODUCT = "product"
ATOMLIST = "atomlist"


class JumpMeasure:
    """Symmetric measure on sphere x nonzero reals driving the jump component.

    Either a PRODUCT of a directional weighting (SphericalMeasure-shaped) with
    a radial family, or an explicit ATOMLIST of (direction, x, weight) triples
    that must already be symmetric under (s, x) -> (-s, -x).
    """

    __slots__ = ("dim", "coupling", "directional", "radial",
                 "atom_dirs", "atom_x", "atom_weights")

    def __init__(self, dim: int, *, directional: SphericalMeasure | None = None,
                 radial: RadialFamily | None = None, atoms: Iterable | None = None):
        if dim not in (1, 2, 3):
            raise ConfigError(f"unsupported dimension {dim}")
        self.dim = dim
        if atoms is not None:
            if directional is not None or radial is not None:
                raise ConfigError("give either atoms or (directional, radial), not both")
            dirs, xs, ws = [], [], []
            for coords, x, w in atoms:
                if isinstance(coords, Direction):
                    coords = coords.coords
                x, w = float(x), float(w)
                if x == 0.0:
                    raise ConfigError("jump sizes must be nonzero")
                if w <= 0.0:
                    raise ConfigError("jump atom weights must be positive")
                dirs.append(_as_unit_vector(coords, dim))
                xs.append(x)
                ws.append(w)
            self.coupling = ATOMLIST
            self.directional = None
            self.radial = None
            self.atom_dirs = np.array(dirs, dtype=float).reshape(len(dirs), dim)
            self.atom_x = np.asarray(xs, dtype=float)
            self.atom_weights = np.asarray(ws, dtype=float)
            for arr in (self.atom_dirs, self.atom_x, self.atom_weights):
                arr.flags.writeable = False
            self._check_symmetry()
        else:
            if directional is None or radial is None:
                raise ConfigError("product coupling needs a directional part and a radial family")
            if directional.dim != dim:
                raise ConfigError("directional part has the wrong dimension")
            self.coupling = PRODUCT
            self.directional = directional
            self.radial = radial
            self.atom_dirs = self.atom_x = self.atom_weights = None

    @classmethod
    def zero(cls, dim: int) -> "JumpMeasure":
        return cls(dim, atoms=())

    @classmethod
    def from_half_atoms(cls, dim: int, half_atoms: Iterable) -> "JumpMeasure":
        """Build a symmetric ATOMLIST from half-atoms; each (s, x, w) also adds (-s, -x, w)."""
        full = []
        for coords, x, w in half_atoms:
            if isinstance(coords, Direction):
                coords = coords.coords
            coords = np.asarray(coords, dtype=float)
            full.append((coords, x, w))
            full.append((-coords, -x, w))
        return cls(dim, atoms=full)

    def _check_symmetry(self):
        n = self.atom_x.size
        if n == 0:
            return
        used = np.zeros(n, dtype=bool)
        for i in range(n):
            if used[i]:
                continue
            target_dir = -self.atom_dirs[i]
            target_x = -self.atom_x[i]
            match = np.where(
                ~used
                & (np.abs(self.atom_x - target_x) <= 1e-12 * max(1.0, abs(target_x)))
                & (np.linalg.norm(self.atom_dirs - target_dir, axis=1) <= 1e-10)
                & (np.abs(self.atom_weights - self.atom_weights[i]) <= 1e-12 * self.atom_weights[i])
            )[0]
            match = match[match != i]
            if match.size == 0:
                raise ConfigError(
                    "atom list is not symmetric under (s, x) -> (-s, -x); "
                    "use JumpMeasure.from_half_atoms to symmetrize"
                )
            used[i] = used[match[0]] = True

    @property
    def is_zero(self) -> bool:
        if self.coupling == ATOMLIST:
            return self.atom_x.size == 0
        return self.directional.total_mass == 0.0

    def atom_bands(self) -> np.ndarray:
        return _band_of(np.abs(self.atom_x))

    def directional_pos_part(self, t) -> float:
        """Integral of max(<s, t>, 0) against the directional marginal (PRODUCT only)."""
        return self.directional.half_abs_integral(t)

    def max_band(self):
        """Largest band carrying mass, or None when every band does (infinite activity)."""
        if self.coupling == ATOMLIST:
            if self.atom_x.size == 0:
                return 0
            return int(self.atom_bands().max())
        if self.directional.total_mass == 0.0:
            return 0
        return self.radial.max_band()


def band_mass(nu: JumpMeasure, j: int) -> float:
    """Mass nu_j of the dyadic band j (j = 0 means |x| > 1)."""
    if j < 0:
        raise ConfigError("band index must be nonnegative")
    if nu.coupling == ATOMLIST:
        sel = nu.atom_bands() == j
        return float(nu.atom_weights[sel].sum())
    total = nu.directional.total_mass
    if total == 0.0:
        return 0.0
    return total * nu.radial.band_mass(j)


def second_moment_band(nu: JumpMeasure, j: int) -> float:
    """Integral of x^2 over sphere x band j."""
    if nu.coupling == ATOMLIST:
        sel = nu.atom_bands() == j
        return float((nu.atom_weights[sel] * nu.atom_x[sel] ** 2).sum())
    total = nu.directional.total_mass
    if total == 0.0:
        return 0.0
    return total * nu.radial.second_moment_band(j)


def check_levy_integrability(nu: JumpMeasure) -> None:
    """Raise IntegrabilityError unless nu_0 < inf and sum 2^-2j nu_j < inf."""
    nu0 = band_mass(nu, 0)
    if not math.isfinite(nu0):
        raise IntegrabilityError("mass of |x| > 1 is infinite", diverging_sum="nu_0")
    if nu.coupling == ATOMLIST:
        return  # finite lists always integrate (1 ^ x^2)
    radial = nu.radial
    if isinstance(radial, StableRadial):
        return  # alpha < 2 by construction
    if isinstance(radial, BandTableRadial) and radial._geom_b is not None:
        if radial._geom_b >= 2.0:
            raise IntegrabilityError(
                "sum over j of 2^-2j nu_j diverges under the geometric continuation "
                f"(fitted band growth rate {radial._geom_b:.3f} >= 2)",
                diverging_sum="sum 2^-2j nu_j",
            )


def index_beta(nu: JumpMeasure) -> float:
    """Activity index in [0, 2]: the infimum of gamma with x^gamma integrable near 0.

    Closed for stable families (the stability exponent) and zero for any finite
    measure.  For band tables it is read off the dyadic masses: the limsup of
    log2(nu_j) / j over the second half of the table plus the continuation rule,
    clamped to [0, 2], which is the Cauchy root test threshold for the sums
    sum_j 2^(-gamma j) nu_j.
    """
    check_levy_integrability(nu)
    if nu.coupling == ATOMLIST:
        return 0.0
    if nu.directional.total_mass == 0.0:
        return 0.0
    return min(max(nu.radial.index(), 0.0), 2.0)


def _chi_table_verdict(radial: BandTableRadial) -> bool:
    # Convergence of sum_j a_j with a_j = 2^-j (j nu_j)^(1/2), judged from the
    # in-table tail: fit log a_j ~ c + p log j + q j on the second half.  A
    # negative geometric rate q settles it; at q ~ 0 the harmonic comparison
    # p < -1 decides.  The extrapolation fit alone cannot be trusted here: a
    # slowly diverging table like nu_j = 2^2j / j^2 fits a growth rate below 2.
    if radial._geom_b is not None and radial._geom_b >= 2.0:
        return False
    j = np.arange(1, radial.table_size + 1, dtype=float)
    terms = np.array([2.0 ** (-jj) * math.sqrt(jj * radial.band_mass(int(jj))) for jj in j])
    half = radial.table_size // 2
    jj, aa = j[half:], terms[half:]
    pos = aa > 0.0
    if pos.sum() < 3:
        return bool(not pos.any()) or radial._geom_b is None
    design = np.column_stack([np.ones(pos.sum()), np.log(jj[pos]), jj[pos]])
    coef, *_ = np.linalg.lstsq(design, np.log(aa[pos]), rcond=None)
    _, p, q = coef
    if q < -1e-6:
        return True
    if q > 1e-6:
        return False
    return bool(p < -1.0)


def admissibility_chi(nu: JumpMeasure, j_max: int) -> tuple[float, bool]:
    """Partial sum of 2^-j (j nu_j)^(1/2) up to j_max, plus a convergence verdict.

    Any family with index below two is admissible, which settles every case
    except band tables with dyadic growth at the critical rate; those get a
    harmonic-type comparison of the tail terms (see _chi_table_verdict).
    """
    if j_max < 1:
        raise ConfigError("j_max must be at least 1")
    partial = 0.0
    for j in range(1, j_max + 1):
        nu_j = band_mass(nu, j)
        partial += 2.0 ** (-j) * math.sqrt(j * nu_j)
    if nu.coupling == ATOMLIST or nu.directional.total_mass == 0.0:
        return partial, True
    if isinstance(nu.radial, (StableRadial, FiniteAtomsRadial)):
        return partial, True
    return partial, _chi_table_verdict(nu.radial)


class PowerGauge:
    """Gauge r -> r^s (log 1/r)^b near zero, s in (0, 1]."""

    __slots__ = ("s", "b")

    def __init__(self, s: float, b: float = 0.0):
        s = float(s)
        if not 0.0 < s <= 1.0:
            raise ConfigError("gauge exponent must lie in (0, 1]")
        self.s = s
        self.b = float(b)

    def log2_value(self, log2_r: float) -> float:
        """log2 g(r) for r = 2^log2_r < 1."""
        return self.s * log2_r + self.b * math.log2(-log2_r * math.log(2.0))


def _gauge_sum_diverges(nu: JumpMeasure, g: PowerGauge, h: float, horizon: int = 400) -> bool:
    # Root test on the band sums T_j = g(2^(-j/h)) nu_j: divergent when the
    # dyadic growth rate of T_j is nonnegative along the tail.  The rate is a
    # least-squares slope over the tail, which cancels the slowly varying log
    # factor of the gauge (a plain log2(T_j)/j quotient would bias it by
    # b log2(j)/j at this horizon).
    js, logs = [], []
    for j in range(horizon // 2, horizon + 1):
        nu_j = band_mass(nu, j)
        if nu_j <= 0.0:
            continue
        js.append(float(j))
        logs.append(g.log2_value(-j / h) + math.log2(nu_j))
    if len(js) < 2:
        return False
    slope = np.polyfit(np.asarray(js), np.asarray(logs), 1)[0]
    return bool(slope >= -1e-9)


def gauge_exponent(nu: JumpMeasure, g: PowerGauge) -> float:
    """Critical regularity level of the gauge against the jump measure.

    The infimum of h > 0 at which integrating g(x^(1/h)) against nu diverges:
    s / index for a pure power gauge (infinite when the index vanishes), and a
    bisection on the defining band sums when a log correction is present.
    """
    beta = index_beta(nu)
    if g.b == 0.0:
        return math.inf if beta == 0.0 else g.s / beta
    if not _gauge_sum_diverges(nu, g, h=64.0):
        return math.inf
    lo, hi = 1e-6, 64.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _gauge_sum_diverges(nu, g, mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def theoretical_spectrum(triple: "CharTriple", h: float) -> float:
    """Predicted singularity spectrum D(h) of the configured field.

    Without a Gaussian part: d - 1 + beta h on [0, 1/beta], -inf above.  With a
    Gaussian part the Gaussian exponent 1/2 takes over: d - 1 + beta h below
    1/2, the full dimension d at 1/2, -inf above.
    """
    if h < 0.0:
        raise ConfigError("h must be nonnegative")
    beta = index_beta(triple.jump)
    if beta == 0.0:
        raise ConfigError(
            "spectrum formula needs a positive index; finite-mass jump measures "
            "are piecewise smooth (compound-Poisson regime) and carry no "
            "nontrivial spectrum"
        )
    d = triple.dim
    if triple.gaussian.is_zero:
        return d - 1.0 + beta * h if h <= 1.0 / beta else -math.inf
    if h < 0.5:
        return d - 1.0 + beta * h
    if h == 0.5:
        return float(d)
    return -math.inf


class CharTriple:
    """Drift vector, spherical Gaussian measure and hyperplane jump measure."""

    __slots__ = ("dim", "drift", "gaussian", "jump")

    def __init__(self, dim: int, drift=None, gaussian: SphericalMeasure | None = None,
                 jump: JumpMeasure | None = None):
        if dim not in (1, 2, 3):
            raise ConfigError(f"unsupported dimension {dim}")
        self.dim = dim
        drift = np.zeros(dim) if drift is None else np.asarray(drift, dtype=float).reshape(-1)
        if drift.size != dim:
            raise ConfigError("drift has the wrong dimension")
        drift.flags.writeable = False
        self.drift = drift
        self.gaussian = gaussian if gaussian is not None else SphericalMeasure(dim)
        self.jump = jump if jump is not None else JumpMeasure.zero(dim)
        if self.gaussian.dim != dim or self.jump.dim != dim:
            raise ConfigError("component dimensions disagree")


def _check_orthonormal(basis: np.ndarray, dim: int) -> np.ndarray:
    e = np.asarray(basis, dtype=float)
    if e.ndim != 2 or e.shape[1] != dim:
        raise ConfigError(f"basis must be a (d', {dim}) array of row vectors")
    d_prime = e.shape[0]
    if not 1 <= d_prime <= dim:
        raise ConfigError("basis size must lie between 1 and the ambient dimension")
    gram = e @ e.T
    if not np.allclose(gram, np.eye(d_prime), atol=ORTHONORMAL_TOL):
        raise ConfigError("basis vectors are not orthonormal within 1e-10")
    return e


def circle_half_atom_dirs(n: int) -> np.ndarray:
    """n half-atom directions spread uniformly over the half-circle."""
    theta = math.pi * (np.arange(n) + 0.5) / n
    return np.column_stack([np.cos(theta), np.sin(theta)])


def fibonacci_sphere_dirs(n: int) -> np.ndarray:
    """n quasi-uniform directions on the unit 2-sphere (golden-angle spiral)."""
    i = np.arange(n, dtype=float) + 0.5
    z = 1.0 - 2.0 * i / n
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = math.pi * (1.0 + math.sqrt(5.0)) * i
    pts = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def _discretize_isotropic(dim: int, mass: float, resolution: int | None):
    """Half-atoms approximating the uniform measure with the given total mass."""
    if dim == 1:
        return np.array([[1.0]]), np.array([mass / 2.0])
    if dim == 2:
        n = resolution or CIRCLE_HALF_ATOMS
        dirs = circle_half_atom_dirs(n)
    else:
        n = resolution or SPHERE_HALF_ATOMS
        dirs = fibonacci_sphere_dirs(n)
    return dirs, np.full(len(dirs), mass / (2.0 * len(dirs)))


def _project_atoms(dirs: np.ndarray, weights: np.ndarray, e: np.ndarray):
    """Push (s, w) atoms through s -> p(s)/|p(s)| with weight w |p(s)|."""
    if dirs.size == 0:
        return np.zeros((0, e.shape[0])), np.zeros(0)
    proj = dirs @ e.T
    norms = np.linalg.norm(proj, axis=1)
    keep = norms >= PROJECTION_DROP_TOL
    proj, norms, weights = proj[keep], norms[keep], weights[keep]
    return proj / norms[:, None], weights * norms


def trace_triple(triple: CharTriple, basis, *, sphere_resolution: int | None = None) -> CharTriple:
    """Characteristic triple of the field restricted to the span of the basis.

    The drift projects; directional measures push forward under
    s -> p(s)/|p(s)| with density weight |p(s)|, the radial part unchanged.
    When the basis spans the whole space the projection is an isometry, so
    isotropic components stay isotropic; for a strict subspace the isotropic
    part is discretized on a uniform angular grid (d=2) or a symmetrized
    Fibonacci sphere grid (d=3) before the pushforward.  Directions whose
    projection has norm below 1e-12 are dropped.
    """
    e = _check_orthonormal(basis, triple.dim)
    d_prime = e.shape[0]
    full_rank = d_prime == triple.dim

    drift = e @ triple.drift

    def push_spherical(m: SphericalMeasure) -> SphericalMeasure:
        dirs, weights = m.atom_dirs, m.atom_weights
        iso = m.isotropic_mass
        if iso > 0.0 and not full_rank:
            iso_dirs, iso_w = _discretize_isotropic(m.dim, iso, sphere_resolution)
            dirs = np.vstack([dirs, iso_dirs])
            weights = np.concatenate([weights, iso_w])
            iso = 0.0
        new_dirs, new_w = _project_atoms(dirs, weights, e)
        return SphericalMeasure(d_prime, iso, list(zip(new_dirs, new_w)))

    gaussian = push_spherical(triple.gaussian)

    jump = triple.jump
    if jump.coupling == ATOMLIST:
        if jump.atom_x.size == 0:
            new_jump = JumpMeasure.zero(d_prime)
        else:
            proj = jump.atom_dirs @ e.T
            norms = np.linalg.norm(proj, axis=1)
            keep = norms >= PROJECTION_DROP_TOL
            if not keep.any():
                new_jump = JumpMeasure.zero(d_prime)
            else:
                new_jump = JumpMeasure(
                    d_prime,
                    atoms=list(zip(proj[keep] / norms[keep, None],
                                   jump.atom_x[keep],
                                   jump.atom_weights[keep] * norms[keep])),
                )
    else:
        new_dir = push_spherical(jump.directional)
        if new_dir.total_mass == 0.0:
            new_jump = JumpMeasure.zero(d_prime)
        else:
            new_jump = JumpMeasure(d_prime, directional=new_dir, radial=jump.radial)

    return CharTriple(d_prime, drift, gaussian, new_jump)
