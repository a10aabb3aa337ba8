"""Plain-text experiment configuration: parsing, canonical serialization and
content fingerprints.

The format is INI-style with sections [triple], [grid], [sim], [analysis],
[outputs].  Serialization is canonical (fixed key order, shortest round-trip
float repr), so serialize(parse(text)) is a fixed point and fingerprints are
stable byte hashes of section text.  Reproducibility inputs (seed, domain
radius A, truncation depth) have no defaults and must be spelled out.
"""

from __future__ import annotations

import configparser
import hashlib
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .grid import GridSpec
from .measures import (ATOMLIST, BandTableRadial, CharTriple, FiniteAtomsRadial,
                       JumpMeasure, SphericalMeasure, StableRadial)


@dataclass
class SimSettings:
    domain_radius: float
    j_trunc: int
    seed: int
    replicas: int = 1000


@dataclass
class AnalysisSettings:
    k_min: int = 2
    k_max: int | None = None
    h_max: float = 2.0
    bins: int = 8
    delta_h: float = 0.1
    j_floor: int | None = None
    alpha_cap: float | None = None

    def bin_centers(self) -> np.ndarray:
        return self.delta_h * (2 * np.arange(self.bins) + 1)


@dataclass
class ExperimentConfig:
    triple: CharTriple
    grid: GridSpec
    sim: SimSettings
    analysis: AnalysisSettings
    outputs_dir: str = "out"


def _fmt(x: float) -> str:
    return repr(float(x))


def _fmt_vec(v) -> str:
    return " ".join(_fmt(c) for c in np.asarray(v, dtype=float).reshape(-1))


def _parse_floats(text: str) -> list[float]:
    return [float(tok) for tok in text.split()]


def _fmt_entries(entries) -> str:
    return " ; ".join(" : ".join(part) for part in entries)


def _parse_entries(text: str) -> list[list[str]]:
    text = text.strip()
    if not text:
        return []
    return [[p.strip() for p in entry.split(":")] for entry in text.split(";")]


# ---- triple section ---------------------------------------------------------


def serialize_triple_section(triple: CharTriple) -> str:
    lines = ["[triple]"]
    lines.append(f"dim = {triple.dim}")
    lines.append(f"drift = {_fmt_vec(triple.drift)}")
    g = triple.gaussian
    lines.append(f"gaussian.isotropic_mass = {_fmt(g.isotropic_mass)}")
    entries = [[_fmt_vec(g.atom_dirs[i]), _fmt(g.atom_weights[i])]
               for i in range(g.atom_weights.size)]
    lines.append(f"gaussian.atoms = {_fmt_entries(entries)}")
    nu = triple.jump
    if nu.is_zero:
        lines.append("jump.coupling = none")
    elif nu.coupling == ATOMLIST:
        lines.append("jump.coupling = atomlist")
        entries = [[_fmt_vec(nu.atom_dirs[i]), _fmt(nu.atom_x[i]), _fmt(nu.atom_weights[i])]
                   for i in range(nu.atom_x.size)]
        lines.append(f"jump.atoms = {_fmt_entries(entries)}")
    else:
        lines.append("jump.coupling = product")
        lines.append(f"jump.directional.isotropic_mass = {_fmt(nu.directional.isotropic_mass)}")
        entries = [[_fmt_vec(nu.directional.atom_dirs[i]), _fmt(nu.directional.atom_weights[i])]
                   for i in range(nu.directional.atom_weights.size)]
        lines.append(f"jump.directional.atoms = {_fmt_entries(entries)}")
        radial = nu.radial
        lines.append(f"jump.radial.kind = {radial.kind}")
        if isinstance(radial, StableRadial):
            lines.append(f"jump.radial.alpha = {_fmt(radial.alpha)}")
            lines.append(f"jump.radial.scale = {_fmt(radial.scale)}")
        elif isinstance(radial, FiniteAtomsRadial):
            entries = [[_fmt(radial.magnitudes[i]), _fmt(radial.weights[i])]
                       for i in range(radial.weights.size)]
            lines.append(f"jump.radial.atoms = {_fmt_entries(entries)}")
        else:
            lines.append(f"jump.radial.nu0 = {_fmt(radial.nu0)}")
            lines.append(f"jump.radial.nu = {_fmt_vec(radial.nu)}")
            lines.append(f"jump.radial.continuation = {radial.continuation}")
    return "\n".join(lines) + "\n"


def _parse_triple_section(sec) -> CharTriple:
    try:
        dim = int(sec["dim"])
        drift = _parse_floats(sec["drift"])
        iso = float(sec.get("gaussian.isotropic_mass", "0"))
        atoms = [(np.asarray(_parse_floats(e[0])), float(e[1]))
                 for e in _parse_entries(sec.get("gaussian.atoms", ""))]
        gaussian = SphericalMeasure(dim, iso, atoms)
        coupling = sec.get("jump.coupling", "none").strip()
        if coupling == "none":
            jump = JumpMeasure.zero(dim)
        elif coupling == "atomlist":
            entries = _parse_entries(sec.get("jump.atoms", ""))
            jump = JumpMeasure(dim, atoms=[
                (np.asarray(_parse_floats(e[0])), float(e[1]), float(e[2]))
                for e in entries])
        elif coupling == "product":
            d_iso = float(sec.get("jump.directional.isotropic_mass", "0"))
            d_atoms = [(np.asarray(_parse_floats(e[0])), float(e[1]))
                       for e in _parse_entries(sec.get("jump.directional.atoms", ""))]
            directional = SphericalMeasure(dim, d_iso, d_atoms)
            kind = sec["jump.radial.kind"].strip()
            if kind == "stable":
                radial = StableRadial(float(sec["jump.radial.alpha"]),
                                      float(sec.get("jump.radial.scale", "1.0")))
            elif kind == "atoms":
                radial = FiniteAtomsRadial([
                    (float(e[0]), float(e[1]))
                    for e in _parse_entries(sec["jump.radial.atoms"])])
            elif kind == "bandtable":
                radial = BandTableRadial(float(sec["jump.radial.nu0"]),
                                         _parse_floats(sec["jump.radial.nu"]),
                                         sec.get("jump.radial.continuation", "geometric").strip())
            else:
                raise ConfigError(f"unknown radial kind {kind!r}")
            jump = JumpMeasure(dim, directional=directional, radial=radial)
        else:
            raise ConfigError(f"unknown jump coupling {coupling!r}")
        return CharTriple(dim, drift, gaussian, jump)
    except (KeyError, ValueError, IndexError) as exc:
        raise ConfigError(f"bad triple section: {exc}") from exc


def fingerprint_triple(triple: CharTriple) -> str:
    return hashlib.sha256(serialize_triple_section(triple).encode()).hexdigest()[:16]


def fingerprint_jump(triple: CharTriple) -> str:
    text = serialize_triple_section(triple)
    jump_lines = [ln for ln in text.splitlines() if ln.startswith("jump.")]
    payload = f"dim = {triple.dim}\n" + "\n".join(jump_lines)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


# ---- full config ------------------------------------------------------------


def serialize_config(cfg: ExperimentConfig) -> str:
    out = io.StringIO()
    out.write(serialize_triple_section(cfg.triple))
    out.write("\n[grid]\n")
    out.write(f"min = {_fmt_vec(cfg.grid.mins)}\n")
    out.write(f"max = {_fmt_vec(cfg.grid.maxs)}\n")
    out.write("count = " + " ".join(str(c) for c in cfg.grid.counts) + "\n")
    out.write("\n[sim]\n")
    out.write(f"A = {_fmt(cfg.sim.domain_radius)}\n")
    out.write(f"J_trunc = {cfg.sim.j_trunc}\n")
    out.write(f"seed = {cfg.sim.seed}\n")
    out.write(f"replicas = {cfg.sim.replicas}\n")
    a = cfg.analysis
    out.write("\n[analysis]\n")
    out.write(f"k_min = {a.k_min}\n")
    out.write("k_max = " + ("auto" if a.k_max is None else str(a.k_max)) + "\n")
    out.write(f"h_max = {_fmt(a.h_max)}\n")
    out.write(f"bins = {a.bins}\n")
    out.write(f"delta_h = {_fmt(a.delta_h)}\n")
    out.write("j_floor = " + ("auto" if a.j_floor is None else str(a.j_floor)) + "\n")
    out.write("alpha_cap = " + ("none" if a.alpha_cap is None else _fmt(a.alpha_cap)) + "\n")
    out.write("\n[outputs]\n")
    out.write(f"dir = {cfg.outputs_dir}\n")
    return out.getvalue()


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    for section in ("triple", "grid", "sim"):
        if not parser.has_section(section):
            raise ConfigError(f"missing [{section}] section")
    triple = _parse_triple_section(parser["triple"])
    gsec = parser["grid"]
    try:
        grid = GridSpec(tuple(_parse_floats(gsec["min"])),
                        tuple(_parse_floats(gsec["max"])),
                        tuple(int(v) for v in gsec["count"].split()))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad grid section: {exc}") from exc
    if grid.dim != triple.dim:
        raise ConfigError("grid and triple dimensions disagree")
    ssec = parser["sim"]
    for key in ("A", "J_trunc", "seed"):
        if key not in ssec:
            raise ConfigError(f"[sim] must set {key} explicitly; reproducibility "
                              "settings have no defaults")
    try:
        sim = SimSettings(float(ssec["A"]), int(ssec["J_trunc"]), int(ssec["seed"]),
                          int(ssec.get("replicas", "1000")))
    except ValueError as exc:
        raise ConfigError(f"bad sim section: {exc}") from exc
    if sim.domain_radius <= 0.0:
        raise ConfigError("A must be positive")
    if grid.max_norm() > sim.domain_radius + 1e-12:
        raise ConfigError("grid does not fit in the ball of radius A")
    analysis = AnalysisSettings()
    if parser.has_section("analysis"):
        asec = parser["analysis"]

        def opt_int(key):
            raw = asec.get(key, "auto").strip()
            return None if raw == "auto" else int(raw)

        try:
            analysis = AnalysisSettings(
                k_min=int(asec.get("k_min", "2")),
                k_max=opt_int("k_max"),
                h_max=float(asec.get("h_max", "2.0")),
                bins=int(asec.get("bins", "8")),
                delta_h=float(asec.get("delta_h", "0.1")),
                j_floor=opt_int("j_floor"),
                alpha_cap=(None if asec.get("alpha_cap", "none").strip() == "none"
                           else float(asec["alpha_cap"])),
            )
        except ValueError as exc:
            raise ConfigError(f"bad analysis section: {exc}") from exc
    outputs_dir = "out"
    if parser.has_section("outputs"):
        outputs_dir = parser["outputs"].get("dir", "out").strip()
    cfg = ExperimentConfig(triple, grid, sim, analysis, outputs_dir)
    if not math.isfinite(sim.domain_radius):
        raise ConfigError("A must be finite")
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
