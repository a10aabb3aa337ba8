"""Command-line orchestration: simulate / analyze / trace / validate-cf / report.

Every run is driven by a plain-text config and a seed; identical config and
seed produce byte-identical artifacts.  Exit codes: 0 success, 2 config error,
3 numeric failure, 4 fingerprint mismatch between combined artifacts.  Errors
are emitted as one-line JSON on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .analysis import (approx_exponent_map, exponent_agreement, holder_map,
                       spectrum_estimate, write_approx_csv, write_holder_csv,
                       write_spectrum_csv)
from .config import (ExperimentConfig, fingerprint_jump, fingerprint_triple,
                     load_config, serialize_config, serialize_triple_section)
from .errors import (ConfigError, FingerprintMismatchError, LevyFieldError,
                     NumericError)
from .gaussian import GaussianSampler
from .grid import FieldSample, read_field_csv, write_field_csv
from .jumps import (cf_validate, compensator_table, evaluate_jump_field,
                    read_atoms_csv, sample_atoms, write_atoms_csv)
from .measures import index_beta, theoretical_spectrum, trace_triple

EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_FINGERPRINT = 4


def _write_json(path, payload) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _simulate_fields(cfg: ExperimentConfig, which: str, seed: int):
    """Field sample (and atom set for jump parts) for one component choice."""
    triple = cfg.triple
    fp = fingerprint_triple(triple)
    grid = cfg.grid
    atoms = None
    values = np.zeros(grid.n_points)
    if which in ("jump", "combined") and not triple.jump.is_zero:
        atoms = sample_atoms(triple.jump, cfg.sim.domain_radius, cfg.sim.j_trunc,
                             seed, fingerprint_jump(triple))
        comp = compensator_table(triple.jump, cfg.sim.j_trunc)
        values = values + evaluate_jump_field(atoms, comp, grid).values
    if which in ("gaussian", "combined") and not triple.gaussian.is_zero:
        values = values + GaussianSampler(triple.gaussian, grid).sample(seed).values
    if which == "combined":
        values = values + grid.points() @ triple.drift
    return FieldSample(grid, values, which, seed, fp), atoms


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    seed = cfg.sim.seed if args.seed is None else args.seed
    out = Path(args.out or cfg.outputs_dir)
    out.mkdir(parents=True, exist_ok=True)
    sample, atoms = _simulate_fields(cfg, args.which, seed)
    write_field_csv(sample, out / f"{args.which}_field.csv")
    if atoms is not None:
        write_atoms_csv(atoms, out / "atoms.csv")
    return 0


def cmd_analyze(args) -> int:
    cfg = load_config(args.config)
    out = Path(args.out or cfg.outputs_dir)
    out.mkdir(parents=True, exist_ok=True)
    sample = read_field_csv(args.sample)
    triple_fp = fingerprint_triple(cfg.triple)
    if sample.triple_fingerprint != triple_fp:
        raise FingerprintMismatchError(
            f"sample was built from triple {sample.triple_fingerprint}, "
            f"config says {triple_fp}")
    a = cfg.analysis
    hm = holder_map(sample, a.k_min, a.k_max, a.h_max)
    write_holder_csv(hm, out / "holder.csv")
    centers = a.bin_centers()
    est = spectrum_estimate(sample, centers, a.delta_h, a.k_min, a.k_max)
    write_spectrum_csv(est, out / "spectrum.csv")
    summary: dict = {
        "holder_median": (None if hm.ok_exponents().size == 0
                          else float(np.median(hm.ok_exponents()))),
        "saturated_fraction": float((hm.flags != 0).mean()),
    }
    try:
        beta = index_beta(cfg.triple.jump)
    except LevyFieldError:
        beta = None
    if beta and beta > 0.0:
        summary["beta_used"] = beta
        summary["theoretical_curve_points"] = [
            [float(h), theoretical_spectrum(cfg.triple, float(h))]
            for h in centers if theoretical_spectrum(cfg.triple, float(h)) > -math.inf
        ]
    else:
        summary["beta_used"] = 0.0
        summary["theoretical_curve_points"] = []
    if args.atoms:
        atoms = read_atoms_csv(args.atoms)
        jump_fp = fingerprint_jump(cfg.triple)
        if atoms.jump_measure_fingerprint != jump_fp:
            raise FingerprintMismatchError(
                f"atom set was sampled from jump measure "
                f"{atoms.jump_measure_fingerprint}, config says {jump_fp}")
        am = approx_exponent_map(atoms, sample.grid, a.j_floor, a.alpha_cap)
        write_approx_csv(am, out / "approx.csv", out / "approx_band_minima.csv")
        combined = sample.component_tag == "combined" and not cfg.triple.gaussian.is_zero
        agreement = exponent_agreement(hm, am, combined=combined)
        _write_json(out / "agreement.json", agreement.to_dict())
        summary["agreement_stats"] = agreement.to_dict()
        finite = am.a_hat[np.isfinite(am.a_hat)]
        summary["approx_median"] = None if finite.size == 0 else float(np.median(finite))
    _write_json(out / "spectrum_summary.json", summary)
    return 0


def _parse_basis(text: str) -> np.ndarray:
    rows = [r for r in text.split(";") if r.strip()]
    return np.array([[float(v) for v in r.split(",")] for r in rows])


def cmd_trace(args) -> int:
    cfg = load_config(args.config)
    basis = _parse_basis(args.basis)
    traced = trace_triple(cfg.triple, basis)
    out = Path(args.out or cfg.outputs_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "traced_triple.cfg", "w", newline="\n") as fh:
        fh.write(serialize_triple_section(traced))
    beta_orig = index_beta(cfg.triple.jump)
    beta_trace = index_beta(traced.jump)
    _write_json(out / "trace_report.json", {
        "beta_original": beta_orig,
        "beta_trace": beta_trace,
        "beta_trace_leq_original": bool(beta_trace <= beta_orig + 1e-12),
        "trace_dim": int(basis.shape[0]),
    })
    return 0


def cmd_validate_cf(args) -> int:
    cfg = load_config(args.config)
    if cfg.triple.jump.is_zero:
        raise ConfigError("validate-cf needs a nonzero jump measure")
    t = np.array([float(v) for v in args.t.split()])
    thetas = np.linspace(-args.theta_max, args.theta_max, args.theta_points)
    seed = cfg.sim.seed if args.seed is None else args.seed
    j_trunc = args.j_trunc if args.j_trunc is not None else min(cfg.sim.j_trunc, 12)
    report = cf_validate(cfg.triple.jump, t, thetas, cfg.sim.replicas, seed,
                         j_trunc=j_trunc, domain_radius=cfg.sim.domain_radius)
    out = Path(args.out or cfg.outputs_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "cf_report.csv", "w", newline="\n") as fh:
        fh.write("theta,an_re,an_im,emp_re,emp_im,stderr\n")
        for i, th in enumerate(report.theta):
            fh.write(",".join(repr(float(v)) for v in (
                th, report.analytic[i].real, report.analytic[i].imag,
                report.empirical[i].real, report.empirical[i].imag,
                report.stderr)) + "\n")
    _write_json(out / "cf_summary.json", {
        "max_abs_error": report.max_abs_error(),
        "fraction_within_4_stderr": report.fraction_within(4.0),
        "replicas": report.replicas,
        "j_trunc": report.j_trunc,
    })
    return 0


def cmd_report(args) -> int:
    out = Path(args.out)
    digest = {}
    for name in ("spectrum_summary.json", "agreement.json", "cf_summary.json",
                 "trace_report.json"):
        path = out / name
        if path.exists():
            with open(path) as fh:
                digest[name] = json.load(fh)
    for csv_name in ("gaussian_field", "jump_field", "combined_field"):
        side = out / f"{csv_name}.json"
        if side.exists():
            with open(side) as fh:
                meta = json.load(fh)
            digest[csv_name] = {"seed": meta["seed"],
                                "triple_fingerprint": meta["triple_fingerprint"]}
    _write_json(out / "report.json", digest)
    sys.stdout.write(json.dumps(digest, indent=2, sort_keys=True) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="levyfield",
        description="Simulate and analyze hyperplane-jump random fields")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="sample a field component on the config grid")
    sim.add_argument("--config", required=True)
    sim.add_argument("--out", default=None)
    sim.add_argument("--which", choices=("gaussian", "jump", "combined"),
                     default="combined")
    sim.add_argument("--seed", type=int, default=None)
    sim.set_defaults(func=cmd_simulate)

    ana = sub.add_parser("analyze", help="exponent maps and spectrum from a field CSV")
    ana.add_argument("--config", required=True)
    ana.add_argument("--out", default=None)
    ana.add_argument("--sample", required=True)
    ana.add_argument("--atoms", default=None)
    ana.set_defaults(func=cmd_analyze)

    tra = sub.add_parser("trace", help="characteristic triple of a subspace restriction")
    tra.add_argument("--config", required=True)
    tra.add_argument("--out", default=None)
    tra.add_argument("--basis", required=True,
                     help="orthonormal rows, e.g. '0.6,0.8' or '1,0,0;0,1,0'")
    tra.set_defaults(func=cmd_trace)

    cf = sub.add_parser("validate-cf", help="empirical vs analytic marginal law at a point")
    cf.add_argument("--config", required=True)
    cf.add_argument("--out", default=None)
    cf.add_argument("--t", required=True, help="evaluation point, e.g. '1 0'")
    cf.add_argument("--theta-max", type=float, default=5.0)
    cf.add_argument("--theta-points", type=int, default=41)
    cf.add_argument("--j-trunc", type=int, default=None)
    cf.add_argument("--seed", type=int, default=None)
    cf.set_defaults(func=cmd_validate_cf)

    rep = sub.add_parser("report", help="digest the artifacts in an output directory")
    rep.add_argument("--out", required=True)
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FingerprintMismatchError as exc:
        _emit_error(exc)
        return EXIT_FINGERPRINT
    except NumericError as exc:
        _emit_error(exc)
        return EXIT_NUMERIC
    except (ConfigError, LevyFieldError, ValueError) as exc:
        _emit_error(exc)
        return EXIT_CONFIG


def _emit_error(exc: Exception) -> None:
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")


if __name__ == "__main__":
    sys.exit(main())
