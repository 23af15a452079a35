"""Command-line interface.

``dhmpot SUBCOMMAND --config PATH [--out DIR] [--seed N] [--tolerance X] [--max-iter N]``

Each run writes ``records.jsonl`` (one JSON object per line, keys sorted;
the first line is a header with ``schema = "dhm-records/1"``) and a human
readable ``summary.txt`` into the output directory.  ``flow`` also stores
the critical point as ``critical_point.dhm``.  Exit codes: 0 success,
2 configuration or validation error (no output files are written), 3
solver non-convergence.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import potentials as pot
from .clifford_lattice import LatticeDomain, SpinStructure
from .config import load_config
from .diagnostics import (coupling_energy, morrey_norm, smallness_check, surrogate_norms,
                          _dphi_magnitude, _psi_magnitude)
from .errors import ConvergenceError, DhmError, NonCriticalPointError, SizeCapExceeded
from .fields import (SpinorField, TargetManifold, constant_map, equator_map, identity_map,
                     bandlimited_field, project_to_target, random_sphere_map)
from .records import load_record, save_record, stress_diagnostics
from .solvers import (FlowConfig, dirac_spectrum, flow_to_critical_point,
                      positivity_report, select_eigenmode, _dense_ok)
from .variational import (JACOBI_CAP, el_residual, extrinsic_system, jacobi_matrix,
                          second_variation)

__all__ = ["main", "SCHEMA_VERSION", "COMMANDS"]

SCHEMA_VERSION = "dhm-records/1"
COMMANDS = ("spectrum", "flow", "residual", "hessian", "stress", "morrey", "positivity", "report")

EXIT_OK, EXIT_VALIDATION, EXIT_CONVERGENCE = 0, 2, 3


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return obj


class _Output:
    def __init__(self):
        self.records = []
        self.summary = []

    def record(self, kind, **data):
        data["type"] = kind
        self.records.append(_clean(data))

    def line(self, text):
        self.summary.append(text)

    def write(self, out_dir, extra=None):
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "records.jsonl"), "w", encoding="utf-8") as fh:
            for rec in self.records:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
        with open(os.path.join(out_dir, "summary.txt"), "w", encoding="utf-8") as fh:
            fh.write("\n".join(self.summary) + "\n")
        if extra is not None:
            extra(out_dir)


# -- state construction ------------------------------------------------------

def _initial_map(cfg, domain, rng):
    target = TargetManifold(cfg.target_kind, cfg.q)
    if cfg.map_init == "equator":
        phi = equator_map(domain, cfg.q)
    elif cfg.map_init == "identity":
        phi = identity_map(domain)
    elif cfg.map_init == "random":
        if target.is_sphere:
            phi = random_sphere_map(domain, cfg.q, rng, max_wave=cfg.max_mode)
        else:
            vals = bandlimited_field(domain, rng, cfg.max_mode, (cfg.q,), real=True)
            phi = project_to_target(vals, target, domain)
    else:
        point = cfg.map_point
        if point is None:
            point = np.zeros(cfg.q)
            if target.is_sphere:
                point[-1] = 1.0
        phi = constant_map(domain, target, point)
    if cfg.perturbation:
        noise = cfg.perturbation * bandlimited_field(domain, rng, cfg.max_mode, (cfg.q,), real=True)
        phi = project_to_target(phi.values + noise, phi.target, domain, phi.winding)
    return phi


def _selector(cfg):
    recipe = cfg.spinor_recipe
    if recipe == "eigen":
        if cfg.potential is None or cfg.potential.kind != "v3":
            raise DhmError("recipe 'eigen' needs the mass potential (or use eigenvalue:<x>)")
        return f"eigenvalue:{cfg.potential.lam!r}"
    return recipe


def _state(cfg):
    """``(phi, psi, V, spin)`` from a stored record or from the config."""
    rng = np.random.default_rng(cfg.seed)
    if cfg.record:
        rec = load_record(cfg.record)
        V = cfg.potential if cfg.potential is not None else rec.potential
        return rec.phi, rec.psi, V, rec.psi.spin
    domain = LatticeDomain(cfg.dim, cfg.n, cfg.length)
    spin = SpinStructure(cfg.delta)
    phi = _initial_map(cfg, domain, rng)
    selector = _selector(cfg)
    if selector == "zero":
        psi = SpinorField.zeros(domain, spin, cfg.q)
    else:
        spec = dirac_spectrum(phi, spin, count=None if _dense_ok(phi) else max(cfg.count, 16))
        _, vals = select_eigenmode(spec, selector)
        psi = SpinorField(domain, spin, vals)
    return phi, psi, cfg.potential, spin


# -- subcommands -------------------------------------------------------------

def _cmd_spectrum(cfg, out):
    phi, _, _, spin = _state(cfg)
    spec = dirac_spectrum(phi, spin, count=cfg.count)
    for j, (lam, res) in enumerate(zip(spec.eigenvalues, spec.residuals)):
        out.record("eigenvalue", index=j, value=float(lam), residual=float(res))
    out.record("spectrum_summary", count=spec.converged, requested=spec.requested,
               method=spec.method, partial=spec.partial,
               max_residual=float(np.max(spec.residuals)) if spec.converged else 0.0,
               orthonormality_defect=spec.orthonormality_defect)
    out.line(f"twisted Dirac spectrum, spin structure {spin}, {spec.converged} eigenvalues "
             f"nearest zero ({spec.method})")
    out.line("eigenvalues: " + ", ".join(f"{v:.10g}" for v in spec.eigenvalues))
    return EXIT_OK, None


def _cmd_flow(cfg, out):
    phi, _, V, spin = _state_map_only(cfg)
    fc = FlowConfig(step=cfg.step, max_iter=cfg.max_iter, tolerance=cfg.tolerance,
                    spinor_mode=cfg.spinor_mode)
    try:
        rec = flow_to_critical_point(phi, _selector(cfg), V, fc, spin, seed=cfg.seed,
                                     config_hash=cfg.hash)
    except ConvergenceError as exc:
        out.record("flow_failure", message=str(exc), history=exc.history[-100:],
                   iterations=len(exc.history) - 1)
        out.line(f"flow did not converge: {exc}")
        return EXIT_CONVERGENCE, None
    out.record("critical_point", **rec.summary())
    out.line(f"flow converged after {rec.iterations} iterations")
    out.line(f"residual norms: map {rec.map_residual_norm:.3e}, spinor {rec.spinor_residual_norm:.3e}")
    out.line(f"action: {rec.action:.12g}")
    return EXIT_OK, lambda d: save_record(os.path.join(d, "critical_point.dhm"), rec)


def _state_map_only(cfg):
    if cfg.record:
        rec = load_record(cfg.record)
        V = cfg.potential if cfg.potential is not None else rec.potential
        return rec.phi, rec.psi, V, rec.psi.spin
    rng = np.random.default_rng(cfg.seed)
    domain = LatticeDomain(cfg.dim, cfg.n, cfg.length)
    return _initial_map(cfg, domain, rng), None, cfg.potential, SpinStructure(cfg.delta)


def _cmd_residual(cfg, out):
    phi, psi, V, _ = _state(cfg)
    res = el_residual(phi, psi, V)
    data = {"map_norm": res.map_norm, "spinor_norm": res.spinor_norm}
    if phi.target.is_sphere:
        ext = extrinsic_system(phi, psi, V)
        data.update(
            extrinsic_map_norm=ext.residual.map_norm,
            extrinsic_spinor_norm=ext.residual.spinor_norm,
            formulation_gap=float(max(
                np.max(np.abs(ext.residual.map_residual - res.map_residual)),
                np.max(np.abs(ext.residual.spinor_residual - res.spinor_residual)))),
            antisymmetry_defect=ext.antisymmetry_defect,
            omega_bound_constant=ext.omega_bound_constant,
            a_bound_constant=ext.a_bound_constant)
    out.record("residual", **data)
    out.line(f"EL residual norms: map {res.map_norm:.3e}, spinor {res.spinor_norm:.3e}")
    if "formulation_gap" in data:
        out.line(f"extrinsic vs intrinsic gap: {data['formulation_gap']:.3e}")
    return EXIT_OK, None


def _cmd_hessian(cfg, out):
    phi, psi, V, _ = _state(cfg)
    res = el_residual(phi, psi, V)
    if res.max_norm > cfg.tolerance:
        raise NonCriticalPointError(
            f"not a critical point: residual norms {res.map_norm:.3e}, {res.spinor_norm:.3e}")
    try:
        J = jacobi_matrix(phi, psi, V, check=False)
        ev = J.eigenvalues()
        out.record("jacobi", size=J.size, symmetry_defect=J.symmetry_defect(),
                   lowest=[float(v) for v in ev[:cfg.count]], negative_count=int(np.sum(ev < -1e-9)))
        out.line(f"Jacobi matrix of size {J.size}, symmetry defect {J.symmetry_defect():.2e}")
        out.line("lowest eigenvalues: " + ", ".join(f"{v:.8g}" for v in ev[:cfg.count]))
    except SizeCapExceeded:
        from .fields import random_tangent_spinor, random_tangent_vector
        rng = np.random.default_rng(cfg.seed)
        vals = []
        for _ in range(cfg.count):
            eta = random_tangent_vector(phi, rng)
            xi = random_tangent_spinor(phi, psi.spin, rng).values
            vals.append(second_variation(phi, psi, V, eta, xi, check=False))
        out.record("second_variation_samples", values=vals, cap=JACOBI_CAP)
        out.line(f"Jacobi matrix above cap {JACOBI_CAP}; sampled {len(vals)} quadratic-form values")
    return EXIT_OK, None


def _cmd_stress(cfg, out):
    phi, psi, V, _ = _state(cfg)
    diag = stress_diagnostics(phi, psi, V)
    res = el_residual(phi, psi, V)
    out.record("stress", residual_norm=res.max_norm, **diag)
    out.line(f"stress-energy: trace identity error {diag['trace_identity_error']:.3e}, "
             f"divergence sup {diag['divergence_sup']:.3e}, symmetry defect {diag['symmetry_defect']:.1e}")
    return EXIT_OK, None


def _cmd_morrey(cfg, out):
    phi, psi, V, _ = _state(cfg)
    dom = phi.domain
    mag = _dphi_magnitude(phi) if cfg.morrey_field == "dphi" else _psi_magnitude(psi.values)
    lam = dom.dim if cfg.morrey_lambda is None else cfg.morrey_lambda
    mn = morrey_norm(mag, dom, cfg.morrey_p, lam)
    out.record("morrey", field=cfg.morrey_field, **mn.to_dict())
    out.record("morrey_profile", radii=[float(r) for r in mn.radii],
               values=[float(v) ** (1 / mn.p) for v in mn.profile])
    out.line(f"Morrey norm M^({cfg.morrey_p:g},{lam:g}) of |{cfg.morrey_field}|: {mn.value:.10g} "
             f"(center {mn.center}, radius {mn.radius:.6g})")
    _, energy = coupling_energy(phi, psi)
    out.record("coupling_energy", integral=energy)
    s = V.s if V is not None and V.kind == "structured" else None
    out.record("surrogate_norms", **surrogate_norms(phi, psi, s))
    if cfg.epsilon is not None:
        rep = smallness_check(phi, psi, cfg.epsilon, s)
        out.record("smallness", **rep.to_dict())
        out.line(f"smallness at epsilon={cfg.epsilon:g}: full lattice total {rep.total:.6g}, "
                 f"largest radius satisfying it: {rep.largest_radius}")
    return EXIT_OK, None


def _cmd_positivity(cfg, out):
    phi, _, V, spin = _state_map_only(cfg)
    spec = dirac_spectrum(phi, spin, count=cfg.count)
    rep = positivity_report(spec, V, phi, cfg.cutoff, rng=np.random.default_rng(cfg.seed))
    out.record("positivity", **rep.to_dict())
    out.line(f"truncated positivity minimum: {rep.minimum:.10g} ({rep.method})")
    out.line("bounded below" if rep.bounded_below else "unbounded below along the minimising direction")
    return EXIT_OK, None


def _cmd_report(cfg, out):
    phi, psi, V, spin = _state(cfg)
    res = el_residual(phi, psi, V)
    out.record("residual", map_norm=res.map_norm, spinor_norm=res.spinor_norm)
    out.record("stress", **stress_diagnostics(phi, psi, V))
    spec = dirac_spectrum(phi, spin, count=cfg.count)
    out.record("spectrum", eigenvalues=[float(v) for v in spec.eigenvalues])
    y0, samples = pot.growth_samples(phi.target, phi.domain.dim,
                                     rng=np.random.default_rng(cfg.seed))
    growth = pot.growth_report(V, samples, y0, phi.target)
    out.record("growth", **growth.to_dict())
    eps = 0.1 if cfg.epsilon is None else cfg.epsilon
    s = V.s if V.kind == "structured" else None
    small = smallness_check(phi, psi, eps, s)
    out.record("smallness", **small.to_dict())
    dens, energy = coupling_energy(phi, psi)
    out.record("coupling_energy", integral=energy, sup=float(np.max(dens)))
    out.line(f"potential: {V.to_dict()}")
    out.line(f"EL residual norms: map {res.map_norm:.3e}, spinor {res.spinor_norm:.3e}")
    out.line("growth slopes (V, grad V, V_psi): " + ", ".join(
        "none" if v is None else f"{v:.3f}" for v in growth.slopes))
    if growth.super_polynomial:
        out.line("growth is super-polynomial")
    out.line(f"coupling energy: {energy:.10g}")
    return EXIT_OK, None


_HANDLERS = {
    "spectrum": _cmd_spectrum, "flow": _cmd_flow, "residual": _cmd_residual,
    "hessian": _cmd_hessian, "stress": _cmd_stress, "morrey": _cmd_morrey,
    "positivity": _cmd_positivity, "report": _cmd_report,
}


def _parser():
    p = argparse.ArgumentParser(prog="dhmpot", description="Dirac-harmonic maps with potential")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="run configuration file")
    p.add_argument("--out", help="output directory (overrides [output] dir)")
    p.add_argument("--seed", type=int, help="random seed (overrides [run] seed)")
    p.add_argument("--tolerance", type=float, help="residual tolerance")
    p.add_argument("--max-iter", type=int, help="flow iteration budget")
    return p


def main(argv=None):
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code else EXIT_OK
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
            cfg.raw.setdefault("run", {})["seed"] = str(args.seed)
        if args.tolerance is not None:
            if not args.tolerance > 0:
                raise DhmError("--tolerance must be positive")
            cfg.tolerance = args.tolerance
            cfg.raw.setdefault("solver", {})["tolerance"] = repr(args.tolerance)
        if args.max_iter is not None:
            if args.max_iter < 0:
                raise DhmError("--max-iter must be non-negative")
            cfg.max_iter = args.max_iter
            cfg.raw.setdefault("solver", {})["max_iter"] = str(args.max_iter)
        if cfg.potential is None and not cfg.record:
            raise DhmError("missing required key [potential] kind")
        out_dir = args.out or cfg.output_dir
        out = _Output()
        out.record("header", schema=SCHEMA_VERSION, command=args.command,
                   config_hash=cfg.hash, seed=cfg.seed)
        code, extra = _HANDLERS[args.command](cfg, out)
    except DhmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    out.write(out_dir, extra)
    return code


def main_exit():
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
