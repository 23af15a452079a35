"""Critical-point records: fields plus verification diagnostics."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dirac import action
from .errors import SizeCapExceeded
from .fields import MapField, SpinorField
from .io import RECORD_MAGIC, field_from_header, field_header, read_container, write_container
from .potentials import PotentialSpec
from .variational import (divergence_stress_energy, el_residual, jacobi_matrix,
                          stress_energy, trace_identity)

__all__ = ["CriticalPointRecord", "build_record", "save_record", "load_record",
           "stress_diagnostics"]


@dataclass
class CriticalPointRecord:
    phi: MapField
    psi: SpinorField
    potential: PotentialSpec
    map_residual_norm: float
    spinor_residual_norm: float
    action: float
    jacobi_lowest: list | None = None
    stress: dict = field(default_factory=dict)
    seed: int | None = None
    config_hash: str | None = None
    tolerances: dict = field(default_factory=dict)
    iterations: int = 0
    history: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def residual_norm(self):
        return max(self.map_residual_norm, self.spinor_residual_norm)

    def summary(self):
        """JSON-able scalar summary (no field data)."""
        return {
            "potential": self.potential.to_dict(),
            "map_residual_norm": self.map_residual_norm,
            "spinor_residual_norm": self.spinor_residual_norm,
            "action": self.action,
            "jacobi_lowest": self.jacobi_lowest,
            "stress": dict(self.stress),
            "seed": self.seed,
            "config_hash": self.config_hash,
            "tolerances": dict(self.tolerances),
            "iterations": self.iterations,
            "notes": list(self.notes),
        }


def stress_diagnostics(phi, psi, V):
    S = stress_energy(phi, psi, V)
    tr, expected = trace_identity(phi, psi, V)
    div = divergence_stress_energy(S)
    return {
        "symmetry_defect": S.symmetry_defect(),
        "trace_identity_error": float(np.max(np.abs(tr - expected))),
        "trace_sup": float(np.max(np.abs(tr))),
        "divergence_sup": float(np.max(np.abs(div))),
    }


def build_record(phi, psi, V, tolerance=1e-8, seed=None, config_hash=None,
                 jacobi=True, iterations=0, history=(), notes=()):
    """Assemble a record and its diagnostics for a verified critical point.

    The Jacobi summary (lowest ten eigenvalues) is computed when the residual
    is within ``tolerance`` and the dense size fits under the cap.
    """
    res = el_residual(phi, psi, V)
    notes = list(notes)
    lowest = None
    if jacobi and res.max_norm <= tolerance:
        try:
            J = jacobi_matrix(phi, psi, V, check=False)
            lowest = [float(v) for v in J.lowest(10)]
            notes.append(f"jacobi symmetry defect {J.symmetry_defect():.3e}")
        except SizeCapExceeded:
            notes.append("jacobi matrix above size cap; quadratic form only")
    return CriticalPointRecord(
        phi=phi, psi=psi, potential=V,
        map_residual_norm=res.map_norm, spinor_residual_norm=res.spinor_norm,
        action=action(phi, psi, V), jacobi_lowest=lowest,
        stress=stress_diagnostics(phi, psi, V), seed=seed, config_hash=config_hash,
        tolerances={"residual": tolerance}, iterations=int(iterations),
        history=[float(h) for h in history], notes=notes)


def save_record(path, rec: CriticalPointRecord):
    header = rec.summary()
    header["format"] = "dhm-record/1"
    header["history"] = rec.history
    header["phi"] = field_header(rec.phi)
    header["psi"] = field_header(rec.psi, rec.phi.target)
    write_container(path, RECORD_MAGIC, header,
                    [("phi", rec.phi.values), ("psi", rec.psi.values)])


def load_record(path):
    header, arrays = read_container(path, RECORD_MAGIC)
    phi = field_from_header(header["phi"], arrays["phi"])
    psi = field_from_header(header["psi"], arrays["psi"])
    return CriticalPointRecord(
        phi=phi, psi=psi, potential=PotentialSpec.from_dict(header["potential"]),
        map_residual_norm=header["map_residual_norm"],
        spinor_residual_norm=header["spinor_residual_norm"],
        action=header["action"], jacobi_lowest=header["jacobi_lowest"],
        stress=header["stress"], seed=header["seed"], config_hash=header["config_hash"],
        tolerances=header["tolerances"], iterations=header["iterations"],
        history=header["history"], notes=header["notes"])
