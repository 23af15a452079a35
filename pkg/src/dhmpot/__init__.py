"""Discrete Dirac-harmonic maps with potential on periodic lattices."""
from .clifford_lattice import (LatticeDomain, SpinStructure, all_spin_structures, laplacian,
                               make_clifford, spectral_derivative)
from .diagnostics import coupling_energy, morrey_norm, smallness_check
from .dirac import action, dirac_twisted, dirac_untwisted, twisted_dirac_apply
from .errors import *  # noqa: F401,F403
from .fields import (MapField, SpinorField, TargetManifold, constant_map, equator_map,
                     flat_torus, identity_map, sphere)
from .potentials import PotentialSpec, ScalarFunction, growth_report
from .records import CriticalPointRecord, load_record, save_record
from .solvers import (FlowConfig, dirac_spectrum, flow_to_critical_point, make_uncoupled,
                      positivity_report)
from .variational import (el_residual, extrinsic_system, jacobi_matrix, second_variation,
                          stress_energy)

__version__ = "0.1.0"
