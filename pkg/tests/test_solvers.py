import numpy as np
import pytest

from dhmpot.clifford_lattice import LatticeDomain, SpinStructure
from dhmpot.errors import ConfigurationError, ConstructionUnavailable, ConvergenceError
from dhmpot.fields import (bandlimited_field, constant_map, equator_map, identity_map,
                           random_sphere_map, sphere)
from dhmpot.potentials import PotentialSpec, ScalarFunction
from dhmpot.solvers import (FlowConfig, dirac_spectrum, flow_to_critical_point,
                            laplacian_max_eigenvalue, make_uncoupled, positivity_report,
                            select_eigenmode)


def test_lanczos_agrees_with_dense():
    dom = LatticeDomain(2, 8)
    phi = random_sphere_map(dom, 3, np.random.default_rng(2))
    spin = SpinStructure((0.5, 0.0))
    dense = dirac_spectrum(phi, spin, count=6)
    sparse = dirac_spectrum(phi, spin, count=6, dense=False)
    assert sparse.method == "lanczos" and not sparse.partial
    assert np.allclose(sparse.eigenvalues, dense.eigenvalues, atol=1e-9)
    assert np.max(sparse.residuals) < 1e-8
    assert sparse.orthonormality_defect < 1e-10
    with pytest.raises(ConfigurationError):
        dirac_spectrum(phi, spin, count=None, dense=False)


def test_constant_map_spectrum_is_doubled_untwisted():
    dom = LatticeDomain(2, 8)
    phi = constant_map(dom, sphere(3), [0, 0, 1])
    spec = dirac_spectrum(phi, SpinStructure((0, 0)))
    assert np.sum(np.abs(spec.eigenvalues) < 1e-10) == 4
    spec = dirac_spectrum(phi, SpinStructure((0.5, 0)), count=4)
    assert np.allclose(np.abs(spec.eigenvalues), 0.5)


def test_select_eigenmode():
    dom = LatticeDomain(2, 4)
    phi = constant_map(dom, sphere(3), [0, 0, 1])
    spec = dirac_spectrum(phi, SpinStructure((0.5, 0.5)))
    with pytest.raises(ConstructionUnavailable):
        select_eigenmode(spec, "kernel")
    lam, _ = select_eigenmode(spec, "lowest-positive")
    assert lam == pytest.approx(np.sqrt(0.5))
    with pytest.raises(ConfigurationError):
        select_eigenmode(spec, "largest")


def test_flow_step_bound_and_convergence():
    dom = LatticeDomain(2, 8)
    lmax = laplacian_max_eigenvalue(dom)
    with pytest.raises(ConfigurationError):
        FlowConfig(step=2.5 / lmax).resolved_step(dom)
    phi0 = identity_map(dom, 0.2 * bandlimited_field(dom, np.random.default_rng(0), 1, (2,),
                                                     real=True))
    rec = flow_to_critical_point(phi0, "zero", PotentialSpec.zero(), FlowConfig(tolerance=1e-9),
                                 SpinStructure((0, 0)), seed=0)
    assert rec.residual_norm <= 1e-9
    assert rec.history[-1] < rec.history[0]


def test_flow_reports_budget_exhaustion():
    dom = LatticeDomain(2, 8)
    phi0 = random_sphere_map(dom, 3, np.random.default_rng(1))
    with pytest.raises(ConvergenceError) as info:
        flow_to_critical_point(phi0, "zero", PotentialSpec.zero(), FlowConfig(max_iter=5),
                               SpinStructure((0, 0)))
    assert len(info.value.history) >= 5


def test_uncoupled_construction_rules():
    dom = LatticeDomain(2, 8)
    phi = random_sphere_map(dom, 3, np.random.default_rng(0))
    with pytest.raises(ConstructionUnavailable):
        make_uncoupled(phi, SpinStructure((0, 0)), "zero")
    eq = equator_map(dom, 3)
    with pytest.raises(ConstructionUnavailable):
        make_uncoupled(eq, SpinStructure((0, 0)), "kernel", PotentialSpec.curvature_v1())
    rec = make_uncoupled(eq, SpinStructure((0, 0)), "zero", PotentialSpec.curvature_v1())
    assert rec.residual_norm < 1e-10 and rec.jacobi_lowest is not None


def test_positivity_exponential_dominates():
    dom = LatticeDomain(2, 4)
    phi = constant_map(dom, sphere(3), [0, 0, 1])
    spec = dirac_spectrum(phi, SpinStructure((0.5, 0)))
    rep = positivity_report(spec, PotentialSpec.exponential_v4(ScalarFunction.const(0.0)), phi,
                            basis_cutoff=2)
    # -2 int V = 2 int exp(|psi|^2) overwhelms the spectral part upward
    assert rep.exp_dominates and rep.bounded_below
    trend = [v for _, v in rep.trend]
    assert trend[-1] > trend[-2] > trend[0]
