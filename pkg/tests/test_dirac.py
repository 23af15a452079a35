import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dhmpot.clifford_lattice import LatticeDomain, SpinStructure, all_spin_structures
from dhmpot.dirac import (DENSE_CAP, action, dirac_twisted, dirac_untwisted, dirichlet_energy,
                          real_pairing, twisted_dirac_apply)
from dhmpot.errors import ContractViolation, SizeCapExceeded
from dhmpot.fields import SpinorField, equator_map, random_sphere_map, random_tangent_spinor
from dhmpot.potentials import PotentialSpec


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2 ** 31), s=st.sampled_from(range(4)))
def test_twisted_dirac_symmetric_in_real_pairing(seed, s):
    dom = LatticeDomain(2, 8)
    spin = all_spin_structures(2)[s]
    rng = np.random.default_rng(seed)
    phi = random_sphere_map(dom, 3, rng)
    a = random_tangent_spinor(phi, spin, rng).values
    b = random_tangent_spinor(phi, spin, rng).values
    lhs = real_pairing(twisted_dirac_apply(a, phi, spin), b, dom)
    rhs = real_pairing(a, twisted_dirac_apply(b, phi, spin), dom)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)


def test_twisted_output_is_tangent_and_dense_matches_apply():
    dom = LatticeDomain(2, 4)
    rng = np.random.default_rng(3)
    phi = random_sphere_map(dom, 3, rng)
    spin = SpinStructure((0.5, 0.5))
    psi = random_tangent_spinor(phi, spin, rng).values
    out = twisted_dirac_apply(psi, phi, spin)
    assert np.allclose(np.einsum("...sq,...q->...s", out, phi.values), 0, atol=1e-12)
    op, apply = dirac_twisted(phi, spin)
    assert op.hermitian_defect() < 1e-12
    coords = op.from_field(psi)
    assert np.allclose(op.to_field(op.matrix @ coords), apply(psi), atol=1e-12)


def test_non_tangent_input_is_rejected():
    dom = LatticeDomain(2, 4)
    phi = equator_map(dom, 3)
    bad = np.ones(dom.shape + (2, 3), dtype=complex)
    with pytest.raises(ContractViolation):
        twisted_dirac_apply(bad, phi, SpinStructure((0, 0)))


def test_dense_cap():
    dom = LatticeDomain(2, 34)
    assert dom.num_sites * 2 > DENSE_CAP
    with pytest.raises(SizeCapExceeded):
        dirac_untwisted(dom, SpinStructure((0, 0)))
    op, apply = dirac_untwisted(dom, SpinStructure((0, 0)), dense=False)
    assert op is None and apply(np.zeros(dom.shape + (2,))).shape == dom.shape + (2,)


def test_equator_energy_and_action():
    dom = LatticeDomain(2, 8)
    eq = equator_map(dom, 3)
    assert dirichlet_energy(eq) == pytest.approx(4 * np.pi ** 2)
    psi = SpinorField.zeros(dom, SpinStructure((0, 0)), 3)
    assert action(eq, psi, PotentialSpec.zero()) == pytest.approx(4 * np.pi ** 2)
