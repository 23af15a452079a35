import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dhmpot.clifford_lattice import LatticeDomain, SpinStructure
from dhmpot.diagnostics import (coupling_energy, covering_radius, morrey_norm, morrey_profile,
                                smallness_check, surrogate_norms)
from dhmpot.errors import ConfigurationError
from dhmpot.fields import SpinorField, constant_map, equator_map, random_sphere_map, sphere


def test_covering_radius():
    dom = LatticeDomain(2, 8, 2.0)
    assert covering_radius(dom) == pytest.approx(np.sqrt(2.0))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 31), c=st.floats(0.1, 10), shift=st.integers(0, 7))
def test_morrey_homogeneous_and_translation_invariant(seed, c, shift):
    dom = LatticeDomain(2, 8)
    f = np.random.default_rng(seed).standard_normal(dom.shape)
    base = morrey_norm(f, dom, 2, 1.0)
    assert morrey_norm(c * f, dom, 2, 1.0).value == pytest.approx(c * base.value, rel=1e-12)
    moved = morrey_norm(np.roll(f, shift, axis=0), dom, 2, 1.0)
    assert moved.value == pytest.approx(base.value, rel=1e-12)


def test_morrey_validation_and_profile():
    dom = LatticeDomain(2, 8)
    f = np.ones(dom.shape)
    with pytest.raises(ConfigurationError):
        morrey_norm(f, dom, 0.5, 1.0)
    with pytest.raises(ConfigurationError):
        morrey_norm(f, dom, 2, 3.0)
    assert morrey_norm(f, dom, 2, 3.0, allow_supercritical=True).value > 0
    with pytest.raises(ConfigurationError):
        morrey_norm(np.ones((4, 4)), dom, 2, 2)
    mn = morrey_norm(f, dom, 2, 1.0)
    assert morrey_profile(mn, 0.0) == 0.0
    assert morrey_profile(mn, 1e9) == pytest.approx(mn.value)


def test_smallness_table():
    dom = LatticeDomain(2, 16)
    phi = constant_map(dom, sphere(3), [0, 0, 1])
    psi = SpinorField.zeros(dom, SpinStructure((0, 0)), 3)
    rep = smallness_check(phi, psi, 0.1)
    assert rep.total == 0.0 and rep.satisfied_full
    assert rep.largest_radius == rep.table[0]["radius"]
    eq = equator_map(dom, 3)
    rep = smallness_check(eq, psi, 1.0, s=6)
    radii = [row["radius"] for row in rep.table]
    assert radii == sorted(radii, reverse=True)
    totals = [row["total"] for row in rep.table]
    assert totals == sorted(totals, reverse=True)
    assert rep.extra_psi_norm == 0.0
    with pytest.raises(ConfigurationError):
        smallness_check(eq, psi, 0.0)


def test_energy_monitors():
    dom = LatticeDomain(2, 8)
    eq = equator_map(dom, 3)
    psi = SpinorField.zeros(dom, SpinStructure((0, 0)), 3)
    _, energy = coupling_energy(eq, psi)
    assert energy == pytest.approx(4 * np.pi ** 2)
    norms = surrogate_norms(random_sphere_map(dom, 3, np.random.default_rng(0)), psi, s=6)
    assert norms["t"] == 6 and norms["psi_Lt"] == 0.0 and norms["phi_W12"] > 0


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 31), lam=st.sampled_from([0.5, 1.0, 2.0]))
def test_morrey_monotone(seed, lam):
    dom = LatticeDomain(2, 8)
    rng = np.random.default_rng(seed)
    g = np.abs(rng.standard_normal(dom.shape))
    f = g * rng.uniform(0, 1, dom.shape)
    assert morrey_norm(f, dom, 2, lam).value <= morrey_norm(g, dom, 2, lam).value
