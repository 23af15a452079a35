import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dhmpot.clifford_lattice import LatticeDomain, SpinStructure
from dhmpot.dirac import differential
from dhmpot.errors import ConfigurationError, RetractionError
from dhmpot.fields import (SpinorField, TargetManifold, constant_map, equator_map, flat_torus,
                           identity_map, project_spinor_tangent, project_to_target,
                           project_vector_tangent, random_sphere_map, random_tangent_spinor,
                           sphere, tangent_frame)


def test_target_validation():
    with pytest.raises(ConfigurationError):
        TargetManifold("hyperbolic", 3)
    with pytest.raises(ConfigurationError):
        sphere(1)
    assert sphere(3).curvature == 1.0 and flat_torus(2).curvature == 0.0


def test_retraction_fails_near_origin():
    dom = LatticeDomain(2, 4)
    raw = np.ones(dom.shape + (3,))
    raw[2, 1] = 0.0
    with pytest.raises(RetractionError) as info:
        project_to_target(raw, sphere(3), dom)
    assert info.value.site == (2, 1)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 31), q=st.integers(2, 5))
def test_projections(seed, q):
    dom = LatticeDomain(2, 4)
    rng = np.random.default_rng(seed)
    phi = random_sphere_map(dom, q, rng)
    assert np.allclose(np.linalg.norm(phi.values, axis=-1), 1.0)
    v = rng.standard_normal(dom.shape + (q,))
    pv = project_vector_tangent(v, phi.values, phi.target)
    assert np.allclose(np.sum(pv * phi.values, axis=-1), 0, atol=1e-12)
    assert np.allclose(project_vector_tangent(pv, phi.values, phi.target), pv)
    E = tangent_frame(phi.values, phi.target)
    gram = np.einsum("...qa,...qb->...ab", E, E)
    assert np.allclose(gram, np.eye(q - 1), atol=1e-12)
    assert np.allclose(np.einsum("...qa,...q->...a", E, phi.values), 0, atol=1e-12)


def test_spinor_projection_is_tangent():
    dom = LatticeDomain(2, 4)
    rng = np.random.default_rng(0)
    phi = random_sphere_map(dom, 3, rng)
    spin = SpinStructure((0.0, 0.5))
    raw = rng.standard_normal(dom.shape + (2, 3)) + 1j * rng.standard_normal(dom.shape + (2, 3))
    p = project_spinor_tangent(raw, phi)
    assert np.allclose(np.einsum("...sq,...q->...s", p, phi.values), 0, atol=1e-12)
    psi = random_tangent_spinor(phi, spin, rng)
    assert psi.values.shape == dom.shape + (2, 3)


def test_spinor_shape_checks():
    dom = LatticeDomain(2, 4)
    with pytest.raises(ConfigurationError):
        SpinorField(dom, SpinStructure((0, 0)), np.zeros((4, 4, 3, 3)))
    with pytest.raises(ConfigurationError):
        SpinorField(dom, SpinStructure((0, 0, 0)), np.zeros((4, 4, 2, 3)))


def test_identity_map_has_unit_differential():
    dom = LatticeDomain(2, 8, 3.0)
    phi = identity_map(dom)
    d = differential(phi)
    assert np.allclose(d, (2 * np.pi / 3.0) * np.eye(2), atol=1e-12)
    assert np.allclose(phi.periodic_part(), 0, atol=1e-12)


def test_equator_and_constant_maps():
    dom = LatticeDomain(2, 8)
    eq = equator_map(dom, 3)
    assert np.allclose(np.linalg.norm(eq.values, axis=-1), 1)
    c = constant_map(dom, sphere(3), [0, 0, 2.0])
    assert np.allclose(c.values[..., 2], 1.0)
    assert np.allclose(differential(c), 0)
