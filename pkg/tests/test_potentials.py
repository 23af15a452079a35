import numpy as np
import pytest

from dhmpot import potentials as pot
from dhmpot.errors import ConfigurationError, DimensionError
from dhmpot.fields import flat_torus, sphere
from dhmpot.potentials import PotentialSpec, ScalarFunction


def _potentials(q):
    a = np.linspace(0.3, -0.4, q)
    return [
        PotentialSpec.zero(), PotentialSpec.curvature_v1(),
        PotentialSpec.superpotential_v2(ScalarFunction.linear(a)), PotentialSpec.mass_v3(0.7),
        PotentialSpec.exponential_v4(ScalarFunction.parse("sin:1")),
        PotentialSpec.structured(ScalarFunction.parse("cos:0"), ScalarFunction.linear(a), 4),
        PotentialSpec.map_only(ScalarFunction.parse("cos:2" if q > 2 else "cos:1")),
    ]


def _point(target, rng):
    y = rng.standard_normal(target.q)
    if target.is_sphere:
        y /= np.linalg.norm(y)
    psi = 0.5 * (rng.standard_normal((2, target.q)) + 1j * rng.standard_normal((2, target.q)))
    if target.is_sphere:
        psi = psi - np.einsum("sq,q->s", psi, y)[:, None] * y
    return y, psi


def _tangent(target, y, v):
    return v - (v @ y) * y if target.is_sphere else v


def _move(target, y, psi, t, eta):
    z = y + t * eta
    if target.is_sphere:
        z = z / np.linalg.norm(z)
        psi = psi - np.einsum("sq,q->s", psi, z)[:, None] * z
    return z, psi


@pytest.mark.parametrize("target", [sphere(3), flat_torus(2)], ids=["sphere", "torus"])
def test_derivatives_match_finite_differences(target):
    rng = np.random.default_rng(11)
    for V in _potentials(target.q):
        y, psi = _point(target, rng)
        eta = _tangent(target, y, rng.standard_normal(target.q))
        xi = rng.standard_normal(psi.shape) + 1j * rng.standard_normal(psi.shape)
        if target.is_sphere:
            xi = xi - np.einsum("sq,q->s", xi, y)[:, None] * y
        t = 1e-5
        f = lambda z, p: float(pot.eval_V(V, z, p, target))
        num_y = (f(*_move(target, y, psi, t, eta)) - f(*_move(target, y, psi, -t, eta))) / (2 * t)
        assert pot.grad_V(V, y, psi, target) @ eta == pytest.approx(num_y, rel=1e-6, abs=1e-8)
        num_p = (f(y, psi + t * xi) - f(y, psi - t * xi)) / (2 * t)
        ana_p = np.real(np.vdot(pot.grad_psi_V(V, y, psi, target), xi))
        assert ana_p == pytest.approx(num_p, rel=1e-6, abs=1e-8)


def test_quartic_contraction_is_real_and_vanishes_on_rank_one():
    rng = np.random.default_rng(0)
    psi = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
    assert abs(np.imag(pot.quartic_contraction(psi))) < 1e-12
    rank_one = np.outer([1.0, 2.0j], [0.3, 0.1, 0.0])
    assert abs(pot.quartic_contraction(rank_one)) < 1e-12


def test_spec_validation_and_roundtrip():
    with pytest.raises(ConfigurationError):
        PotentialSpec("bogus")
    with pytest.raises(ConfigurationError):
        PotentialSpec.mass_v3(-1.0)
    with pytest.raises(ConfigurationError):
        PotentialSpec.superpotential_v2(ScalarFunction.parse("cos:0"))
    with pytest.raises(ConfigurationError):
        PotentialSpec.structured(None, ScalarFunction.const(1.0), 3)
    with pytest.raises(DimensionError):
        ScalarFunction.linear([1.0, 2.0]).value(np.zeros(3))
    for V in _potentials(3):
        assert PotentialSpec.from_dict(V.to_dict()) == V


def test_growth_report_flags():
    y, samples = pot.growth_samples(sphere(3), 2, decades=2.0)
    rep = pot.growth_report(PotentialSpec.mass_v3(0.5), samples, y, sphere(3))
    assert rep.inconclusive
    y, samples = pot.growth_samples(sphere(3), 2, decades=3.0)
    rep = pot.growth_report(PotentialSpec.mass_v3(0.5), samples, y, sphere(3))
    assert rep.within_bounds and rep.grad.identically_zero
    rep = pot.growth_report(PotentialSpec.curvature_v1(), samples, y, sphere(3))
    assert rep.within_bounds
    s = PotentialSpec.structured(None, ScalarFunction.const(1.0), 6)
    rep = pot.growth_report(s, samples, y, sphere(3))
    assert rep.value.slope == pytest.approx(6, abs=0.1)


def _tangent_spinor(rng, y):
    psi = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
    return psi - np.einsum("sq,q->s", psi, y)[:, None] * y


def test_v1_matches_quadruple_loop_contraction():
    rng = np.random.default_rng(3)
    delta = np.eye(3)
    R = np.einsum("ac,bd->abcd", delta, delta) - np.einsum("ad,bc->abcd", delta, delta)
    for _ in range(10):
        y = rng.standard_normal(3)
        y /= np.linalg.norm(y)
        psi = _tangent_spinor(rng, y)
        P = np.einsum("sa,sc->ac", psi.conj(), psi)
        brute = 0.0
        for a, b, c, d in np.ndindex(3, 3, 3, 3):
            brute += R[a, b, c, d] * P[a, c] * P[b, d]
        value = pot.eval_V(PotentialSpec.curvature_v1(), y, psi, sphere(3))
        assert abs(np.imag(brute)) < 1e-12
        assert value == pytest.approx(np.real(brute) / 12, abs=1e-12)


def test_v1_homogeneity_and_structured_euler_identity():
    rng = np.random.default_rng(4)
    y = np.array([0.0, 0.6, 0.8])
    psi = _tangent_spinor(rng, y)
    V1 = PotentialSpec.curvature_v1()
    for t in (0.5, 2.0, -3.0):
        assert pot.eval_V(V1, y, t * psi, sphere(3)) == pytest.approx(
            t ** 4 * pot.eval_V(V1, y, psi, sphere(3)), rel=1e-13)
    for s in (2, 4, 6):
        V = PotentialSpec.structured(ScalarFunction.parse("cos:1"), ScalarFunction.linear([1, 2, 3]), s)
        lhs = np.real(np.vdot(psi, pot.grad_psi_V(V, y, psi, sphere(3))))
        rhs = s * (pot.eval_V(V, y, psi, sphere(3)) - V.H.value(y))
        assert lhs == pytest.approx(rhs, abs=1e-10)


def test_documented_gradient_examples():
    y = np.array([0.0, 0.0, 1.0])
    psi = _tangent_spinor(np.random.default_rng(5), y)
    V = PotentialSpec.map_only(ScalarFunction.linear([1.0, 0.0, 0.0]))
    assert np.allclose(pot.grad_V(V, y, psi, sphere(3)), [1.0, 0.0, 0.0])
    V3 = PotentialSpec.mass_v3(0.7)
    assert np.allclose(pot.grad_V(V3, y, psi, sphere(3)), 0.0)
    assert np.allclose(pot.grad_psi_V(V3, y, psi, sphere(3)), 0.7 * psi)
    for V in _potentials(3)[1:5]:
        assert np.allclose(pot.grad_psi_V(V, y, np.zeros((2, 3)), sphere(3)), 0.0)
