import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dhmpot.clifford_lattice import (LatticeDomain, SpinStructure, all_spin_structures,
                                     central_difference_derivative, laplacian, lattice_inner,
                                     make_clifford, spectral_derivative)
from dhmpot.errors import ConfigurationError, DimensionError


def test_domain_validation():
    with pytest.raises(DimensionError):
        LatticeDomain(4, 8)
    with pytest.raises(ConfigurationError):
        LatticeDomain(2, 7)
    with pytest.raises(ConfigurationError):
        LatticeDomain(2, 2)
    with pytest.raises(ConfigurationError):
        LatticeDomain(2, 8, -1.0)
    dom = LatticeDomain(3, (4, 6, 8), (1.0, 2.0, 3.0))
    assert dom.num_sites == 4 * 6 * 8
    assert dom.cell_volume == pytest.approx(0.25 * (2 / 6) * (3 / 8))


def test_spin_structures():
    assert len(all_spin_structures(2)) == 4
    assert len(all_spin_structures(3)) == 8
    with pytest.raises(ConfigurationError):
        SpinStructure((0.25, 0.0))


def test_chirality_anticommutes():
    rep = make_clifford(2)
    for g in rep.gamma:
        assert np.allclose(rep.chirality @ g + g @ rep.chirality, 0)
    assert make_clifford(3).chirality is None
    with pytest.raises(DimensionError):
        make_clifford(4)


def test_spectral_derivative_exact_on_trig():
    dom = LatticeDomain(2, 16, 3.0)
    x = dom.coords()
    k = 2 * np.pi * 3 / 3.0
    f = np.sin(k * x[..., 0]) * np.cos(2 * np.pi / 3.0 * x[..., 1])
    df = spectral_derivative(f, dom, 0)
    assert np.allclose(df, k * np.cos(k * x[..., 0]) * np.cos(2 * np.pi / 3.0 * x[..., 1]),
                       atol=1e-11)


def test_real_input_drops_nyquist_mode():
    dom = LatticeDomain(2, 8)
    x = dom.coords()[..., 0]
    nyq = np.cos(4 * x)
    assert np.max(np.abs(spectral_derivative(nyq, dom, 0))) < 1e-12


def test_antiperiodic_derivative_of_half_mode():
    dom = LatticeDomain(2, 8)
    x = dom.coords()[..., 0]
    f = np.exp(0.5j * x)
    assert np.allclose(spectral_derivative(f, dom, 0, phase=0.5), 0.5j * f, atol=1e-12)


def test_central_difference_second_order():
    errs = []
    for n in (16, 32):
        dom = LatticeDomain(2, n)
        x = dom.coords()[..., 1]
        err = np.max(np.abs(central_difference_derivative(np.sin(x), dom, 1) - np.cos(x)))
        errs.append(err)
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_laplacian_eigenfunction():
    dom = LatticeDomain(3, 8)
    x = dom.coords()
    f = np.sin(x[..., 0]) * np.sin(2 * x[..., 2])
    assert np.allclose(laplacian(f, dom), -5 * f, atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 31), a=st.floats(-3, 3), b=st.floats(-3, 3))
def test_derivative_is_linear(seed, a, b):
    dom = LatticeDomain(2, 8)
    rng = np.random.default_rng(seed)
    f, g = rng.standard_normal((2,) + dom.shape)
    lhs = spectral_derivative(a * f + b * g, dom, 1)
    rhs = a * spectral_derivative(f, dom, 1) + b * spectral_derivative(g, dom, 1)
    assert np.allclose(lhs, rhs, atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 31))
def test_inner_product_is_hermitian(seed):
    dom = LatticeDomain(2, 6)
    rng = np.random.default_rng(seed)
    u, v = rng.standard_normal((2,) + dom.shape + (2,)) + 1j * rng.standard_normal((2,) + dom.shape + (2,))
    assert lattice_inner(u, v, dom) == pytest.approx(np.conj(lattice_inner(v, u, dom)))
    assert lattice_inner(u, u, dom).real > 0
