"""Flat spin geometry on a periodic lattice.

The domain is the flat torus ``R^m / (L_1 Z x ... x L_m Z)`` sampled on a
regular grid.  Lattice fields are numpy arrays laid out as
``(*batch, *grid, *components)``: any number of leading batch axes, the ``m``
grid axes, then ``trailing`` component axes (0 for scalars, 1 for ``R^q``
valued maps, 2 for vector spinors ``(spinor, q)``).

Spin structures on the torus are encoded as half-integer phases per axis.
A field with phase ``delta`` satisfies ``u(x + L e_i) = exp(2 pi i delta) u(x)``
and is expanded in the shifted modes ``exp(2 pi i (k + delta) x / L)``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError, DimensionError

__all__ = [
    "LatticeDomain",
    "SpinStructure",
    "CliffordRep",
    "make_clifford",
    "all_spin_structures",
    "spectral_derivative",
    "central_difference_derivative",
    "laplacian",
    "lattice_inner",
    "grid_axis",
]


@dataclass(frozen=True)
class LatticeDomain:
    """Regular periodic grid on a flat torus.

    ``n`` and ``length`` are per-axis tuples; scalars are broadcast.
    """

    dim: int
    n: tuple
    length: tuple

    def __init__(self, dim, n, length=2 * np.pi):
        if dim not in (2, 3):
            raise DimensionError(f"domain dimension must be 2 or 3, got {dim}")
        n = tuple(int(v) for v in np.broadcast_to(n, (dim,)))
        length = tuple(float(v) for v in np.broadcast_to(length, (dim,)))
        for ni in n:
            if ni < 4:
                raise ConfigurationError(f"need at least 4 points per axis, got {ni}")
            if ni % 2:
                raise ConfigurationError(
                    f"points per axis must be even for the spectral derivative, got {ni}")
        if any(L <= 0 for L in length):
            raise ConfigurationError("side lengths must be positive")
        object.__setattr__(self, "dim", int(dim))
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "length", length)

    @property
    def shape(self):
        return self.n

    @property
    def spacing(self):
        return tuple(L / n for L, n in zip(self.length, self.n))

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    @property
    def volume(self):
        return float(np.prod(self.length))

    @property
    def num_sites(self):
        return int(np.prod(self.n))

    def coords(self):
        """Site coordinates, shape ``(*grid, m)``."""
        axes = [np.arange(n) * h for n, h in zip(self.n, self.spacing)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def site_index(self, multi_index):
        """Row-major flat index of a (periodically wrapped) multi-index."""
        wrapped = tuple(int(i) % n for i, n in zip(multi_index, self.n))
        return int(np.ravel_multi_index(wrapped, self.n))

    def wavenumbers(self, axis, phase=0.0):
        """Angular wavenumbers ``2 pi (k + phase) / L`` in FFT order."""
        n = self.n[axis]
        k = np.fft.fftfreq(n, d=1.0 / n)
        return 2 * np.pi * (k + phase) / self.length[axis]


@dataclass(frozen=True)
class SpinStructure:
    """Per-axis spinor boundary phases: 0 periodic, 1/2 antiperiodic."""

    phases: tuple

    def __init__(self, phases):
        phases = tuple(float(p) for p in phases)
        for p in phases:
            if p not in (0.0, 0.5):
                raise ConfigurationError(f"spin phases must be 0 or 1/2, got {p}")
        object.__setattr__(self, "phases", phases)

    @property
    def dim(self):
        return len(self.phases)

    @classmethod
    def periodic(cls, dim):
        return cls((0.0,) * dim)

    def __str__(self):
        return "(" + ",".join(f"{p:g}" for p in self.phases) + ")"


def all_spin_structures(dim):
    """The ``2^dim`` spin structures of the flat ``dim``-torus."""
    return [SpinStructure(p) for p in itertools.product((0.0, 0.5), repeat=dim)]


@dataclass(frozen=True)
class CliffordRep:
    """Anti-Hermitian gamma matrices with ``g_i g_j + g_j g_i = -2 delta_ij``.

    ``chirality`` is ``g_1 g_2`` for ``m = 2`` and ``None`` for ``m = 3``.
    """

    gamma: np.ndarray
    chirality: np.ndarray | None

    @property
    def dim(self):
        return self.gamma.shape[0]

    @property
    def spinor_dim(self):
        return self.gamma.shape[1]


_PAULI = np.array(
    [[[0, 1], [1, 0]],
     [[0, -1j], [1j, 0]],
     [[1, 0], [0, -1]]],
    dtype=complex,
)


@lru_cache(maxsize=None)
def _clifford_cached(m):
    gamma = 1j * _PAULI[:m]
    gamma.setflags(write=False)
    chirality = None
    if m == 2:
        chirality = gamma[0] @ gamma[1]
        chirality.setflags(write=False)
    return CliffordRep(gamma=gamma, chirality=chirality)


def make_clifford(m):
    """Gamma matrices ``i sigma_j`` for ``m`` in {2, 3}."""
    if m not in (2, 3):
        raise DimensionError(f"Clifford representation only for m in (2, 3), got {m}")
    return _clifford_cached(int(m))


def grid_axis(field, domain, axis, trailing=0):
    """Array axis holding lattice axis ``axis`` for the given layout."""
    if not 0 <= axis < domain.dim:
        raise ConfigurationError(f"axis {axis} out of range for dim {domain.dim}")
    ax = field.ndim - trailing - domain.dim + axis
    if ax < 0 or field.shape[ax] != domain.n[axis]:
        raise ConfigurationError(
            f"field of shape {field.shape} does not match lattice {domain.n}")
    return ax


def _phase_ramp(domain, axis, phase, ax, ndim):
    n = domain.n[axis]
    ramp = np.exp(2j * np.pi * phase * np.arange(n) / n)
    shape = [1] * ndim
    shape[ax] = n
    return ramp.reshape(shape)


def spectral_derivative(field, domain, axis, phase=0.0, trailing=0):
    """Fourier derivative along ``axis`` for a field with spin phase ``phase``.

    Mode ``k`` in ``{-n/2, ..., n/2-1}`` is multiplied by
    ``i 2 pi (k + phase) / L``.  The operator is exactly skew-Hermitian for
    the lattice inner product.

    Real input with ``phase == 0`` returns a real array; the Nyquist mode is
    then dropped, which is what the real part of the complex derivative does
    anyway.
    """
    ax = grid_axis(field, domain, axis, trailing)
    kk = domain.wavenumbers(axis, phase)
    shape = [1] * field.ndim
    shape[ax] = kk.size
    mult = 1j * kk.reshape(shape)
    if phase == 0.0 and np.isrealobj(field):
        n = domain.n[axis]
        kr = np.fft.rfftfreq(n, d=1.0 / n) * 2 * np.pi / domain.length[axis]
        kr[-1] = 0.0  # Nyquist
        shape[ax] = kr.size
        spec = np.fft.rfft(field, axis=ax) * (1j * kr.reshape(shape))
        return np.fft.irfft(spec, n=n, axis=ax)
    if phase == 0.0:
        return np.fft.ifft(np.fft.fft(field, axis=ax) * mult, axis=ax)
    ramp = _phase_ramp(domain, axis, phase, ax, field.ndim)
    periodic = field * ramp.conj()
    out = np.fft.ifft(np.fft.fft(periodic, axis=ax) * mult, axis=ax)
    return out * ramp


def central_difference_derivative(field, domain, axis, phase=0.0, trailing=0):
    """Centered difference ``(u_{j+1} - u_{j-1}) / 2h`` with twisted wraparound.

    Neighbours across the boundary pick up ``exp(+-2 pi i phase)`` (a sign
    flip for antiperiodic axes).  Skew-Hermitian, but it has doubler modes:
    the Nyquist mode is annihilated.
    """
    ax = grid_axis(field, domain, axis, trailing)
    h = domain.spacing[axis]
    up = np.roll(field, -1, axis=ax)
    down = np.roll(field, 1, axis=ax)
    if phase != 0.0:
        twist = np.exp(2j * np.pi * phase)
        up = up.astype(complex)
        down = down.astype(complex)
        last = [slice(None)] * field.ndim
        last[ax] = -1
        first = [slice(None)] * field.ndim
        first[ax] = 0
        up[tuple(last)] *= twist
        down[tuple(first)] *= np.conj(twist)
    return (up - down) / (2 * h)


def laplacian(field, domain, trailing=0):
    """Sum of squared spectral derivatives for real periodic fields.

    Defined as the composition of the first-derivative operators so that
    ``sum |d u|^2 = -<u, laplacian(u)>`` holds exactly on the lattice.
    """
    out = np.zeros_like(field, dtype=float)
    for i in range(domain.dim):
        out = out + spectral_derivative(
            spectral_derivative(field, domain, i, trailing=trailing),
            domain, i, trailing=trailing)
    return out


def lattice_inner(u, v, domain):
    """Hermitian lattice inner product ``h^m sum conj(u) v`` over all axes."""
    return np.vdot(u, v) * domain.cell_volume
