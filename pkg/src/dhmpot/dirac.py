"""Map differential, Dirichlet energy, Dirac operators and the action.

The twisted Dirac operator is realised extrinsically: apply the standard
Dirac operator componentwise in ``R^q`` and project back onto the tangent
space along the map.  All spinor pairings take the real part of the
Hermitian product.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clifford_lattice import LatticeDomain, SpinStructure, make_clifford, spectral_derivative
from .errors import ContractViolation, SizeCapExceeded
from .fields import MapField, SpinorField, project_spinor_tangent, project_vector_tangent, tangent_frame

__all__ = [
    "DENSE_CAP",
    "OperatorMatrix",
    "map_gradient",
    "differential",
    "dirichlet_energy",
    "spinor_gradient",
    "dirac_apply",
    "twisted_dirac_apply",
    "dirac_untwisted",
    "dirac_twisted",
    "a_term",
    "dirac_energy_density",
    "action",
    "real_pairing",
]

DENSE_CAP = 2048


def real_pairing(a, b, domain):
    """``Re <a, b>`` integrated over the lattice (sum over all axes times h^m)."""
    return float(np.real(np.vdot(a, b)) * domain.cell_volume)


def map_gradient(values, domain, linear=None):
    """Raw spectral derivatives of ``R^q``-valued data, shape ``(..., m, q)``.

    ``linear`` is the ``(q, m)`` slope of a torus lift, added to each axis.
    """
    grads = [spectral_derivative(values, domain, i, trailing=1) for i in range(domain.dim)]
    out = np.stack(grads, axis=-2)
    if linear is not None and np.any(linear):
        out = out + np.asarray(linear).T
    return out


def differential(phi: MapField):
    """``d phi(e_i)``: spectral derivative projected onto ``T_phi N``.

    Returns an array of shape ``(*grid, m, q)``.
    """
    raw = map_gradient(phi.periodic_part(), phi.domain, phi.linear_part())
    return project_vector_tangent(raw, phi.values[..., None, :], phi.target)


def dirichlet_energy(phi: MapField):
    dphi = differential(phi)
    return float(np.sum(dphi * dphi) * phi.domain.cell_volume)


def spinor_gradient(psi_values, domain, spin):
    """Spinor derivatives along each axis, shape ``(..., m, S, q)``."""
    return np.stack(
        [spectral_derivative(psi_values, domain, i, spin.phases[i], trailing=2)
         for i in range(domain.dim)], axis=-3)


def dirac_apply(psi_values, domain, spin):
    """Untwisted Dirac operator ``sum_i gamma_i d_i`` acting on ``(..., S, q)``.

    Works equally for plain spinors if a trailing axis of length 1 is used.
    """
    cl = make_clifford(domain.dim)
    out = np.zeros(np.shape(psi_values), dtype=complex)
    for i in range(domain.dim):
        d = spectral_derivative(psi_values, domain, i, spin.phases[i], trailing=2)
        out += np.einsum("st,...tq->...sq", cl.gamma[i], d)
    return out


def twisted_dirac_apply(psi_values, phi: MapField, spin, check=True):
    """``D psi = T_phi (dirac psi)`` for tangent vector spinors."""
    if check and phi.target.is_sphere:
        normal = np.max(np.abs(np.sum(psi_values * phi.values[..., None, :], axis=-1)))
        scale = max(1.0, float(np.max(np.abs(psi_values))) if np.size(psi_values) else 1.0)
        if normal > 1e-8 * scale:
            raise ContractViolation(f"spinor is not tangent along the map ({normal:.2e})")
    return project_spinor_tangent(dirac_apply(psi_values, phi.domain, spin), phi)


def a_term(phi: MapField, psi_values):
    """``A psi`` with ``A_ab = -dphi^b nu^a e_i .``; the normal part of ``dirac psi``.

    Zero for flat targets (no normal directions).
    """
    if not phi.target.is_sphere:
        return np.zeros_like(psi_values, dtype=complex)
    cl = make_clifford(phi.domain.dim)
    raw = map_gradient(phi.values, phi.domain)
    contracted = np.einsum("...iq,...sq->...is", raw, psi_values)
    cliff = np.einsum("ist,...it->...s", cl.gamma, contracted)
    return -cliff[..., :, None] * phi.values[..., None, :]


@dataclass
class OperatorMatrix:
    """Dense operator on flattened spinor coordinates.

    For the twisted operator the coordinates are taken in a pointwise
    orthonormal tangent frame ``frame`` (shape ``(*grid, q, k)``), flattened
    as ``(site, spinor, k)``.  ``frame`` is ``None`` for the untwisted
    operator, whose coordinates are ``(site, spinor)``.
    """

    matrix: np.ndarray
    domain: LatticeDomain
    spin: SpinStructure
    frame: np.ndarray | None = None
    target: object = None

    @property
    def size(self):
        return self.matrix.shape[0]

    def hermitian_defect(self):
        M = self.matrix
        return float(np.linalg.norm(M - M.conj().T) / max(np.linalg.norm(M), 1e-300))

    def to_field(self, coords):
        """Coordinates (last axis) -> field values, L2-normalised convention.

        Unit Euclidean coordinate vectors map to unit L2-norm fields.
        """
        coords = np.asarray(coords)
        S = make_clifford(self.domain.dim).spinor_dim
        scale = 1.0 / np.sqrt(self.domain.cell_volume)
        if self.frame is None:
            return scale * coords.reshape(coords.shape[:-1] + tuple(self.domain.n) + (S,))
        k = self.frame.shape[-1]
        c = coords.reshape(coords.shape[:-1] + tuple(self.domain.n) + (S, k))
        return scale * np.einsum("...qk,...sk->...sq", self.frame, c)

    def from_field(self, values):
        """Inverse of :meth:`to_field` on tangent data."""
        scale = np.sqrt(self.domain.cell_volume)
        if self.frame is None:
            return scale * np.reshape(values, np.shape(values)[:-self.domain.dim - 1] + (-1,))
        c = np.einsum("...qk,...sq->...sk", self.frame, values)
        return scale * c.reshape(c.shape[:-self.domain.dim - 2] + (-1,))


def _derivative_matrix_1d(domain, axis, phase):
    n = domain.n[axis]
    kk = domain.wavenumbers(axis, phase)
    j = np.arange(n)
    ramp = np.exp(2j * np.pi * phase * j / n)
    F = np.exp(-2j * np.pi * np.outer(j, j) / n)
    return (ramp[:, None] * (F.conj().T @ (1j * kk[:, None] * F)) / n) * ramp.conj()[None, :]


def _grid_derivative_matrix(domain, axis, phase):
    mats = [np.eye(n) for n in domain.n]
    mats[axis] = _derivative_matrix_1d(domain, axis, phase)
    out = mats[0]
    for M in mats[1:]:
        out = np.kron(out, M)
    return out


def _untwisted_dense(domain, spin):
    cl = make_clifford(domain.dim)
    N = domain.num_sites
    S = cl.spinor_dim
    M = np.zeros((N * S, N * S), dtype=complex)
    for i in range(domain.dim):
        M += np.kron(_grid_derivative_matrix(domain, i, spin.phases[i]), cl.gamma[i])
    return M


def dirac_untwisted(domain, spin, dense=True):
    """Untwisted Dirac operator as ``(OperatorMatrix or None, applier)``.

    The applier acts on plain spinor fields of shape ``(..., *grid, S)``.
    """
    def apply(values):
        return dirac_apply(np.asarray(values)[..., None], domain, spin)[..., 0]

    if not dense:
        return None, apply
    S = make_clifford(domain.dim).spinor_dim
    if domain.num_sites * S > DENSE_CAP:
        raise SizeCapExceeded(f"untwisted dense size {domain.num_sites * S} too large")
    return OperatorMatrix(_untwisted_dense(domain, spin), domain, spin), apply


def dirac_twisted(phi: MapField, spin, dense=True):
    """Twisted Dirac operator along ``phi`` as ``(OperatorMatrix or None, applier)``.

    The dense matrix is expressed in tangent-frame coordinates and is
    Hermitian by construction; assembly is capped at :data:`DENSE_CAP`.
    """
    def apply(values):
        return twisted_dirac_apply(values, phi, spin)

    if not dense:
        return None, apply
    domain = phi.domain
    S = make_clifford(domain.dim).spinor_dim
    E = tangent_frame(phi.values, phi.target)
    k = E.shape[-1]
    N = domain.num_sites
    size = N * S * k
    if size > DENSE_CAP:
        raise SizeCapExceeded(f"twisted Dirac matrix of size {size} exceeds cap {DENSE_CAP}")
    D = _untwisted_dense(domain, spin).reshape(N, S, N, S)
    Ef = E.reshape(N, phi.q, k)
    overlap = np.einsum("xqa,yqb->xayb", Ef, Ef)
    M = np.einsum("xsyt,xayb->xsaytb", D, overlap).reshape(size, size)
    return OperatorMatrix(M, domain, spin, frame=E, target=phi.target), apply


def dirac_energy_density(phi: MapField, psi: SpinorField):
    """Pointwise ``Re <psi, D psi>``."""
    Dpsi = twisted_dirac_apply(psi.values, phi, psi.spin)
    return np.real(np.sum(np.conj(psi.values) * Dpsi, axis=(-2, -1)))


def action(phi: MapField, psi: SpinorField, V):
    """``S_P = int |dphi|^2 + Re<psi, D psi> - 2 V(phi, psi)``."""
    from .potentials import eval_V

    dphi = differential(phi)
    density = np.sum(dphi * dphi, axis=(-2, -1))
    density = density + dirac_energy_density(phi, psi)
    density = density - 2.0 * eval_V(V, phi.values, psi.values, phi.target)
    return float(np.sum(density) * phi.domain.cell_volume)
