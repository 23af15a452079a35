"""Euler-Lagrange residuals, stress-energy tensor and second variation.

Conventions: ``d phi_i = T(d_i phi)`` (spectral derivative projected onto
the target), covariant derivatives of sections along ``phi`` are ``T d_i``,
and the curvature coupling ``1/2 R(psi, e_i psi) d phi_i`` reduces on a
target of constant curvature ``kappa`` to ``kappa C_i d phi_i`` with the
real antisymmetric matrices ``C_i[a, b] = Re <psi^a, e_i psi^b>``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import potentials as pot
from .clifford_lattice import laplacian, make_clifford, spectral_derivative
from .dirac import (action, differential, map_gradient, real_pairing, spinor_gradient,
                    twisted_dirac_apply, a_term, dirac_apply)
from .errors import NonCriticalPointError, SizeCapExceeded, UnsupportedTarget
from .fields import (MapField, SpinorField, project_spinor_tangent, project_to_target,
                     project_vector_tangent, tangent_frame)

__all__ = [
    "ELResidual",
    "ExtrinsicSystem",
    "StressEnergy",
    "JacobiMatrix",
    "JACOBI_CAP",
    "tension",
    "curvature_matrices",
    "curvature_term",
    "el_residual",
    "el_residual_extrinsic",
    "extrinsic_system",
    "variation_path",
    "first_variation_check",
    "stress_energy",
    "divergence_stress_energy",
    "trace_identity",
    "second_variation",
    "jacobi_apply",
    "jacobi_matrix",
]

JACOBI_CAP = 4096


# -- first order -------------------------------------------------------------

def tension(phi: MapField):
    """``T(Laplacian phi)``; linear parts of torus lifts are harmonic."""
    lap = laplacian(phi.periodic_part(), phi.domain, trailing=1)
    return project_vector_tangent(lap, phi.values, phi.target)


def curvature_matrices(phi: MapField, psi_values):
    """``C_i[a, b] = Re <psi^a, e_i psi^b>``, shape ``(*grid, m, q, q)``, antisymmetric."""
    cl = make_clifford(phi.domain.dim)
    C = np.real(np.einsum("...sa,ist,...tb->...iab", np.conj(psi_values), cl.gamma, psi_values))
    return 0.5 * (C - np.swapaxes(C, -1, -2))


def curvature_term(phi: MapField, psi_values, dphi=None):
    """``1/2 R(psi, e_i psi) d phi(e_i)`` for constant-curvature targets."""
    kappa = phi.target.curvature
    if kappa == 0.0:
        return np.zeros_like(phi.values)
    dphi = differential(phi) if dphi is None else dphi
    C = curvature_matrices(phi, psi_values)
    return kappa * np.einsum("...iab,...ib->...a", C, dphi)


@dataclass
class ELResidual:
    """Map and spinor residuals of the Euler-Lagrange system, with L2 norms."""

    map_residual: np.ndarray
    spinor_residual: np.ndarray
    map_norm: float
    spinor_norm: float

    @property
    def norms(self):
        return (self.map_norm, self.spinor_norm)

    @property
    def max_norm(self):
        return max(self.map_norm, self.spinor_norm)

    @classmethod
    def from_fields(cls, map_residual, spinor_residual, domain):
        h = domain.cell_volume
        mn = float(np.sqrt(np.sum(map_residual ** 2) * h))
        sn = float(np.sqrt(np.real(np.vdot(spinor_residual, spinor_residual)) * h))
        return cls(map_residual, spinor_residual, mn, sn)


def el_residual(phi: MapField, psi: SpinorField, V):
    """``tau - 1/2 R(psi, e_i psi) d phi_i + grad V`` and ``D psi - V_psi``."""
    map_res = tension(phi) - curvature_term(phi, psi.values) + pot.grad_V(V, phi, psi)
    spin_res = twisted_dirac_apply(psi.values, phi, psi.spin) - pot.grad_psi_V(V, phi, psi)
    return ELResidual.from_fields(map_res, spin_res, phi.domain)


@dataclass
class ExtrinsicSystem:
    """Antisymmetric extrinsic form ``Lap phi = Omega . grad phi - grad V``,
    ``dirac psi = A psi + V_psi``.

    ``omega`` and ``F`` have shape ``(*grid, m, q, q)``; ``Omega = omega + F``.
    ``A_psi`` is ``A`` applied to ``psi``.  The bound constants are the
    largest pointwise ratios ``|Omega|^2 / (|d phi|^2 + |psi|^4)`` and
    ``|A| / |d phi|`` seen on the lattice.
    """

    omega: np.ndarray
    F: np.ndarray
    Omega: np.ndarray
    A_psi: np.ndarray
    residual: ELResidual
    antisymmetry_defect: float
    omega_bound_constant: float
    a_bound_constant: float


def extrinsic_system(phi: MapField, psi: SpinorField, V):
    if not phi.target.is_sphere:
        raise UnsupportedTarget("the extrinsic form is implemented for sphere targets only")
    domain = phi.domain
    y = phi.values
    grad = map_gradient(y, domain)
    # omega_i^ab = d_i phi^a nu^b - d_i phi^b nu^a, so that omega . grad phi = -|grad phi|^2 phi
    omega = grad[..., :, None] * y[..., None, None, :] - grad[..., None, :] * y[..., None, :, None]
    F = curvature_matrices(phi, psi.values)
    Omega = omega + F
    lap = laplacian(y, domain, trailing=1)
    map_res = lap - np.einsum("...iab,...ib->...a", Omega, grad) + pot.grad_V(V, phi, psi)
    A_psi = a_term(phi, psi.values)
    spin_res = dirac_apply(psi.values, domain, psi.spin) - A_psi - pot.grad_psi_V(V, phi, psi)
    residual = ELResidual.from_fields(map_res, spin_res, domain)

    defect = float(np.max(np.abs(Omega + np.swapaxes(Omega, -1, -2)))) if Omega.size else 0.0
    dphi2 = np.sum(grad ** 2, axis=(-2, -1))
    psi4 = np.real(np.sum(np.conj(psi.values) * psi.values, axis=(-2, -1))) ** 2
    om2 = np.sum(Omega ** 2, axis=(-3, -2, -1))
    denom = dphi2 + psi4
    mask = denom > 1e-14
    om_c = float(np.max(om2[mask] / denom[mask])) if np.any(mask) else 0.0
    # |A|^2 = sum_i,a,b (d_i phi^b nu^a)^2 = |d phi|^2 |nu|^2
    A_norm = np.sqrt(dphi2 * np.sum(y ** 2, axis=-1))
    mask = dphi2 > 1e-14
    a_c = float(np.max(A_norm[mask] / np.sqrt(dphi2[mask]))) if np.any(mask) else 0.0
    return ExtrinsicSystem(omega, F, Omega, A_psi, residual, defect, om_c, a_c)


def el_residual_extrinsic(phi: MapField, psi: SpinorField, V):
    """Residual of the extrinsic system; equals :func:`el_residual` on spheres."""
    return extrinsic_system(phi, psi, V).residual


def variation_path(phi: MapField, psi: SpinorField, eta, xi, t):
    """``phi_t = project(phi + t eta)``, ``psi_t = T_{phi_t}(psi + t xi)``."""
    phi_t = project_to_target(phi.values + t * eta, phi.target, phi.domain, phi.winding)
    psi_t = project_spinor_tangent(psi.with_values(psi.values + t * xi), phi_t)
    return phi_t, psi_t


def first_variation_check(phi, psi, V, eta, xi, t=1e-4):
    """Analytic first variation and its central finite difference.

    Returns ``(analytic, numeric)``.
    """
    res = el_residual(phi, psi, V)
    dom = phi.domain
    analytic = (-2.0 * real_pairing(res.map_residual, eta, dom)
                + 2.0 * real_pairing(res.spinor_residual, xi, dom))
    plus = action(*variation_path(phi, psi, eta, xi, t), V)
    minus = action(*variation_path(phi, psi, eta, xi, -t), V)
    return analytic, (plus - minus) / (2 * t)


# -- stress-energy -----------------------------------------------------------

@dataclass
class StressEnergy:
    """Pointwise symmetric tensor ``S`` of shape ``(*grid, m, m)``."""

    S: np.ndarray
    domain: object

    @property
    def trace(self):
        return np.trace(self.S, axis1=-2, axis2=-1)

    def symmetry_defect(self):
        return float(np.max(np.abs(self.S - np.swapaxes(self.S, -1, -2))))


def _project_grad(grads, phi):
    if not phi.target.is_sphere:
        return grads
    y = phi.values[..., None, None, :]
    return grads - np.sum(grads * y, axis=-1, keepdims=True) * y


def stress_energy(phi: MapField, psi: SpinorField, V):
    m = phi.domain.dim
    cl = make_clifford(m)
    dphi = differential(phi)
    eye = np.eye(m)
    dd = np.einsum("...ia,...ja->...ij", dphi, dphi)
    dphi2 = np.trace(dd, axis1=-2, axis2=-1)
    nabla = _project_grad(spinor_gradient(psi.values, phi.domain, psi.spin), phi)
    # T_ij = Re <psi, e_i nabla_j psi>
    T = np.real(np.einsum("...sa,ist,...jta->...ij", np.conj(psi.values), cl.gamma, nabla))
    dirac_density = np.trace(T, axis1=-2, axis2=-1)
    Vx = pot.eval_V(V, phi, psi)
    S = (2 * dd - dphi2[..., None, None] * eye + 0.5 * (T + np.swapaxes(T, -1, -2))
         + (2 * Vx - dirac_density)[..., None, None] * eye)
    return StressEnergy(S, phi.domain)


def trace_identity(phi: MapField, psi: SpinorField, V):
    """``(Tr S, (2 - m)|d phi|^2 + (1 - m) Re<psi, D psi> + 2 m V)`` pointwise."""
    m = phi.domain.dim
    dphi = differential(phi)
    dphi2 = np.sum(dphi ** 2, axis=(-2, -1))
    Dpsi = twisted_dirac_apply(psi.values, phi, psi.spin)
    dirac_density = np.real(np.sum(np.conj(psi.values) * Dpsi, axis=(-2, -1)))
    expected = (2 - m) * dphi2 + (1 - m) * dirac_density + 2 * m * pot.eval_V(V, phi, psi)
    return stress_energy(phi, psi, V).trace, expected


def divergence_stress_energy(S: StressEnergy):
    """``sum_j d_j S_ij`` by spectral derivatives, shape ``(*grid, m)``."""
    dom = S.domain
    out = np.zeros(S.S.shape[:-1])
    for j in range(dom.dim):
        out = out + spectral_derivative(S.S[..., :, j], dom, j, trailing=1)
    return out


# -- second order ------------------------------------------------------------

def _cov_vec(eta, phi, i):
    d = spectral_derivative(eta, phi.domain, i, trailing=1)
    return project_vector_tangent(d, phi.values, phi.target)


def _m_apply(phi, psi_values, xi, dphi):
    """Mixed curvature operator ``M xi`` (tangent vector field)."""
    kappa = phi.target.curvature
    if kappa == 0.0:
        return np.zeros(np.shape(xi)[:-2] + (phi.q,))
    cl = make_clifford(phi.domain.dim)
    B = np.real(np.einsum("...sa,ist,...tb->...iab", np.conj(xi), cl.gamma, psi_values))
    out = (np.einsum("...iab,...ib->...a", B, dphi)
           - np.einsum("...iba,...ib->...a", B, dphi))
    return project_vector_tangent(kappa * out, phi.values, phi.target)


def _m_adjoint(phi, psi_values, eta, dphi):
    """Adjoint ``M* eta`` (tangent spinor) with ``Re<M* eta, xi> = <eta, M xi>``."""
    kappa = phi.target.curvature
    if kappa == 0.0:
        return np.zeros(np.shape(eta)[:-1] + psi_values.shape[-2:], dtype=complex)
    cl = make_clifford(phi.domain.dim)
    u = np.einsum("...ib,...sb->...is", dphi, psi_values)
    w = np.einsum("...b,...sb->...s", eta, psi_values)
    spin = u[..., :, :, None] * eta[..., None, None, :] - w[..., None, :, None] * dphi[..., :, None, :]
    out = np.einsum("ist,...ita->...sa", cl.gamma, spin)
    return project_spinor_tangent(kappa * out, phi)


def _curv_eta(phi, eta, dphi):
    """``-kappa (|d phi|^2 eta - sum_i <eta, d phi_i> d phi_i)``."""
    kappa = phi.target.curvature
    if kappa == 0.0:
        return np.zeros_like(eta)
    dphi2 = np.sum(dphi ** 2, axis=(-2, -1))
    proj = np.einsum("...a,...ia->...i", eta, dphi)
    return -kappa * (dphi2[..., None] * eta - np.einsum("...i,...ia->...a", proj, dphi))


def _check_critical(phi, psi, V, tol):
    res = el_residual(phi, psi, V)
    if res.max_norm > tol:
        raise NonCriticalPointError(
            f"second variation needs a critical point; residual norms "
            f"{res.map_norm:.3e}, {res.spinor_norm:.3e}", residual=res)
    return res


def second_variation(phi, psi, V, eta, xi, check=True, tol=1e-8):
    """Second variation quadratic form at a critical point.

    The derivative of the target curvature vanishes on the supported
    (constant-curvature) targets.
    """
    if check:
        _check_critical(phi, psi, V, tol)
    dom = phi.domain
    h = dom.cell_volume
    kappa = phi.target.curvature
    dphi = differential(phi)
    y, ps = phi.values, psi.values
    density = np.zeros(tuple(dom.n))
    C = curvature_matrices(phi, ps) if kappa else None
    for i in range(dom.dim):
        ci = _cov_vec(eta, phi, i)
        density += np.sum(ci * ci, axis=-1)
        if kappa:
            density += kappa * np.einsum("...a,...ab,...b->...", eta, C[..., i, :, :], ci)
    density += np.sum(eta * _curv_eta(phi, eta, dphi), axis=-1)
    Dxi = twisted_dirac_apply(xi, phi, psi.spin)
    density += np.real(np.sum(np.conj(xi) * Dxi, axis=(-2, -1)))
    density += 2 * np.sum(eta * _m_apply(phi, ps, xi, dphi), axis=-1)
    density -= pot.hess_V(V, y, ps, eta, phi.target)
    density -= pot.iota_xixi(V, y, ps, xi, phi.target)
    density -= 2 * np.sum(eta * pot.mixed_apply(V, y, ps, xi, phi.target), axis=-1)
    return float(2 * np.sum(density) * h)


def jacobi_apply(phi, psi, V, eta, xi, dphi=None):
    """Jacobi operator ``I(eta, xi)``; returns ``(eta_row, xi_row)``.

    Leading batch axes on ``eta`` and ``xi`` are supported.  The
    ``<eta, C_i nabla_i eta>`` coupling is split half/half between the
    operator and its adjoint so that ``I`` is symmetric.
    """
    dphi = differential(phi) if dphi is None else dphi
    kappa = phi.target.curvature
    y, ps = phi.values, psi.values
    target = phi.target
    row_eta = np.zeros_like(eta)
    C = curvature_matrices(phi, ps) if kappa else None
    for i in range(phi.domain.dim):
        ci = _cov_vec(eta, phi, i)
        row_eta -= _cov_vec(ci, phi, i)
        if kappa:
            Ci = C[..., i, :, :]
            row_eta += 0.5 * kappa * np.einsum("...ab,...b->...a", Ci, ci)
            row_eta += 0.5 * kappa * _cov_vec(np.einsum("...ab,...b->...a", Ci, eta), phi, i)
    row_eta += _curv_eta(phi, eta, dphi)
    row_eta += _m_apply(phi, ps, xi, dphi)
    row_eta -= pot.hess_V_apply(V, y, ps, eta, target)
    row_eta -= pot.mixed_apply(V, y, ps, xi, target)

    row_xi = twisted_dirac_apply(xi, phi, psi.spin, check=False)
    row_xi = row_xi - pot.psi_hessian_apply(V, y, ps, xi, target)
    row_xi = row_xi + _m_adjoint(phi, ps, eta, dphi)
    row_xi = row_xi - pot.mixed_adjoint_apply(V, y, ps, eta, target)
    return 2 * row_eta, 2 * row_xi


@dataclass
class JacobiMatrix:
    """Jacobi operator in L2-orthonormal tangent coordinates.

    Coordinates are ``(eta, Re xi, Im xi)`` with ``eta`` in the tangent
    frame ``frame`` (shape ``(*grid, q, k)``) and ``xi`` likewise per spinor
    slot.  Unit coordinate vectors map to unit L2 fields.
    """

    matrix: np.ndarray
    frame: np.ndarray
    domain: object
    spinor_dim: int
    metadata: dict = field(default_factory=dict)

    @property
    def size(self):
        return self.matrix.shape[0]

    @property
    def eta_dim(self):
        return self.domain.num_sites * self.frame.shape[-1]

    def symmetry_defect(self):
        M = self.matrix
        return float(np.linalg.norm(M - M.T) / max(np.linalg.norm(M), 1e-300))

    def eigenvalues(self):
        return np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.T))

    def lowest(self, count=10):
        return self.eigenvalues()[:count]

    def to_fields(self, coords):
        return _coords_to_fields(coords, self.frame, self.domain, self.spinor_dim)

    def from_fields(self, eta, xi):
        return _fields_to_coords(eta, xi, self.frame, self.domain)

    def quadratic_form(self, coords):
        return float(coords @ self.matrix @ coords)


def _coords_to_fields(coords, frame, domain, S):
    coords = np.asarray(coords, dtype=float)
    k = frame.shape[-1]
    N = domain.num_sites
    grid = tuple(domain.n)
    scale = 1.0 / np.sqrt(domain.cell_volume)
    batch = coords.shape[:-1]
    ce = coords[..., :N * k].reshape(batch + grid + (k,))
    cr = coords[..., N * k:N * k * (1 + S)].reshape(batch + grid + (S, k))
    ci = coords[..., N * k * (1 + S):].reshape(batch + grid + (S, k))
    eta = scale * np.einsum("...qk,...k->...q", frame, ce)
    xi = scale * np.einsum("...qk,...sk->...sq", frame, cr + 1j * ci)
    return eta, xi.astype(complex)


def _fields_to_coords(eta, xi, frame, domain):
    scale = np.sqrt(domain.cell_volume)
    m = domain.dim
    ce = np.einsum("...qk,...q->...k", frame, eta)
    cx = np.einsum("...qk,...sq->...sk", frame, xi)
    batch = ce.shape[:ce.ndim - m - 1]
    parts = [ce.reshape(batch + (-1,)), cx.real.reshape(batch + (-1,)),
             cx.imag.reshape(batch + (-1,))]
    return scale * np.concatenate(parts, axis=-1)


def jacobi_matrix(phi, psi, V, cap=JACOBI_CAP, check=True, tol=1e-8, chunk=128):
    """Dense Jacobi matrix; :class:`SizeCapExceeded` above ``cap`` coordinates.

    Beyond the cap use :func:`jacobi_apply` / :func:`second_variation`.
    """
    if check:
        _check_critical(phi, psi, V, tol)
    dom = phi.domain
    S = make_clifford(dom.dim).spinor_dim
    frame = tangent_frame(phi.values, phi.target)
    k = frame.shape[-1]
    size = dom.num_sites * k * (1 + 2 * S)
    if size > cap:
        raise SizeCapExceeded(f"Jacobi matrix of size {size} exceeds cap {cap}")
    dphi = differential(phi)
    J = np.empty((size, size))
    eye = np.eye(size)
    for start in range(0, size, chunk):
        basis = eye[start:start + chunk]
        eta, xi = _coords_to_fields(basis, frame, dom, S)
        re, rx = jacobi_apply(phi, psi, V, eta, xi, dphi)
        J[:, start:start + chunk] = _fields_to_coords(re, rx, frame, dom).T
    meta = {"potential": V.to_dict(), "target": str(phi.target), "spin": str(psi.spin)}
    return JacobiMatrix(J, frame, dom, S, meta)
