"""Target manifolds in extrinsic presentation and the constrained fields.

Supported targets are the unit sphere ``S^{q-1}`` in ``R^q`` (unit normal
``nu(y) = y``) and the flat torus ``(R / 2 pi Z)^q`` with the identity
embedding and no constraint.  Torus-valued maps are stored as lifts: the
value array is the periodic part plus ``2 pi W x / L`` for an integer
winding matrix ``W`` of shape ``(q, m)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .clifford_lattice import LatticeDomain, SpinStructure, make_clifford
from .errors import ConfigurationError, ContractViolation, RetractionError

__all__ = [
    "TargetManifold",
    "sphere",
    "flat_torus",
    "MapField",
    "SpinorField",
    "project_to_target",
    "project_spinor_tangent",
    "project_vector_tangent",
    "curvature_op",
    "tangent_frame",
    "constant_map",
    "equator_map",
    "identity_map",
    "random_sphere_map",
    "random_tangent_vector",
    "random_tangent_spinor",
    "bandlimited_field",
]

TANGENCY_TOL = 1e-12


@dataclass(frozen=True)
class TargetManifold:
    """Embedded target: ``kind`` is ``"sphere"`` or ``"torus"``."""

    kind: str
    q: int

    def __post_init__(self):
        if self.kind not in ("sphere", "torus"):
            raise ConfigurationError(f"unknown target kind {self.kind!r}")
        if self.q < (2 if self.kind == "sphere" else 1):
            raise ConfigurationError(f"ambient dimension too small: {self.q}")

    @property
    def dim(self):
        return self.q - 1 if self.kind == "sphere" else self.q

    @property
    def curvature(self):
        """Constant sectional curvature (1 for the unit sphere, 0 flat)."""
        return 1.0 if self.kind == "sphere" else 0.0

    @property
    def is_sphere(self):
        return self.kind == "sphere"

    def normal_frame(self, y):
        """Orthonormal normal frame, shape ``(..., q, q - dim)``."""
        y = np.asarray(y, dtype=float)
        if self.is_sphere:
            return y[..., :, None]
        return np.zeros(y.shape + (0,))

    def projector(self, y):
        y = np.asarray(y, dtype=float)
        eye = np.eye(self.q)
        if self.is_sphere:
            return eye - y[..., :, None] * y[..., None, :]
        return np.broadcast_to(eye, y.shape + (self.q,))

    def second_fundamental_trace_factor(self, y, grad):
        """``<grad f, II(X, X)> / |X|^2`` for an ambient gradient ``grad``.

        The intrinsic Hessian of a function restricted to the target is
        ``D^2 f(X, X)`` plus this factor times ``|X|^2``.
        """
        if self.is_sphere:
            return -np.sum(grad * y, axis=-1)
        return np.zeros(np.shape(grad)[:-1])

    def __str__(self):
        return f"{self.kind}(q={self.q})"


def sphere(q):
    return TargetManifold("sphere", q)


def flat_torus(q):
    return TargetManifold("torus", q)


@dataclass
class MapField:
    """Lattice map into an embedded target, values of shape ``(*grid, q)``."""

    domain: LatticeDomain
    target: TargetManifold
    values: np.ndarray
    winding: np.ndarray = field(default=None)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expected = tuple(self.domain.n) + (self.target.q,)
        if self.values.shape != expected:
            raise ConfigurationError(
                f"map values have shape {self.values.shape}, expected {expected}")
        if self.winding is None:
            self.winding = np.zeros((self.target.q, self.domain.dim), dtype=int)
        self.winding = np.asarray(self.winding, dtype=int)
        if self.winding.shape != (self.target.q, self.domain.dim):
            raise ConfigurationError("winding matrix must have shape (q, m)")
        if self.target.is_sphere:
            if np.any(self.winding):
                raise ConfigurationError("sphere-valued maps carry no winding")
            err = np.max(np.abs(np.linalg.norm(self.values, axis=-1) - 1.0))
            if err > TANGENCY_TOL:
                raise ContractViolation(f"map leaves the sphere by {err:.3e}")

    @property
    def q(self):
        return self.target.q

    def linear_part(self):
        """Slope ``2 pi W / L`` of the lift, shape ``(q, m)``."""
        return 2 * np.pi * self.winding / np.asarray(self.domain.length)[None, :]

    def periodic_part(self):
        if not np.any(self.winding):
            return self.values
        return self.values - self.domain.coords() @ self.linear_part().T

    def with_values(self, values):
        return MapField(self.domain, self.target, values, self.winding.copy())

    def copy(self):
        return self.with_values(self.values.copy())


@dataclass
class SpinorField:
    """Vector spinor along a map, values of shape ``(*grid, S, q)`` (complex)."""

    domain: LatticeDomain
    spin: SpinStructure
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        S = make_clifford(self.domain.dim).spinor_dim
        if self.values.ndim != self.domain.dim + 2 or \
                self.values.shape[:self.domain.dim] != tuple(self.domain.n) or \
                self.values.shape[-2] != S:
            raise ConfigurationError(
                f"spinor values of shape {self.values.shape} do not match the lattice")
        if self.spin.dim != self.domain.dim:
            raise ConfigurationError("spin structure dimension differs from domain")

    @property
    def q(self):
        return self.values.shape[-1]

    def with_values(self, values):
        return SpinorField(self.domain, self.spin, values)

    def copy(self):
        return self.with_values(self.values.copy())

    def l2_norm(self):
        return float(np.sqrt(np.vdot(self.values, self.values).real * self.domain.cell_volume))

    @classmethod
    def zeros(cls, domain, spin, q):
        S = make_clifford(domain.dim).spinor_dim
        return cls(domain, spin, np.zeros(tuple(domain.n) + (S, q), dtype=complex))


def project_to_target(raw, target, domain, winding=None):
    """Pointwise retraction onto the target (radial normalisation on spheres)."""
    raw = np.asarray(raw, dtype=float)
    if target.is_sphere:
        norms = np.linalg.norm(raw, axis=-1)
        bad = norms < 1e-8
        if np.any(bad):
            site = tuple(int(i) for i in np.argwhere(bad)[0])
            raise RetractionError(f"cannot retract near-zero vector at site {site}", site=site)
        return MapField(domain, target, raw / norms[..., None], winding)
    return MapField(domain, target, raw.copy(), winding)


def project_vector_tangent(v, phi_values, target):
    """Apply ``T_y`` to ``R^q``-valued data ``(..., q)``."""
    if not target.is_sphere:
        return np.array(v, copy=True)
    y = phi_values
    return v - y * np.sum(y * v, axis=-1, keepdims=True)


def _project_spinor_array(psi, y, target):
    if not target.is_sphere:
        return np.array(psi, copy=True)
    normal = np.sum(psi * y[..., None, :], axis=-1, keepdims=True)
    return psi - normal * y[..., None, :]


def project_spinor_tangent(psi_raw, phi):
    """Apply ``T_{phi(x)}`` to each spinor slot of a vector spinor.

    Accepts a :class:`SpinorField` or a bare array ``(..., S, q)``; returns
    the same kind.
    """
    if isinstance(psi_raw, SpinorField):
        return psi_raw.with_values(_project_spinor_array(psi_raw.values, phi.values, phi.target))
    return _project_spinor_array(np.asarray(psi_raw), phi.values, phi.target)


def tangent_frame(phi_values, target):
    """Orthonormal tangent frame, shape ``(..., q, dim)``.

    For spheres a Householder reflection sending the largest coordinate axis
    to ``y`` is used; its remaining columns span ``y^perp``.
    """
    y = np.asarray(phi_values, dtype=float)
    q = target.q
    if not target.is_sphere:
        return np.broadcast_to(np.eye(q), y.shape + (q,)).copy()
    k = np.argmax(np.abs(y), axis=-1)
    sign = np.where(np.take_along_axis(y, k[..., None], axis=-1)[..., 0] >= 0, 1.0, -1.0)
    v = y.copy()
    np.put_along_axis(v, k[..., None], np.take_along_axis(v, k[..., None], axis=-1) + sign[..., None], axis=-1)
    H = np.eye(q) - 2 * v[..., :, None] * v[..., None, :] / np.sum(v * v, axis=-1)[..., None, None]
    j = np.arange(q - 1)
    idx = j + (j >= k[..., None])
    return np.take_along_axis(H, idx[..., None, :], axis=-1)


def curvature_op(target, y, X, Y, Z, tol=1e-10):
    """Riemann curvature ``R(X, Y) Z`` of the target at ``y``.

    Sphere: ``<Y, Z> X - <X, Z> Y``; torus: zero.
    """
    y = np.asarray(y, dtype=float)
    if target.is_sphere:
        for name, vec in (("X", X), ("Y", Y), ("Z", Z)):
            off = np.max(np.abs(np.sum(np.real(vec) * y, axis=-1)))
            if off > tol:
                raise ContractViolation(f"{name} is not tangent at y (normal part {off:.2e})")
    kappa = target.curvature
    yz = np.sum(Y * Z, axis=-1, keepdims=True)
    xz = np.sum(X * Z, axis=-1, keepdims=True)
    return kappa * (yz * X - xz * Y)


# -- constructors ------------------------------------------------------------

def constant_map(domain, target, point):
    point = np.asarray(point, dtype=float)
    values = np.broadcast_to(point, tuple(domain.n) + (target.q,)).copy()
    return project_to_target(values, target, domain)


def equator_map(domain, q=3, axis=0, winding=1):
    """Great circle ``(cos k x_a, sin k x_a, 0, ...)`` into ``S^{q-1}``."""
    x = domain.coords()[..., axis]
    theta = 2 * np.pi * winding * x / domain.length[axis]
    values = np.zeros(tuple(domain.n) + (q,))
    values[..., 0] = np.cos(theta)
    values[..., 1] = np.sin(theta)
    return MapField(domain, sphere(q), values)


def identity_map(domain, perturbation=None):
    """Identity ``T^m -> T^m`` on a matched lattice, optionally perturbed."""
    target = flat_torus(domain.dim)
    winding = np.eye(domain.dim, dtype=int)
    values = domain.coords() * (2 * np.pi / np.asarray(domain.length))
    if perturbation is not None:
        values = values + perturbation
    return MapField(domain, target, values, winding)


def bandlimited_field(domain, rng, max_mode=1, extra_shape=(), phases=None, real=False):
    """Random field with Fourier support ``|k|_inf <= max_mode``.

    ``phases`` shifts the modes to ``k + phase`` (spinor boundary conditions).
    """
    m = domain.dim
    shape = tuple(domain.n) + tuple(extra_shape)
    coef = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    mask = np.ones(domain.n, dtype=bool)
    for ax in range(m):
        k = np.fft.fftfreq(domain.n[ax], d=1.0 / domain.n[ax])
        sl = [None] * m
        sl[ax] = slice(None)
        mask = mask & (np.abs(k) <= max_mode)[tuple(sl)]
    coef = coef * mask.reshape(mask.shape + (1,) * len(extra_shape))
    vals = np.fft.ifftn(coef, axes=tuple(range(m))) * np.sqrt(domain.num_sites)
    vals = vals / max(1.0, np.sqrt(mask.sum()))
    if real:
        return np.ascontiguousarray(vals.real)
    if phases is not None:
        x = domain.coords()
        ramp = np.exp(2j * np.pi * np.sum(
            np.asarray(phases) * x / np.asarray(domain.length), axis=-1))
        vals = vals * ramp.reshape(ramp.shape + (1,) * len(extra_shape))
    return vals


def _random_rotation(q, rng):
    Q, R = np.linalg.qr(rng.standard_normal((q, q)))
    return Q * np.sign(np.diag(R))[None, :]


def random_sphere_map(domain, q, rng, max_wave=1):
    """Band-limited map into ``S^{q-1}`` built from nested spherical angles.

    Each angle is ``2 pi k.x / L + c`` with integer ``k`` in
    ``[-max_wave, max_wave]^m``; a random rotation is applied at the end.
    """
    x = domain.coords() * (2 * np.pi / np.asarray(domain.length))
    angles = []
    for _ in range(q - 1):
        k = rng.integers(-max_wave, max_wave + 1, size=domain.dim)
        if not np.any(k):
            k[rng.integers(domain.dim)] = 1
        angles.append(x @ k + rng.uniform(0, 2 * np.pi))
    values = np.empty(tuple(domain.n) + (q,))
    sin_prod = np.ones(tuple(domain.n))
    for j, a in enumerate(angles):
        values[..., j] = sin_prod * np.cos(a)
        sin_prod = sin_prod * np.sin(a)
    values[..., q - 1] = sin_prod
    values = values @ _random_rotation(q, rng).T
    return project_to_target(values, sphere(q), domain)


def random_tangent_vector(phi, rng, max_mode=1, scale=1.0):
    raw = scale * bandlimited_field(phi.domain, rng, max_mode, (phi.q,), real=True)
    return project_vector_tangent(raw, phi.values, phi.target)


def random_tangent_spinor(phi, spin, rng, max_mode=1, scale=1.0):
    S = make_clifford(phi.domain.dim).spinor_dim
    raw = scale * bandlimited_field(phi.domain, rng, max_mode, (S, phi.q), phases=spin.phases)
    return SpinorField(phi.domain, spin, project_spinor_tangent(raw, phi))
