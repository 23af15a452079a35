"""Scalar potentials ``V(phi, psi)`` with analytic derivatives.

Every potential is evaluated through an extension ``V~(y, psi)`` to ambient
``y in R^q`` and arbitrary vector spinors ``psi`` of shape ``(..., S, q)``.
The pieces are simple closed forms:

* a map term ``F(y)``,
* power terms ``G(y) |psi|^s`` (``s`` even),
* the quartic curvature contraction ``c * kappa * Q(psi)`` with
  ``Q = |psi|^4 - sum_ab |<psi^a, psi^b>|^2``,
* the exponential term ``-exp(|psi|^2)``.

Intrinsic derivatives follow from the ambient ones by tangential projection
plus the correction coming from transporting ``psi`` along with ``phi``.
All spinor pairings are real parts of Hermitian products.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DimensionError

__all__ = [
    "ScalarFunction",
    "PotentialSpec",
    "GrowthReport",
    "SlopeFit",
    "eval_V",
    "grad_V",
    "grad_psi_V",
    "hess_V",
    "hess_V_apply",
    "psi_hessian_apply",
    "iota_xixi",
    "mixed_apply",
    "mixed_adjoint_apply",
    "quartic_contraction",
    "growth_report",
    "growth_samples",
]


# -- closed-form functions on the ambient space ------------------------------

_FUNCTION_KINDS = ("const", "linear", "cos", "sin")


@dataclass(frozen=True)
class ScalarFunction:
    """Closed-form function of ``y in R^q`` with gradient and Hessian.

    ``const:c`` is ``c``; ``linear:a_1,...,a_q`` is ``a . y``; ``cos:j`` and
    ``sin:j`` are ``cos(y_j)`` and ``sin(y_j)`` (0-based ``j``).
    """

    kind: str
    params: tuple = ()

    def __post_init__(self):
        if self.kind not in _FUNCTION_KINDS:
            raise ConfigurationError(f"unknown function kind {self.kind!r}")
        params = tuple(float(p) for p in self.params)
        if self.kind == "const" and len(params) != 1:
            raise ConfigurationError("const takes exactly one value")
        if self.kind == "linear" and not params:
            raise ConfigurationError("linear needs a coefficient vector")
        if self.kind in ("cos", "sin"):
            if len(params) != 1 or params[0] != int(params[0]) or params[0] < 0:
                raise ConfigurationError(f"{self.kind} takes one coordinate index")
        object.__setattr__(self, "params", params)

    @classmethod
    def parse(cls, text):
        text = str(text).strip()
        kind, _, rest = text.partition(":")
        kind = kind.strip()
        try:
            params = tuple(float(v) for v in rest.split(",") if v.strip())
        except ValueError as exc:
            raise ConfigurationError(f"bad function parameters in {text!r}") from exc
        return cls(kind, params)

    @classmethod
    def const(cls, c):
        return cls("const", (c,))

    @classmethod
    def linear(cls, a):
        return cls("linear", tuple(a))

    def __str__(self):
        if self.kind in ("cos", "sin"):
            return f"{self.kind}:{int(self.params[0])}"
        return f"{self.kind}:" + ",".join(repr(p) for p in self.params)

    @property
    def is_zero(self):
        return all(p == 0.0 for p in self.params) and self.kind in ("const", "linear")

    def _check(self, q):
        if self.kind == "linear" and len(self.params) != q:
            raise DimensionError(
                f"linear coefficients have length {len(self.params)}, target has q={q}")
        if self.kind in ("cos", "sin") and int(self.params[0]) >= q:
            raise DimensionError(f"coordinate index {int(self.params[0])} out of range")

    def value(self, y):
        y = np.asarray(y, dtype=float)
        self._check(y.shape[-1])
        if self.kind == "const":
            return np.full(y.shape[:-1], self.params[0])
        if self.kind == "linear":
            return y @ np.asarray(self.params)
        j = int(self.params[0])
        return np.cos(y[..., j]) if self.kind == "cos" else np.sin(y[..., j])

    def grad(self, y):
        y = np.asarray(y, dtype=float)
        self._check(y.shape[-1])
        out = np.zeros(y.shape)
        if self.kind == "linear":
            out[...] = np.asarray(self.params)
        elif self.kind in ("cos", "sin"):
            j = int(self.params[0])
            out[..., j] = -np.sin(y[..., j]) if self.kind == "cos" else np.cos(y[..., j])
        return out

    def hess(self, y):
        y = np.asarray(y, dtype=float)
        self._check(y.shape[-1])
        out = np.zeros(y.shape + (y.shape[-1],))
        if self.kind in ("cos", "sin"):
            j = int(self.params[0])
            out[..., j, j] = -np.cos(y[..., j]) if self.kind == "cos" else -np.sin(y[..., j])
        return out


def _as_function(f):
    if f is None or isinstance(f, ScalarFunction):
        return f
    return ScalarFunction.parse(f)


# -- potential specification -------------------------------------------------

KINDS = ("zero", "structured", "v1", "v2", "v3", "v4", "map_only")


@dataclass(frozen=True)
class PotentialSpec:
    """Tagged potential description.

    ``structured``: ``H(y) + G(y) |psi|^s``; ``v1``: ``c <R(psi,psi)psi,psi>``
    with ``c = 1/12``; ``v2``: superpotential form built from a linear ``W``;
    ``v3``: ``lam/2 |psi|^2``; ``v4``: ``V_map(y) - exp(|psi|^2)``;
    ``map_only``: ``V_map(y)``.
    """

    kind: str = "zero"
    lam: float | None = None
    s: int | None = None
    H: ScalarFunction | None = None
    G: ScalarFunction | None = None
    W: ScalarFunction | None = None
    V_map: ScalarFunction | None = None
    coefficient: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown potential kind {self.kind!r}")
        for name in ("H", "G", "W", "V_map"):
            object.__setattr__(self, name, _as_function(getattr(self, name)))
        if self.kind == "structured":
            if self.s is None or int(self.s) != self.s or self.s < 2 or self.s % 2:
                raise ConfigurationError(f"structured potential needs even s >= 2, got {self.s}")
            object.__setattr__(self, "s", int(self.s))
            if self.G is None:
                raise ConfigurationError("structured potential needs a coefficient function G")
            if self.H is None:
                object.__setattr__(self, "H", ScalarFunction.const(0.0))
        if self.kind == "v3":
            if self.lam is None or not self.lam > 0:
                raise ConfigurationError(f"mass potential needs lam > 0, got {self.lam}")
            object.__setattr__(self, "lam", float(self.lam))
        if self.kind == "v1" and self.coefficient is None:
            object.__setattr__(self, "coefficient", 1.0 / 12.0)
        if self.kind == "v2":
            if self.W is None or self.W.kind != "linear":
                raise ConfigurationError("superpotential W must be a linear function")
        if self.kind in ("v4", "map_only") and self.V_map is None:
            object.__setattr__(self, "V_map", ScalarFunction.const(0.0))

    # constructors
    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def structured(cls, H, G, s):
        return cls("structured", H=H, G=G, s=s)

    @classmethod
    def curvature_v1(cls, coefficient=1.0 / 12.0):
        return cls("v1", coefficient=coefficient)

    @classmethod
    def superpotential_v2(cls, W):
        return cls("v2", W=W)

    @classmethod
    def mass_v3(cls, lam):
        return cls("v3", lam=lam)

    @classmethod
    def exponential_v4(cls, V_map=None):
        return cls("v4", V_map=V_map)

    @classmethod
    def map_only(cls, V_map):
        return cls("map_only", V_map=V_map)

    @property
    def growth_exponent(self):
        """Declared polynomial growth ``s`` in ``|psi|``, ``None`` if not polynomial."""
        return {"zero": None, "map_only": 0, "v3": 2, "v1": 4, "v2": 4,
                "structured": self.s, "v4": None}[self.kind]

    def to_dict(self):
        out = {"kind": self.kind}
        for name in ("lam", "s", "coefficient"):
            val = getattr(self, name)
            if val is not None:
                out[name] = val
        for name in ("H", "G", "W", "V_map"):
            val = getattr(self, name)
            if val is not None:
                out[name] = str(val)
        return out

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        unknown = set(data) - {"kind", "lam", "s", "coefficient", "H", "G", "W", "V_map"}
        if unknown:
            raise ConfigurationError(f"unknown potential fields {sorted(unknown)}")
        return cls(**data)

    def __str__(self):
        return ",".join(f"{k}={v}" for k, v in self.to_dict().items())


# -- ambient terms -----------------------------------------------------------

def _re_pair(a, b):
    """Pointwise ``Re <a, b>`` summed over the trailing ``(S, q)`` axes."""
    return np.real(np.sum(np.conj(a) * b, axis=(-2, -1)))


def _gram(psi):
    """``G_ab = <psi^a, psi^b>`` (Hermitian in ``a, b``)."""
    return np.einsum("...sa,...sb->...ab", np.conj(psi), psi)


def quartic_contraction(psi):
    """``R_abcd <psi^a,psi^c><psi^b,psi^d>`` for unit curvature, complex-valued.

    Uses ``R_abcd = g_ac g_bd - g_ad g_bc``; the imaginary part vanishes up
    to rounding.
    """
    G = _gram(psi)
    tr = np.trace(G, axis1=-2, axis2=-1)
    return tr * tr - np.einsum("...ab,...ba->...", G, G)


def _quartic(psi):
    r2 = np.real(np.sum(np.conj(psi) * psi, axis=(-2, -1)))
    G = _gram(psi)
    return r2 * r2 - np.real(np.sum(np.conj(G) * G, axis=(-2, -1)))


def _quartic_grad(psi):
    r2 = np.real(np.sum(np.conj(psi) * psi, axis=(-2, -1)))
    G = _gram(psi)
    chi = np.einsum("...ab,...sa->...sb", G, psi)
    return 4.0 * (r2[..., None, None] * psi - chi)


def _quartic_hess(psi, xi):
    r2 = np.real(np.sum(np.conj(psi) * psi, axis=(-2, -1)))
    G = _gram(psi)
    G1 = (np.einsum("...sa,...sb->...ab", np.conj(xi), psi)
          + np.einsum("...sa,...sb->...ab", np.conj(psi), xi))
    rp = _re_pair(psi, xi)
    return 4.0 * (2 * rp[..., None, None] * psi + r2[..., None, None] * xi
                  - np.einsum("...ab,...sa->...sb", G1, psi)
                  - np.einsum("...ab,...sa->...sb", G, xi))


@dataclass
class _Terms:
    map_fn: list = field(default_factory=list)      # ScalarFunction
    power: list = field(default_factory=list)       # (ScalarFunction, s)
    quartic: float = 0.0                            # coefficient of Q
    exponential: float = 0.0                        # coefficient of exp(|psi|^2)
    const: float = 0.0


def _terms(V: PotentialSpec, target):
    t = _Terms()
    kappa = target.curvature
    if V.kind == "zero":
        pass
    elif V.kind == "structured":
        t.map_fn.append(V.H)
        t.power.append((V.G, V.s))
    elif V.kind == "v1":
        t.quartic = V.coefficient * kappa
    elif V.kind == "v2":
        a = np.asarray(V.W.params)
        if target.is_sphere:
            # 1/2 |grad W|^2 = 1/2 (|a|^2 - (a.y)^2); Hess W = -(a.y) g
            t.const = 0.5 * float(a @ a)
            t.map_fn.append(_NegHalfSquare(a))
            t.power.append((ScalarFunction.linear(-0.5 * a), 2))
            t.quartic = -kappa / 12.0
        else:
            t.const = 0.5 * float(a @ a)
    elif V.kind == "v3":
        t.power.append((ScalarFunction.const(0.5 * V.lam), 2))
    elif V.kind == "v4":
        t.map_fn.append(V.V_map)
        t.exponential = -1.0
    elif V.kind == "map_only":
        t.map_fn.append(V.V_map)
    return t


class _NegHalfSquare:
    """``-1/2 (a . y)^2`` as a map term."""

    def __init__(self, a):
        self.a = np.asarray(a, dtype=float)

    def value(self, y):
        return -0.5 * (y @ self.a) ** 2

    def grad(self, y):
        return -(y @ self.a)[..., None] * self.a

    def hess(self, y):
        return np.broadcast_to(-np.outer(self.a, self.a), y.shape + (y.shape[-1],))


def _r2(psi):
    return np.real(np.sum(np.conj(psi) * psi, axis=(-2, -1)))


def _rpow(r2, p):
    """``|psi|^p`` from ``|psi|^2`` for even ``p >= 0``."""
    return r2 ** (p // 2)


def _ambient_value(t, y, psi):
    r2 = _r2(psi)
    out = np.full(np.shape(r2), t.const, dtype=float)
    for F in t.map_fn:
        out = out + F.value(y)
    for G, s in t.power:
        out = out + G.value(y) * _rpow(r2, s)
    if t.quartic:
        out = out + t.quartic * _quartic(psi)
    if t.exponential:
        out = out + t.exponential * np.exp(r2)
    return out


def _ambient_dy(t, y, psi):
    r2 = _r2(psi)
    out = np.zeros(np.shape(r2) + (y.shape[-1],))
    for F in t.map_fn:
        out = out + F.grad(y)
    for G, s in t.power:
        out = out + _rpow(r2, s)[..., None] * G.grad(y)
    return out


def _ambient_dpsi(t, y, psi):
    r2 = _r2(psi)
    out = np.zeros(np.shape(psi), dtype=complex)
    for G, s in t.power:
        out = out + (s * G.value(y) * _rpow(r2, s - 2))[..., None, None] * psi
    if t.quartic:
        out = out + t.quartic * _quartic_grad(psi)
    if t.exponential:
        out = out + (2 * t.exponential * np.exp(r2))[..., None, None] * psi
    return out


def _ambient_dyy(t, y, psi):
    r2 = _r2(psi)
    q = y.shape[-1]
    out = np.zeros(np.shape(r2) + (q, q))
    for F in t.map_fn:
        out = out + F.hess(y)
    for G, s in t.power:
        out = out + _rpow(r2, s)[..., None, None] * G.hess(y)
    return out


def _ambient_dpsipsi(t, y, psi, xi):
    r2 = _r2(psi)
    rp = _re_pair(psi, xi)
    out = np.zeros(np.shape(psi), dtype=complex)
    for G, s in t.power:
        g = s * G.value(y)
        out = out + (g * _rpow(r2, s - 2))[..., None, None] * xi
        if s > 2:
            out = out + (g * (s - 2) * _rpow(r2, s - 4) * rp)[..., None, None] * psi
    if t.quartic:
        out = out + t.quartic * _quartic_hess(psi, xi)
    if t.exponential:
        e = t.exponential * np.exp(r2)
        out = out + (2 * e)[..., None, None] * xi + (4 * e * rp)[..., None, None] * psi
    return out


def _ambient_mixed(t, y, psi, xi):
    """``d/dt d_y V~(y, psi + t xi)``, shape ``(..., q)``."""
    r2 = _r2(psi)
    rp = _re_pair(psi, xi)
    out = np.zeros(np.shape(r2) + (y.shape[-1],))
    for G, s in t.power:
        out = out + (s * _rpow(r2, s - 2) * rp)[..., None] * G.grad(y)
    return out


def _ambient_mixed_adjoint(t, y, psi, eta):
    """Adjoint of :func:`_ambient_mixed` in ``xi``: a spinor field."""
    r2 = _r2(psi)
    out = np.zeros(np.shape(psi), dtype=complex)
    for G, s in t.power:
        coef = s * _rpow(r2, s - 2) * np.sum(G.grad(y) * eta, axis=-1)
        out = out + coef[..., None, None] * psi
    return out


# -- projections -------------------------------------------------------------

def _proj_vec(v, y, target):
    if not target.is_sphere:
        return v
    return v - y * np.sum(y * v, axis=-1, keepdims=True)


def _proj_spinor(p, y, target):
    if not target.is_sphere:
        return p
    return p - np.sum(p * y[..., None, :], axis=-1, keepdims=True) * y[..., None, :]


def _unpack(phi, psi, target):
    if target is None:
        target = phi.target
        phi = phi.values
        psi = psi.values
    return np.asarray(phi, dtype=float), np.asarray(psi), target


# -- public pointwise API ----------------------------------------------------

def eval_V(V, phi, psi, target=None):
    """Pointwise potential value.

    Accepts field objects ``(phi, psi)`` or raw arrays plus ``target``.
    """
    y, psi, target = _unpack(phi, psi, target)
    return _ambient_value(_terms(V, target), y, psi)


def grad_V(V, phi, psi, target=None):
    """Intrinsic gradient ``nabla V`` in ``phi``, tangent, shape ``(..., q)``.

    The spinor is transported by tangential projection, which adds the
    term ``-Re <n, psi^b>`` with ``n = sum_a y^a (d_psi V~)^a`` on spheres.
    """
    y, psi, target = _unpack(phi, psi, target)
    t = _terms(V, target)
    g = _ambient_dy(t, y, psi)
    if target.is_sphere:
        n = np.einsum("...sa,...a->...s", _ambient_dpsi(t, y, psi), y)
        g = g - np.real(np.einsum("...s,...sb->...b", np.conj(n), psi))
    return _proj_vec(g, y, target)


def grad_psi_V(V, phi, psi, target=None):
    """``V_psi``: tangent spinor with ``Re <V_psi, xi> = d/dt V(phi, psi + t xi)``."""
    y, psi, target = _unpack(phi, psi, target)
    return _proj_spinor(_ambient_dpsi(_terms(V, target), y, psi), y, target)


def hess_V_apply(V, phi, psi, eta, target=None):
    """Intrinsic map Hessian applied to tangent ``eta``, tangent result."""
    y, psi, target = _unpack(phi, psi, target)
    t = _terms(V, target)
    out = np.einsum("...ab,...b->...a", _ambient_dyy(t, y, psi), eta)
    factor = target.second_fundamental_trace_factor(y, _ambient_dy(t, y, psi))
    return _proj_vec(out, y, target) + factor[..., None] * eta


def hess_V(V, phi, psi, eta, target=None):
    """Pointwise ``Hess V(eta, eta)``."""
    y, psi, target = _unpack(phi, psi, target)
    return np.sum(eta * hess_V_apply(V, y, psi, eta, target), axis=-1)


def psi_hessian_apply(V, phi, psi, xi, target=None):
    """``K xi``, the spinor Hessian: ``iota(xi, xi) = Re <xi, K xi>``."""
    y, psi, target = _unpack(phi, psi, target)
    return _proj_spinor(_ambient_dpsipsi(_terms(V, target), y, psi, xi), y, target)


def iota_xixi(V, phi, psi, xi, target=None):
    """Pointwise ``iota(xi, xi) V_psipsi``."""
    y, psi, target = _unpack(phi, psi, target)
    return _re_pair(xi, psi_hessian_apply(V, y, psi, xi, target))


def mixed_apply(V, phi, psi, xi, target=None):
    """``iota(xi) nabla V_psi = d/dt nabla V(phi, psi + t xi)`` for tangent ``xi``."""
    y, psi, target = _unpack(phi, psi, target)
    return _proj_vec(_ambient_mixed(_terms(V, target), y, psi, xi), y, target)


def mixed_adjoint_apply(V, phi, psi, eta, target=None):
    """Spinor ``B* eta`` with ``Re <B* eta, xi> = <eta, iota(xi) nabla V_psi>``."""
    y, psi, target = _unpack(phi, psi, target)
    return _proj_spinor(_ambient_mixed_adjoint(_terms(V, target), y, psi, eta), y, target)


# -- growth exponents --------------------------------------------------------

@dataclass
class SlopeFit:
    """Log-log growth fit of one quantity against ``|psi|``."""

    slope: float | None
    tail_slope: float | None
    identically_zero: bool = False
    finite: bool = True

    def to_dict(self):
        return {"slope": self.slope, "tail_slope": self.tail_slope,
                "identically_zero": self.identically_zero, "finite": self.finite}


@dataclass
class GrowthReport:
    value: SlopeFit
    grad: SlopeFit
    grad_psi: SlopeFit
    declared_s: int | None
    within_bounds: bool | None
    super_polynomial: bool
    inconclusive: bool
    notes: list = field(default_factory=list)

    @property
    def slopes(self):
        return (self.value.slope, self.grad.slope, self.grad_psi.slope)

    def to_dict(self):
        return {"value": self.value.to_dict(), "grad": self.grad.to_dict(),
                "grad_psi": self.grad_psi.to_dict(), "declared_s": self.declared_s,
                "within_bounds": self.within_bounds,
                "super_polynomial": self.super_polynomial,
                "inconclusive": self.inconclusive, "notes": list(self.notes)}


def growth_samples(target, m, decades=4.0, count=41, rng=None, r_min=1e-2):
    """Base point, and tangent spinors of magnitudes ``logspace`` over ``decades``.

    Returns ``(y, samples)`` with ``samples`` of shape ``(count, S, q)``.
    """
    from .clifford_lattice import make_clifford

    rng = np.random.default_rng(0) if rng is None else rng
    S = make_clifford(m).spinor_dim
    q = target.q
    y = np.zeros(q)
    if target.is_sphere:
        y[-1] = 1.0
    direction = rng.standard_normal((S, q)) + 1j * rng.standard_normal((S, q))
    direction = _proj_spinor(direction, y, target)
    direction /= np.sqrt(_r2(direction))
    radii = np.logspace(np.log10(r_min), np.log10(r_min) + decades, count)
    return y, radii[:, None, None] * direction


def _fit(r, f):
    with np.errstate(all="ignore"):
        mag = np.abs(f)
    if np.all(mag == 0):
        return SlopeFit(None, None, identically_zero=True), None
    finite = np.isfinite(mag)
    ok = finite & (mag > 0)
    lr, lf = np.log(r[ok]), np.log(mag[ok])
    if lr.size < 3:
        return SlopeFit(None, None, finite=bool(np.all(finite))), None
    slope = float(np.polyfit(lr, lf, 1)[0])
    top = lr >= lr.max() - np.log(10.0)
    tail = float(np.polyfit(lr[top], lf[top], 1)[0]) if top.sum() >= 2 else slope
    local = np.diff(lf) / np.diff(lr)
    local_top = local[top[1:]]
    return SlopeFit(slope, tail, finite=bool(np.all(finite))), local_top


def _accelerating(local):
    """Local slopes increase, and increase faster, across the top decade."""
    if local is None or local.size < 3:
        return False
    inc = np.diff(local)
    return bool(local[-1] - local[0] > 1.0 and np.all(inc > 0) and inc[-1] >= inc[0])


def growth_report(V, psi_samples, y=None, target=None, tol=0.1):
    """Fit growth exponents of ``|V|``, ``|nabla V|``, ``|V_psi|`` in ``|psi|``.

    ``psi_samples`` has shape ``(K, S, q)``: tangent spinors at the single
    point ``y`` whose magnitudes must span at least three decades.  The
    bound check compares the top-decade slopes against the declared ``s``
    (resp. ``s - 1``).  Identically vanishing quantities have no slope.
    """
    from .fields import sphere

    psi_samples = np.asarray(psi_samples)
    q = psi_samples.shape[-1]
    if target is None:
        target = sphere(q)
    if y is None:
        y = np.zeros(q)
        if target.is_sphere:
            y[-1] = 1.0
    y = np.broadcast_to(np.asarray(y, dtype=float), psi_samples.shape[:-2] + (q,))
    r = np.sqrt(_r2(psi_samples))
    notes = []
    positive = r[r > 0]
    if positive.size < 3 or np.log10(positive.max() / positive.min()) < 3.0 - 1e-9:
        empty = SlopeFit(None, None)
        return GrowthReport(empty, empty, empty, V.growth_exponent, None, False, True,
                            ["samples span less than three decades"])
    keep = r > 0
    r, y, psi_samples = r[keep], y[keep], psi_samples[keep]
    with np.errstate(over="ignore", invalid="ignore"):
        val = eval_V(V, y, psi_samples, target)
        gv = np.linalg.norm(grad_V(V, y, psi_samples, target), axis=-1)
        gp = np.sqrt(_r2(grad_psi_V(V, y, psi_samples, target)))
    fv, lv = _fit(r, val)
    fg, _ = _fit(r, gv)
    fp, lp = _fit(r, gp)
    super_poly = (not fv.finite) or (not fp.finite) or _accelerating(lv) or _accelerating(lp)
    if super_poly:
        notes.append("super-polynomial growth: outside the polynomial regularity scope")
    s = V.growth_exponent
    within = None
    if s is not None and not super_poly:
        checks = []
        if fv.tail_slope is not None:
            checks.append(fv.tail_slope <= s + tol)
        if fg.tail_slope is not None:
            checks.append(fg.tail_slope <= s + tol)
        if fp.tail_slope is not None:
            checks.append(fp.tail_slope <= s - 1 + tol)
        within = bool(all(checks))
    for name, fit in (("grad", fg), ("grad_psi", fp)):
        if fit.identically_zero:
            notes.append(f"{name} vanishes identically; no slope")
    inconclusive = fv.slope is None and not fv.identically_zero
    return GrowthReport(fv, fg, fp, s, within, bool(super_poly), inconclusive, notes)
