"""Discrete Morrey norms, smallness tables and energy monitors."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dirac import differential, spinor_gradient
from .errors import ConfigurationError
from .fields import MapField, SpinorField

__all__ = [
    "MorreyNorm",
    "SmallnessReport",
    "morrey_norm",
    "morrey_profile",
    "covering_radius",
    "smallness_check",
    "coupling_energy",
    "surrogate_norms",
    "lp_norm",
]

_TIE_RTOL = 1e-14


def covering_radius(domain):
    """Largest minimum-image distance between two lattice sites."""
    return float(np.sqrt(sum((n // 2 * h) ** 2 for n, h in zip(domain.n, domain.spacing))))


def _offsets(domain):
    """Minimum-image integer offsets and their Euclidean lengths, sorted by length.

    Ties are ordered by the row-major index of the offset so the
    accumulation order is fixed.
    """
    axes = [np.arange(n) for n in domain.n]
    idx = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, domain.dim)
    n = np.asarray(domain.n)
    signed = np.where(idx > n // 2, idx - n, idx)
    dist = np.sqrt(np.sum((signed * np.asarray(domain.spacing)) ** 2, axis=-1))
    order = np.argsort(dist, kind="stable")
    return signed[order], dist[order]


def _default_radii(domain):
    h = min(domain.spacing)
    kmax = int(np.floor(covering_radius(domain) / h + 1e-12)) + 1
    return h * np.arange(1, kmax + 1)


def _ball_sums(g, domain, radii):
    """``sums[k, c] = sum_{|x - c| < radii[k]} g(x)`` by exact shell accumulation."""
    offsets, dist = _offsets(domain)
    axes = tuple(range(domain.dim))
    sums = np.empty((len(radii), domain.num_sites))
    acc = np.zeros(domain.shape)
    j = 0
    for k, r in enumerate(radii):
        while j < len(dist) and dist[j] < r:
            acc = acc + np.roll(g, tuple(-int(o) for o in offsets[j]), axis=axes)
            j += 1
        sums[k] = acc.ravel()
    return sums


@dataclass
class MorreyNorm:
    """Discrete Morrey norm with its maximising ball.

    ``profile[k]`` is the largest scaled ball energy among balls of radius
    ``radii[k]`` (before the ``1/p`` root).
    """

    p: float
    lam: float
    value: float
    center: tuple
    center_index: int
    radius: float
    radii: np.ndarray = field(repr=False, default=None)
    profile: np.ndarray = field(repr=False, default=None)

    def to_dict(self):
        return {"p": self.p, "lambda": self.lam, "value": self.value,
                "center": list(self.center), "center_index": self.center_index,
                "radius": self.radius}


def _validate(p, lam, domain, allow_supercritical):
    if not p >= 1:
        raise ConfigurationError(f"Morrey exponent p must be >= 1, got {p}")
    if not lam > 0:
        raise ConfigurationError(f"Morrey parameter lambda must be positive, got {lam}")
    if lam > domain.dim and not allow_supercritical:
        raise ConfigurationError(f"Morrey parameter lambda must be <= m = {domain.dim}")


def morrey_norm(magnitude, domain, p, lam, radii=None, allow_supercritical=False):
    """``sup_{c, r} (r^(lam - m) h^m sum_{|x - c| < r} |f|^p)^(1/p)``.

    Balls are centred at lattice sites, with minimum-image Euclidean
    distance and radii ``h, 2h, ...`` up to the first radius exceeding the
    covering radius (so the whole lattice is one of the balls).  Ties go to
    the smallest centre index, then the smallest radius.
    """
    _validate(p, lam, domain, allow_supercritical)
    f = np.abs(np.asarray(magnitude, dtype=float))
    if f.shape != domain.shape:
        raise ConfigurationError(f"magnitude field of shape {f.shape} does not match lattice")
    radii = _default_radii(domain) if radii is None else np.asarray(radii, dtype=float)
    if radii.size == 0 or np.any(radii <= 0):
        raise ConfigurationError("no admissible balls")
    sums = _ball_sums(f ** p, domain, radii)
    scaled = (radii ** (lam - domain.dim))[:, None] * domain.cell_volume * sums
    best = float(np.max(scaled))
    ties = scaled >= best * (1 - _TIE_RTOL)
    k_idx, c_idx = np.nonzero(ties)
    pick = np.lexsort((k_idx, c_idx))[0]
    c, k = int(c_idx[pick]), int(k_idx[pick])
    center = tuple(int(v) for v in np.unravel_index(c, domain.shape))
    return MorreyNorm(float(p), float(lam), best ** (1.0 / p), center, c, float(radii[k]),
                      radii, np.max(scaled, axis=1))


def morrey_profile(norm: MorreyNorm, radius):
    """Worst-case norm over balls of radius at most ``radius``."""
    mask = norm.radii <= radius * (1 + 1e-12)
    if not np.any(mask):
        return 0.0
    return float(np.max(norm.profile[mask])) ** (1.0 / norm.p)


def lp_norm(magnitude, domain, p):
    f = np.abs(np.asarray(magnitude, dtype=float))
    return float((np.sum(f ** p) * domain.cell_volume) ** (1.0 / p))


def _dphi_magnitude(phi):
    return np.sqrt(np.sum(differential(phi) ** 2, axis=(-2, -1)))


def _psi_magnitude(psi_values):
    return np.sqrt(np.real(np.sum(np.conj(psi_values) * psi_values, axis=(-2, -1))))


@dataclass
class SmallnessReport:
    epsilon: float
    dphi_norm: float
    psi_norm: float
    total: float
    satisfied_full: bool
    table: list
    largest_radius: float | None
    extra_psi_norm: float | None = None
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {"epsilon": self.epsilon, "dphi_M22": self.dphi_norm, "psi_M42": self.psi_norm,
                "total": self.total, "satisfied_full": self.satisfied_full,
                "table": [dict(row) for row in self.table],
                "largest_radius": self.largest_radius,
                "psi_M2_2s-2": self.extra_psi_norm, "notes": list(self.notes)}


def smallness_check(phi: MapField, psi: SpinorField, epsilon, s=None):
    """``||d phi||_{M^{2,2}} + ||psi||_{M^{4,2}}`` on the lattice and on sub-balls.

    The table lists the worst case over all balls of radius ``R`` for
    dyadic ``R = covering radius / 2^j`` (down to one lattice spacing) and
    reports the largest ``R`` where the sum is at most ``epsilon``.  For
    ``s > 4`` the norm ``||psi||_{M^{2, 2s-2}}`` is reported as well.
    """
    if not epsilon > 0:
        raise ConfigurationError("epsilon must be positive")
    dom = phi.domain
    dn = morrey_norm(_dphi_magnitude(phi), dom, 2, 2, allow_supercritical=True)
    pm = _psi_magnitude(psi.values)
    pn = morrey_norm(pm, dom, 4, 2, allow_supercritical=True)
    total = dn.value + pn.value
    h = min(dom.spacing)
    R = covering_radius(dom) + h
    rows = []
    largest = None
    while R >= h * (1 - 1e-12):
        a, b = morrey_profile(dn, R), morrey_profile(pn, R)
        ok = a + b <= epsilon
        rows.append({"radius": R, "dphi": a, "psi": b, "total": a + b, "ok": bool(ok)})
        if ok and largest is None:
            largest = R
        R /= 2
    extra = None
    notes = []
    if dom.dim != 2:
        notes.append("the M^{2,2} / M^{4,2} pair is scale-invariant only for m = 2")
    if s is not None and s > 4:
        extra = morrey_norm(pm, dom, 2, 2 * s - 2, allow_supercritical=True).value
    return SmallnessReport(float(epsilon), dn.value, pn.value, total, bool(total <= epsilon),
                           rows, largest, extra, notes)


def coupling_energy(phi: MapField, psi: SpinorField):
    """Pointwise ``|d phi|^2 + |psi|^4`` and its integral."""
    dens = np.sum(differential(phi) ** 2, axis=(-2, -1)) + _psi_magnitude(psi.values) ** 4
    return dens, float(np.sum(dens) * phi.domain.cell_volume)


def surrogate_norms(phi: MapField, psi: SpinorField, s=None):
    """Discrete ``W^{1,2}`` of ``phi``, ``W^{1,4/3}`` and ``L^t`` of ``psi``.

    ``t = 4`` for ``s <= 4`` (or no ``s``), else ``t = s``.  Reported only;
    membership in the continuum spaces is not decided at fixed resolution.
    """
    dom = phi.domain
    h = dom.cell_volume
    dphi2 = np.sum(differential(phi) ** 2, axis=(-2, -1))
    w12 = float(np.sqrt(np.sum(np.sum(phi.periodic_part() ** 2, axis=-1) + dphi2) * h))
    pm = _psi_magnitude(psi.values)
    grads = spinor_gradient(psi.values, dom, psi.spin)
    if phi.target.is_sphere:
        y = phi.values[..., None, None, :]
        grads = grads - np.sum(grads * y, axis=-1, keepdims=True) * y
    gm = np.sqrt(np.real(np.sum(np.conj(grads) * grads, axis=(-3, -2, -1))))
    r = 4.0 / 3.0
    w143 = float((np.sum(pm ** r + gm ** r) * h) ** (1 / r))
    t = 4 if s is None or s <= 4 else s
    return {"phi_W12": w12, "psi_W1_4/3": w143, "psi_Lt": lp_norm(pm, dom, t), "t": t}
