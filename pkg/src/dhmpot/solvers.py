"""Eigensolvers, gradient flow, uncoupled constructions and positivity analysis."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from . import potentials as pot
from .clifford_lattice import make_clifford
from .dirac import DENSE_CAP, dirac_twisted, twisted_dirac_apply
from .errors import ConfigurationError, ConstructionUnavailable, ConvergenceError
from .fields import SpinorField, project_spinor_tangent, project_to_target, tangent_frame
from .records import build_record
from .variational import el_residual, tension

__all__ = [
    "SpectrumResult",
    "FlowConfig",
    "PositivityReport",
    "dirac_spectrum",
    "laplacian_max_eigenvalue",
    "select_eigenmode",
    "positivity_report",
    "flow_to_critical_point",
    "make_uncoupled",
]

SPINOR_MODES = ("fixed-eigenmode", "re-solve-each-step")


@dataclass
class SpectrumResult:
    """Eigenpairs of the twisted Dirac operator, sorted by eigenvalue.

    ``eigenspinors`` has shape ``(k, *grid, S, q)``; each is L2-normalised.
    """

    eigenvalues: np.ndarray
    eigenspinors: np.ndarray
    requested: int
    converged: int
    residuals: np.ndarray
    orthonormality_defect: float
    partial: bool = False
    method: str = "dense"
    spin: object = None
    domain: object = None

    def spinor(self, j):
        return SpinorField(self.domain, self.spin, self.eigenspinors[j])


def _frame_ops(phi, spin):
    dom = phi.domain
    S = make_clifford(dom.dim).spinor_dim
    E = tangent_frame(phi.values, phi.target)
    k = E.shape[-1]
    grid = tuple(dom.n)
    scale = 1.0 / np.sqrt(dom.cell_volume)

    def to_field(c):
        c = np.asarray(c).reshape(np.shape(c)[:-1] + grid + (S, k))
        return scale * np.einsum("...qk,...sk->...sq", E, c)

    def from_field(v):
        c = np.einsum("...qk,...sq->...sk", E, v) / scale
        return c.reshape(c.shape[:c.ndim - dom.dim - 2] + (-1,))

    return to_field, from_field, dom.num_sites * S * k


def _finish(phi, spin, vals, fields, requested, partial, method):
    dom = phi.domain
    h = dom.cell_volume
    residuals = np.array([
        np.sqrt(np.real(np.vdot(r, r)) * h) for r in
        (twisted_dirac_apply(f, phi, spin, check=False) - lam * f for lam, f in zip(vals, fields))])
    flat = fields.reshape(len(vals), -1)
    gram = flat.conj() @ flat.T * h
    defect = float(np.max(np.abs(gram - np.eye(len(vals))))) if len(vals) else 0.0
    return SpectrumResult(np.asarray(vals, dtype=float), fields, requested, len(vals),
                          residuals, defect, partial, method, spin, dom)


def dirac_spectrum(phi, spin, count=None, dense=None, tol=1e-12):
    """Eigenpairs of the twisted Dirac operator nearest zero.

    ``count=None`` returns the full spectrum (dense only).  Dense ``eigh``
    is used up to :data:`DENSE_CAP` coordinates; larger problems use
    Lanczos on ``D^2`` (smallest eigenvalues) followed by Rayleigh-Ritz with
    ``D`` itself.  Non-convergence of Lanczos returns a flagged partial
    result.
    """
    to_field, from_field, size = _frame_ops(phi, spin)
    if dense is None:
        dense = size <= DENSE_CAP
    if count is None:
        count = size
        if not dense:
            raise ConfigurationError("full spectrum requires dense assembly")
    count = int(min(count, size))
    if dense:
        op, _ = dirac_twisted(phi, spin)
        vals, vecs = np.linalg.eigh(op.matrix)
        order = np.argsort(np.abs(vals), kind="stable")[:count]
        order = np.sort(order)
        vals, vecs = vals[order], vecs[:, order]
        return _finish(phi, spin, vals, to_field(vecs.T), count, False, "dense")

    def apply_d(c):
        return from_field(twisted_dirac_apply(to_field(c), phi, spin, check=False))

    def apply_real(x):
        # D^2 on C^size written as a real symmetric operator on R^(2 size)
        x = np.asarray(x).ravel()
        y = apply_d(apply_d(x[:size] + 1j * x[size:]))
        return np.concatenate([y.real, y.imag])

    lin = LinearOperator((2 * size, 2 * size), matvec=apply_real, dtype=float)
    k = min(2 * count + 8, 2 * size - 2)
    v0 = np.random.default_rng(size).standard_normal(2 * size)
    partial = False
    try:
        _, X = eigsh(lin, k=k, which="SA", tol=tol, v0=v0, maxiter=20 * size)
    except ArpackNoConvergence as exc:
        X = exc.eigenvectors
        partial = True
    if X is None or X.shape[1] == 0:
        empty = np.zeros((0,) + tuple(phi.domain.n) + (make_clifford(phi.domain.dim).spinor_dim, phi.q))
        return SpectrumResult(np.zeros(0), empty, count, 0, np.zeros(0), 0.0, True, "lanczos",
                              spin, phi.domain)
    # complex span of the realified eigenvectors, rank-revealing orthonormalisation
    U, sv, _ = np.linalg.svd(X[:size] + 1j * X[size:], full_matrices=False)
    Q = U[:, sv > 1e-8 * sv[0]]
    DQ = np.stack([apply_d(Q[:, j]) for j in range(Q.shape[1])], axis=1)
    H = Q.conj().T @ DQ
    theta, Y = np.linalg.eigh(0.5 * (H + H.conj().T))
    vecs = Q @ Y
    order = np.sort(np.argsort(np.abs(theta), kind="stable")[:count])
    theta, vecs = theta[order], vecs[:, order]
    return _finish(phi, spin, theta, to_field(vecs.T), count, partial or len(theta) < count,
                   "lanczos")


def laplacian_max_eigenvalue(domain):
    """Largest eigenvalue of ``-Laplacian`` with the Nyquist mode removed."""
    return float(sum(((n // 2 - 1) * 2 * np.pi / L) ** 2 for n, L in zip(domain.n, domain.length)))


# -- mode selection ----------------------------------------------------------

def select_eigenmode(spectrum: SpectrumResult, selector, tol=1e-8):
    """Pick one eigenspinor: ``kernel``, ``lowest-positive``, ``eigenvalue:<lam>``
    or ``index:<j>`` (position in the sorted list).  Returns ``(lam, values)``.
    """
    vals = spectrum.eigenvalues
    if selector == "kernel":
        idx = np.flatnonzero(np.abs(vals) <= tol)
        if idx.size == 0:
            raise ConstructionUnavailable("no kernel for this spin structure and map")
    elif selector == "lowest-positive":
        idx = np.flatnonzero(vals > tol)
        if idx.size == 0:
            raise ConstructionUnavailable("no positive eigenvalue among computed modes")
        idx = idx[np.argmin(vals[idx])][None]
    elif selector.startswith("eigenvalue:"):
        lam = float(selector.split(":", 1)[1])
        idx = np.flatnonzero(np.abs(vals - lam) <= tol)
        if idx.size == 0:
            raise ConstructionUnavailable(f"no eigenvalue {lam:g} in the computed spectrum")
    elif selector.startswith("index:"):
        j = int(selector.split(":", 1)[1])
        if not 0 <= j < vals.size:
            raise ConstructionUnavailable(f"eigenmode index {j} out of range")
        idx = np.array([j])
    else:
        raise ConfigurationError(f"unknown spinor selector {selector!r}")
    j = int(idx[0])
    return float(vals[j]), spectrum.eigenspinors[j]


# -- positivity --------------------------------------------------------------

@dataclass
class PositivityReport:
    """Truncated positivity functional ``sum |a_J|^2 lam_J - 2 int V``."""

    minimum: float
    direction: np.ndarray
    modes: np.ndarray
    bounded_below: bool
    trend: list
    method: str
    exp_dominates: bool | None = None
    notes: list = field(default_factory=list)

    def to_dict(self):
        d = np.asarray(self.direction)
        return {"minimum": self.minimum,
                "direction_re": [float(v) for v in d.real],
                "direction_im": [float(v) for v in d.imag],
                "modes": [float(v) for v in self.modes],
                "bounded_below": self.bounded_below,
                "trend": [[float(c), float(v)] for c, v in self.trend],
                "method": self.method, "exp_dominates": self.exp_dominates,
                "notes": list(self.notes)}


def _truncated_functional(spectrum, V, phi, modes_idx):
    lam = spectrum.eigenvalues[modes_idx]
    basis = spectrum.eigenspinors[modes_idx]
    h = phi.domain.cell_volume

    def parts(alpha):
        psi = np.tensordot(alpha, basis, axes=1)
        spec = float(np.sum(np.abs(alpha) ** 2 * lam))
        with np.errstate(over="ignore"):
            pv = float(np.sum(pot.eval_V(V, phi.values, psi, phi.target)) * h)
        return spec, pv

    def value(alpha):
        spec, pv = parts(alpha)
        return spec - 2 * pv

    return value, parts


SCALES = (1.0, 2.0, 4.0, 8.0, 16.0)


def positivity_report(spectrum: SpectrumResult, V, phi, basis_cutoff=None, rng=None):
    """Minimise the truncated positivity functional over unit coefficient vectors.

    The basis is the ``basis_cutoff`` computed eigenspinors (all if
    ``None``).  For ``V = 0`` the minimum is ``min lam_J`` and for the mass
    potential ``min lam_J - lam``; both are read off the spectrum directly.
    Other potentials are minimised numerically (a grid on the unit sphere of
    ``C^2`` plus Nelder-Mead for two modes, seeded restarts otherwise).
    ``trend`` evaluates the functional along ``c * direction``.
    """
    n = spectrum.eigenvalues.size if basis_cutoff is None else min(basis_cutoff, spectrum.eigenvalues.size)
    if n == 0:
        raise ConfigurationError("positivity analysis needs at least one eigenpair")
    idx = np.arange(n)
    lam = spectrum.eigenvalues[idx]
    value, parts = _truncated_functional(spectrum, V, phi, idx)
    notes = []
    if V.kind in ("zero", "v3"):
        j = int(np.argmin(lam))
        shift = 0.0 if V.kind == "zero" else V.lam
        minimum = float(lam[j] - shift)
        direction = np.zeros(n, dtype=complex)
        direction[j] = 1.0
        method = "exact"
        trend = [(c, c * c * minimum) for c in SCALES]
        bounded = minimum >= 0
        if not bounded:
            notes.append("negative quadratic direction: functional unbounded below")
        return PositivityReport(minimum, direction, lam, bounded, trend, method, None, notes)

    rng = np.random.default_rng(0) if rng is None else rng
    if n == 1:
        direction = np.ones(1, dtype=complex)
        minimum = value(direction)
        method = "single-mode"
    elif n == 2:
        best = None
        for th in np.linspace(0, np.pi / 2, 33):
            for om in np.linspace(0, 2 * np.pi, 32, endpoint=False):
                a = np.array([np.cos(th), np.exp(1j * om) * np.sin(th)])
                v = value(a)
                if best is None or v < best[0]:
                    best = (v, th, om)

        def f(x):
            return value(np.array([np.cos(x[0]), np.exp(1j * x[1]) * np.sin(x[0])]))

        res = optimize.minimize(f, [best[1], best[2]], method="Nelder-Mead",
                                options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 2000})
        x = res.x if res.fun <= best[0] else [best[1], best[2]]
        direction = np.array([np.cos(x[0]), np.exp(1j * x[1]) * np.sin(x[0])])
        minimum = float(min(res.fun, best[0]))
        method = "grid+nelder-mead"
    else:
        def f(x):
            a = x[:n] + 1j * x[n:]
            return value(a / np.linalg.norm(a))

        best = None
        for _ in range(8):
            res = optimize.minimize(f, rng.standard_normal(2 * n), method="Nelder-Mead",
                                    options={"xatol": 1e-9, "fatol": 1e-12, "maxiter": 400 * n})
            if best is None or res.fun < best.fun:
                best = res
        a = best.x[:n] + 1j * best.x[n:]
        direction = a / np.linalg.norm(a)
        minimum = float(best.fun)
        method = "nelder-mead-restarts"
    trend = [(c, value(c * direction)) for c in SCALES]
    vals = [v for _, v in trend]
    bounded = bool(minimum >= 0 or np.all(np.diff(vals) > 0))
    exp_dom = None
    if V.kind == "v4":
        spec, pv = parts(SCALES[-1] * direction)
        exp_dom = bool(not np.isfinite(pv) or -2 * pv > abs(spec))
        if exp_dom:
            notes.append("exponential term dominates the spectral part at large amplitude")
    if minimum < 0:
        notes.append("negative value on the unit sphere of the truncated space")
    return PositivityReport(float(minimum), direction, lam, bounded, trend, method, exp_dom, notes)


# -- gradient flow -----------------------------------------------------------

@dataclass
class FlowConfig:
    """Explicit flow settings; ``step=None`` means ``1 / lambda_max``."""

    step: float | None = None
    max_iter: int = 5000
    tolerance: float = 1e-8
    spinor_mode: str = "fixed-eigenmode"
    damping: float = 0.5
    fixed_point_iter: int = 200

    def __post_init__(self):
        if self.step is not None and not self.step > 0:
            raise ConfigurationError("flow step must be positive")
        if self.max_iter < 0:
            raise ConfigurationError("max_iter must be non-negative")
        if not self.tolerance > 0:
            raise ConfigurationError("tolerance must be positive")
        if self.spinor_mode not in SPINOR_MODES:
            raise ConfigurationError(f"spinor mode must be one of {SPINOR_MODES}")
        if not 0 < self.damping <= 1:
            raise ConfigurationError("damping must lie in (0, 1]")

    def resolved_step(self, domain):
        bound = 2.0 / laplacian_max_eigenvalue(domain)
        step = 1.0 / laplacian_max_eigenvalue(domain) if self.step is None else self.step
        if step > bound:
            raise ConfigurationError(
                f"step {step:g} exceeds the explicit stability bound {bound:g}")
        return step


def _normalise(values, domain):
    norm = np.sqrt(np.real(np.vdot(values, values)) * domain.cell_volume)
    return values / norm if norm > 0 else values


def _solve_spinor(phi, spin, selector, V, cfg):
    """Spinor for the current map: eigenmode, then a damped fixed point for
    nonlinear spinor equations."""
    if selector == "zero":
        return SpinorField.zeros(phi.domain, spin, phi.q).values
    spec = dirac_spectrum(phi, spin, count=None if _dense_ok(phi) else 16)
    _, values = select_eigenmode(spec, selector)
    values = _normalise(values, phi.domain)
    if V.kind in ("v1", "v2"):
        values = _fixed_point(phi, spin, V, values, cfg)
    return values


def _dense_ok(phi):
    return _frame_ops(phi, None)[2] <= DENSE_CAP


def _fixed_point(phi, spin, V, values, cfg):
    """``psi <- (1 - d) psi + d D^+ V_psi(psi)`` with the dense pseudo-inverse."""
    to_field, from_field, _ = _frame_ops(phi, spin)
    op, _ = dirac_twisted(phi, spin)
    pinv = np.linalg.pinv(op.matrix, rcond=1e-10, hermitian=True)
    d = cfg.damping
    for _ in range(cfg.fixed_point_iter):
        rhs = pot.grad_psi_V(V, phi.values, values, phi.target)
        new = (1 - d) * values + d * to_field(pinv @ from_field(rhs))
        if np.max(np.abs(new - values)) < 1e-14:
            return new
        values = new
    return values


def flow_to_critical_point(phi0, selector, V, config: FlowConfig, spin, seed=None,
                           config_hash=None, jacobi=True):
    """Explicit gradient flow for the map alternating with spinor solves.

    ``phi <- project(phi + step * map_residual)``; the spinor is obtained by
    ``selector`` (``zero``, ``kernel``, ``lowest-positive``,
    ``eigenvalue:<lam>``, ``index:<j>``).  In fixed-eigenmode mode the first
    spinor is carried along by tangential projection and renormalisation.
    Raises :class:`ConvergenceError` on divergence (residual up 10x over
    100 steps) or when the iteration budget runs out.
    """
    step = config.resolved_step(phi0.domain)
    phi = phi0.copy()
    psi_vals = _solve_spinor(phi, spin, selector, V, config)
    history = []
    for it in range(config.max_iter + 1):
        psi = SpinorField(phi.domain, spin, psi_vals)
        res = el_residual(phi, psi, V)
        r = res.max_norm
        history.append(r)
        if not np.isfinite(r):
            raise ConvergenceError("residual became non-finite", history)
        if r <= config.tolerance:
            return build_record(phi, psi, V, config.tolerance, seed=seed,
                                config_hash=config_hash, jacobi=jacobi,
                                iterations=it, history=history)
        if it >= 100 and r > 10 * history[it - 100]:
            raise ConvergenceError(f"flow diverged at iteration {it} (residual {r:.3e})", history)
        if it == config.max_iter:
            break
        phi = project_to_target(phi.values + step * res.map_residual, phi.target,
                                phi.domain, phi.winding)
        if config.spinor_mode == "re-solve-each-step":
            psi_vals = _solve_spinor(phi, spin, selector, V, config)
        elif selector != "zero":
            psi_vals = _normalise(project_spinor_tangent(psi_vals, phi), phi.domain)
            if V.kind in ("v1", "v2"):
                psi_vals = _fixed_point(phi, spin, V, psi_vals, config)
    tail = history[max(0, min(int(0.9 * len(history)), len(history) - 2)):]
    decreasing = len(tail) > 1 and tail[-1] < tail[0]
    raise ConvergenceError(
        f"no convergence in {config.max_iter} iterations (residual {history[-1]:.3e}, "
        f"{'still decreasing' if decreasing else 'not decreasing'} over the last 10%)",
        history)


# -- uncoupled constructions -------------------------------------------------

RECIPES = ("zero", "kernel", "eigen")


def make_uncoupled(phi, spin, recipe, V=None, eigenvalue=None, tolerance=1e-8,
                   seed=None, config_hash=None, jacobi=True):
    """Critical point from a harmonic map and a zero, kernel or eigen spinor.

    The pair is verified with :func:`el_residual`; incompatible data raises
    :class:`ConstructionUnavailable`.  Curvature-coupled potentials admit
    only the zero spinor.
    """
    V = pot.PotentialSpec.zero() if V is None else V
    if recipe not in RECIPES:
        raise ConfigurationError(f"unknown recipe {recipe!r}; expected one of {RECIPES}")
    tau = float(np.max(np.abs(tension(phi))))
    if tau > 1e-10:
        raise ConstructionUnavailable(f"map is not harmonic (tension {tau:.2e})")
    if V.kind == "v1" and recipe != "zero":
        raise ConstructionUnavailable("curvature-coupled potential admits only the zero spinor")
    if recipe == "zero":
        values = SpinorField.zeros(phi.domain, spin, phi.q).values
    else:
        if recipe == "eigen":
            if eigenvalue is None:
                eigenvalue = V.lam if V.kind == "v3" else None
            if eigenvalue is None:
                raise ConfigurationError("eigen recipe needs an eigenvalue")
            selector = f"eigenvalue:{eigenvalue!r}"
        else:
            selector = "kernel"
        spec = dirac_spectrum(phi, spin, count=None if _dense_ok(phi) else 24)
        _, values = select_eigenmode(spec, selector)
        values = _normalise(values, phi.domain)
    psi = SpinorField(phi.domain, spin, values)
    res = el_residual(phi, psi, V)
    if res.max_norm > tolerance:
        raise ConstructionUnavailable(
            f"recipe {recipe!r} does not give a critical point here "
            f"(residuals {res.map_norm:.2e}, {res.spinor_norm:.2e})")
    return build_record(phi, psi, V, tolerance, seed=seed, config_hash=config_hash,
                        jacobi=jacobi, notes=[f"recipe {recipe}"])
