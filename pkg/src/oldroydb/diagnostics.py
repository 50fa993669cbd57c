"""Numerical checks of the energy-estimate structure along simulated flows.

Every inequality is evaluated with constant one and the observed ratio is
reported; nothing is asserted against a theoretical constant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from . import littlewood_paley as lp
from . import solver as so
from . import spectral as sp
from .spectral import SYM, TENSOR, SpectralField


class PreconditionError(ValueError):
    pass


def _check_divfree(u, tol=1e-8):
    d = np.max(np.abs(sp.div(u).coeffs))
    scale = max(np.max(np.abs(sp.grad(u).coeffs)), 1e-300)
    if d > tol * scale:
        raise PreconditionError(f"velocity is not divergence-free (relative residual {d / scale:.2e})")


def _partition(state_or_grid, part, j0=2):
    if part is not None:
        return part
    grid = getattr(state_or_grid, "grid", state_or_grid)
    return lp.build_partition(grid, j0)


def _as_tensor(f):
    """Full ``TENSOR`` copy of a symmetric or general tensor field."""
    if f.rank == TENSOR:
        return f
    g = f.grid
    return SpectralField(g, TENSOR, f.full().reshape((g.n * g.n,) + g.shape), f.real)


# -- exact identities ------------------------------------------------------------


def cancellation_residual(state, j, part=None, check=True):
    """``|<D_j P div tau, D_j u> + <D_j D(u), D_j tau>| / (||D_j u|| ||D_j tau||)``.

    Zero in exact arithmetic for divergence-free ``u`` and symmetric ``tau``.
    With ``check=False`` a general (non-symmetric) ``TENSOR`` stress is
    accepted, to exhibit the role of symmetry.
    """
    u, tau = state.u, state.tau
    part = _partition(u, part)
    _check_divfree(u)
    if tau.rank != SYM:
        if check:
            raise PreconditionError("stress must be symmetric")
        if tau.rank != TENSOR:
            raise PreconditionError(f"stress has rank {tau.rank}")
    sym = part.symbol(j)
    uj = u.multiply_modes(sym)
    tj = _as_tensor(tau.multiply_modes(sym))
    norm = uj.norm_l2() * tj.norm_l2()
    if norm == 0:
        return 0.0
    D, _ = sp.sym_skew_parts(u)
    first = sp.inner(sp.leray_project(sp.div(tau)).multiply_modes(sym), uj)
    second = sp.inner(_as_tensor(D.multiply_modes(sym)), tj)
    return abs(first + second) / norm


def _target_field(state, target):
    if target == "u":
        return state.u
    if target == "tau":
        return state.tau
    ev = so.effective_variables(state)
    if target in ("gamma", "Gamma"):
        return ev.gamma
    if target == "w":
        return ev.w
    raise ValueError(f"unknown transport target {target!r}")


def transport_residual(state, j, target="u", part=None, check=True):
    """``|<u.grad D_j z, D_j z>| / (||u||_inf ||D_j z||^2)`` with dealiased products."""
    u = state.u
    part = _partition(u, part)
    if check:
        _check_divfree(u)
    z = _target_field(state, target).multiply_modes(part.symbol(j))
    umax = float(np.max(np.sqrt(np.sum(sp.physical(u).reshape(u.grid.n, -1) ** 2, axis=0))))
    zz = sp.inner(z, z)
    if umax == 0 or zz == 0:
        return 0.0
    return abs(sp.inner(sp.advect(u, z), z)) / (umax * zz)


def identity_suite(state, part=None):
    """Max cancellation and transport residual over all blocks."""
    part = _partition(state, part)
    rows = {"cancellation": max(cancellation_residual(state, j, part) for j in part.blocks)}
    for target in ("u", "tau", "gamma", "w"):
        rows[f"transport_{target}"] = max(transport_residual(state, j, target, part) for j in part.blocks)
    rows["divergence"] = so.divergence_residual(state.u)
    rows["symmetry"] = so.symmetry_residual(state.tau)
    return rows


# -- per-block energy ledger ----------------------------------------------------


@dataclass
class EnergyLedger:
    """Per-snapshot terms of ``d/dt E_j`` with ``E_j = (||D_j u||^2/K1 + ||D_j tau||^2/K2)/2``.

    ``fd`` is the centered finite-difference derivative; ``viscous``,
    ``coupling``, ``commutator_u``, ``commutator_tau`` and ``constitutive`` sum to
    the exact instantaneous derivative.
    """

    j: int
    times: np.ndarray
    energy: np.ndarray
    fd: np.ndarray
    viscous: np.ndarray
    coupling: np.ndarray
    commutator_u: np.ndarray
    commutator_tau: np.ndarray
    constitutive: np.ndarray
    bernstein: np.ndarray
    residual: np.ndarray
    fd_error: np.ndarray
    coarse: bool

    @property
    def total(self):
        return self.viscous + self.coupling + self.commutator_u + self.commutator_tau + self.constitutive

    def rows(self):
        cols = ("times", "energy", "fd", "viscous", "coupling", "commutator_u", "commutator_tau",
                "constitutive", "bernstein", "residual")
        return cols, np.column_stack([getattr(self, c) for c in cols])


def block_energy(state, j, part, params):
    sym = part.symbol(j)
    uj = state.u.multiply_modes(sym)
    tj = state.tau.multiply_modes(sym)
    return 0.5 * (sp.inner(uj, uj) / params.k1 + sp.inner(tj, tj) / params.k2)


def block_energy_terms(state, j, part, params, linear=False):
    """Exact terms of ``d/dt E_j`` at one state (nonlinear terms zero when ``linear``)."""
    u, tau = state.u, state.tau
    sym = part.symbol(j)
    uj = u.multiply_modes(sym)
    tj = tau.multiply_modes(sym)
    guj = sp.grad(uj)
    D, _ = sp.sym_skew_parts(u)
    gu2 = sp.inner(guj, guj)
    uu = sp.inner(uj, uj)
    return {
        "viscous": -params.mu / params.k1 * gu2,
        "coupling": sp.inner(sp.leray_project(sp.div(tau)).multiply_modes(sym), uj)
        + sp.inner(D.multiply_modes(sym), tj),
        "commutator_u": 0.0 if linear else -(
            sp.inner(sp.advect(u, u).multiply_modes(sym), uj) - sp.inner(sp.advect(u, uj), uj)
        )
        / params.k1,
        "commutator_tau": 0.0 if linear else -(
            sp.inner(sp.advect(u, tau).multiply_modes(sym), tj) - sp.inner(sp.advect(u, tj), tj)
        )
        / params.k2,
        "constitutive": 0.0
        if linear
        else -sp.inner(sp.bilinear_F(tau, u, params.b).multiply_modes(sym), tj) / params.k2,
        "bernstein": gu2 / (4.0**j * uu) if uu > 0 else np.nan,
    }


# centered first-derivative stencils: order -> {offset: weight}
FD_STENCILS = {2: {1: 0.5}, 4: {1: 2.0 / 3.0, 2: -1.0 / 12.0}}


def _centered(E, h, order, stride=1):
    """Centered derivative of ``E`` at every index with a full stencil of step ``stride*h``."""
    w = FD_STENCILS[order]
    reach = stride * max(w)
    n = len(E)
    out = np.full(n, np.nan)
    i = np.arange(reach, n - reach)
    out[i] = sum(c * (E[i + stride * s] - E[i - stride * s]) for s, c in w.items()) / (stride * h)
    return out


def block_energy_balance(trajectory, j, coarse_tol=1e-3, order=2):
    """Energy bookkeeping for block ``j`` along a trajectory with stored states.

    The residual compares the centered difference (``order`` 2 or 4) of
    ``E_j`` with the sum of the exact terms, relative to the largest term.
    ``coarse`` is set when the difference between the ``h`` and ``2h``
    derivatives suggests the finite-difference error exceeds ``coarse_tol``.
    """
    if order not in FD_STENCILS:
        raise ValueError(f"finite-difference order must be one of {sorted(FD_STENCILS)}")
    states = trajectory.states
    reach = max(FD_STENCILS[order])
    if len(states) < 2 * reach + 1:
        raise ValueError(f"energy ledger needs at least {2 * reach + 1} stored states")
    t = np.array([s.t for s in states])
    if not np.allclose(np.diff(t), t[1] - t[0], rtol=1e-8, atol=0):
        raise ValueError("energy ledger needs a uniform output cadence")
    part, params = trajectory.partition, trajectory.config.params
    E = np.array([block_energy(s, j, part, params) for s in states])
    h = t[1] - t[0]
    idx = np.arange(reach, len(states) - reach)
    fd = _centered(E, h, order)[idx]
    terms = [block_energy_terms(states[i], j, part, params, trajectory.config.linear) for i in idx]
    col = {k: np.array([tm[k] for tm in terms]) for k in terms[0]}
    total = col["viscous"] + col["coupling"] + col["commutator_u"] + col["commutator_tau"] + col["constitutive"]
    scale = np.maximum.reduce([np.abs(col[k]) for k in ("viscous", "commutator_u", "commutator_tau", "constitutive")]
                              + [np.abs(fd)])
    with np.errstate(invalid="ignore", divide="ignore"):
        residual = np.where(scale > 0, np.abs(fd - total) / scale, 0.0)
        # Richardson: err(h) ~ |D(2h) - D(h)| / (2^order - 1)
        fd2 = _centered(E, h, order, stride=2)[idx]
        fd_err = np.where(scale > 0, np.abs(fd2 - fd) / (2**order - 1) / scale, 0.0)
    coarse = bool(np.nanmax(fd_err, initial=0.0) > coarse_tol) if np.any(np.isfinite(fd_err)) else False
    return EnergyLedger(j, t[idx], E[idx], fd, col["viscous"], col["coupling"], col["commutator_u"],
                        col["commutator_tau"], col["constitutive"], col["bernstein"], residual, fd_err, coarse)


BERNSTEIN_RANGE = ((3.0 / 4.0) ** 2, (8.0 / 3.0) ** 2)


# -- hybrid functional ------------------------------------------------------------


X_COMPONENTS = (
    "low_sup_u_tau",
    "low_int_u",
    "low_int_gamma",
    "high_sup_u",
    "high_sup_tau",
    "high_int_gamma",
    "high_int_u",
)


@dataclass
class XFunctional:
    times: np.ndarray
    components: dict
    p: float
    j0: int
    monotone: bool = True

    @property
    def total(self):
        return np.sum([self.components[k] for k in X_COMPONENTS], axis=0)

    @property
    def ratio(self):
        x0 = self.total[0]
        return self.total / x0 if x0 > 0 else np.full_like(self.total, np.nan)


def _running_max(a):
    return np.maximum.accumulate(a, axis=0)


def _running_int(t, a):
    out = np.zeros_like(a)
    if len(t) > 1:
        inc = 0.5 * (a[1:] + a[:-1]) * np.diff(t)[:, None]
        out[1:] = np.cumsum(inc, axis=0)
    return out


def _weighted(blocks, part, s, band):
    j = part.block_array
    sel = part.mask(band)
    return np.sum(blocks[:, sel] * 2.0 ** (s * j[sel]), axis=1)


def hybrid_functional(trajectory, p=None, j0=None, mono_tol=1e-12):
    """Series of the seven-component low/high functional ``X(t)``.

    Sup channels use the running max per block (Chemin-Lerner), integral
    channels the cumulative trapezoid per block.
    """
    cfg = trajectory.config
    p = float(cfg.p if p is None else p)
    if not 2 <= p < 4:
        raise ValueError(f"p must satisfy 2 <= p < 4, got {p}")
    if ("u", p) not in trajectory.blocks:
        raise ValueError(f"trajectory has no L^{p:g} channels")
    j0 = cfg.j0 if j0 is None else j0
    part = lp.build_partition(cfg.grid, j0)
    n = cfg.n
    t = np.asarray(trajectory.times, dtype=float)
    B = {(k, q): np.asarray(v) for (k, q), v in trajectory.blocks.items()}
    comp = {
        "low_sup_u_tau": _weighted(_running_max(B["u", 2.0]), part, n / 2 - 1, "low")
        + _weighted(_running_max(B["tau", 2.0]), part, n / 2 - 1, "low"),
        "low_int_u": _weighted(_running_int(t, B["u", 2.0]), part, n / 2 + 1, "low"),
        "low_int_gamma": _weighted(_running_int(t, B["gamma", 2.0]), part, n / 2 + 1, "low"),
        "high_sup_u": _weighted(_running_max(B["u", p]), part, n / p - 1, "high"),
        "high_sup_tau": _weighted(_running_max(B["tau", p]), part, n / p, "high"),
        "high_int_gamma": _weighted(_running_int(t, B["gamma", p]), part, n / p, "high"),
        "high_int_u": _weighted(_running_int(t, B["u", p]), part, n / p + 1, "high"),
    }
    xf = XFunctional(t, comp, p, j0)
    total = xf.total
    xf.monotone = bool(np.all(np.diff(total) >= -mono_tol * max(total.max(initial=0.0), 1e-300)))
    return xf


def initial_norm(state, part, p):
    """The data norm ``||(u0,tau0)^l||_{B^{n/2-1}_{2,1}} + ||u0^h||_{B^{n/p-1}_{p,1}} + ||tau0^h||_{B^{n/p}_{p,1}}``."""
    n = state.grid.n
    return (
        lp.besov_norm(state.u, part, n / 2 - 1, 2, "low")
        + lp.besov_norm(state.tau, part, n / 2 - 1, 2, "low")
        + lp.besov_norm(state.u, part, n / p - 1, p, "high")
        + lp.besov_norm(state.tau, part, n / p, p, "high")
    )


# -- oscillating data scaling ---------------------------------------------------


@dataclass
class ScalingFit:
    eps: np.ndarray
    norms: np.ndarray
    slope: float
    intercept: float
    residual: float
    expected: float


def fit_exponent(eps, values):
    """Least-squares ``log(values) = slope log(eps) + intercept``; returns ``(slope, intercept, rms)``."""
    x, y = np.log(np.asarray(eps, float)), np.log(np.asarray(values, float))
    (slope, intercept), res, *_ = np.polyfit(x, y, 1, full=True)
    rms = float(np.sqrt(res[0] / x.size)) if res.size else 0.0
    return float(slope), float(intercept), rms


def oscillating_norm(u, part, p):
    """``||u^l||_{B^{n/2-1}_{2,1}} + ||u^h||_{B^{n/p-1}_{p,1}}``."""
    n = u.grid.n
    return lp.besov_norm(u, part, n / 2 - 1, 2, "low") + lp.besov_norm(u, part, n / p - 1, p, "high")


def scaling_fit(envelope_width, eps_list, p, grid, j0=1, amplitude=1.0, workers=1):
    """Fit the exponent of the oscillating-data norm against ``eps``."""
    eps = np.sort(np.asarray(eps_list, dtype=float))[::-1]
    if eps.size < 4:
        raise ValueError("scaling fit needs at least four eps values")
    if np.log2(eps.max() / eps.min()) < 3 - 1e-12:
        raise ValueError("eps values must span at least three octaves")
    part = lp.build_partition(grid, j0)

    def one(e):
        u = so.oscillating_velocity(grid, e, envelope_width) * amplitude
        return oscillating_norm(u, part, p)

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(workers) as ex:
            norms = np.array(list(ex.map(one, eps)))
    else:
        norms = np.array([one(e) for e in eps])
    slope, intercept, rms = fit_exponent(eps, norms)
    return ScalingFit(eps, norms, slope, intercept, rms, 1.0 - grid.n / p)


# -- estimate chain ---------------------------------------------------------------


@dataclass
class ChainEntry:
    name: str
    lhs: np.ndarray
    rhs: np.ndarray
    ratio: list
    sup: float | None
    finite: bool
    growing: bool


@dataclass
class ChainReport:
    times: np.ndarray
    entries: dict = field(default_factory=dict)

    def sups(self):
        return {k: e.sup for k, e in self.entries.items()}


def _chain_entry(name, lhs, rhs, growth_factor):
    ratio = [None if r == 0 and l == 0 else (math.inf if r == 0 else l / r) for l, r in zip(lhs, rhs)]
    vals = np.array([r for r in ratio if r is not None], dtype=float)
    finite = bool(np.all(np.isfinite(vals)))
    sup = float(vals.max()) if vals.size else None
    growing = False
    if vals.size >= 4 and finite:
        half = vals.size // 2
        early = vals[:half].max()
        growing = bool(vals[half:].max() > growth_factor * max(early, 1e-300))
    return ChainEntry(name, np.asarray(lhs), np.asarray(rhs), ratio, sup, finite, growing)


def estimate_chain_monitor(trajectory, p=None, j0=None, growth_factor=2.0):
    """Evaluate the a priori estimate chain with unit constants.

    low_energy
        low (Gamma, u) sup norm plus dissipation integral against the low data
        norm plus ``X^2``.
    high_stress
        high stress sup norm plus damped-mode integral against the high stress
        data plus ``X^2``.
    high_velocity
        high velocity sup norm plus parabolic integral against the high
        velocity data, the damped-mode integral and ``X^2``.
    combined
        ``X(t)`` against ``X(0) + X(t)^2``.
    closure
        ``X(t)`` against ``exp(X(t)) X(0)``.
    """
    xf = hybrid_functional(trajectory, p, j0)
    cfg = trajectory.config
    part = lp.build_partition(cfg.grid, xf.j0)
    n, pp = cfg.n, xf.p
    t = xf.times
    B = {k: np.asarray(v) for k, v in trajectory.blocks.items()}
    c = xf.components
    X = xf.total
    X0 = X[0]
    low_gu_sup = _weighted(_running_max(B["gamma", 2.0] + B["u", 2.0]), part, n / 2 - 1, "low")
    low_gu_int = _weighted(_running_int(t, B["gamma", 2.0] + B["u", 2.0]), part, n / 2 + 1, "low")
    low_gu0 = _weighted(B["gamma", 2.0][:1] + B["u", 2.0][:1], part, n / 2 - 1, "low")[0]
    tau0_h = _weighted(B["tau", pp][:1], part, n / pp, "high")[0]
    u0_h = _weighted(B["u", pp][:1], part, n / pp - 1, "high")[0]
    rep = ChainReport(t)
    add = lambda name, lhs, rhs: rep.entries.__setitem__(name, _chain_entry(name, lhs, rhs, growth_factor))  # noqa: E731
    add("low_energy", low_gu_sup + low_gu_int, low_gu0 + X**2)
    add("high_stress", c["high_sup_tau"] + c["high_int_gamma"], tau0_h + X**2)
    add("high_velocity", c["high_sup_u"] + c["high_int_u"], u0_h + c["high_int_gamma"] + X**2)
    add("combined", X, X0 + X**2)
    add("closure", X, np.exp(X) * X0)
    return rep
