"""Pseudo-spectral time integration of the Oldroyd-B system without damping.

    d_t tau + u.grad tau + F(tau, grad u) = K2 D(u)
    d_t u + P(u.grad u) - mu Delta u = K1 P div tau,   div u = 0

The pressure is eliminated by the Leray projector.  Time stepping is an
integrating-factor Runge-Kutta 2 (Heun) scheme: the viscous factor
``exp(-mu |xi|^2 dt)`` is applied exactly and everything else explicitly.
The stress equation has no stiff term of its own.

Naming: the forcing of the effective-variable system is called ``f``, ``g``
and ``F_w`` here, to keep ``F`` for the constitutive bilinear form.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import linear_modes as lm
from . import littlewood_paley as lp
from . import spectral as sp
from .spectral import SYM, VECTOR, ConstitutiveParams, Grid, SpectralField

log = logging.getLogger(__name__)


class BlowUpError(RuntimeError):
    """The run left the resolved regime; ``trajectory`` holds what was computed."""

    def __init__(self, t, trajectory=None, reason="non-finite state"):
        super().__init__(f"{reason} at t={t:.6g}")
        self.t = t
        self.trajectory = trajectory


class StepSizeError(ValueError):
    """The time step violates the advective CFL bound or linear stability."""


class InitialDataError(ValueError):
    pass


@dataclass(frozen=True)
class State:
    t: float
    u: SpectralField
    tau: SpectralField

    @property
    def grid(self):
        return self.u.grid


@dataclass(frozen=True)
class EffectiveVariables:
    gamma: SpectralField  # Lambda^{-1} P div tau
    w: SpectralField  # Lambda Gamma - u
    G: SpectralField  # u - Lambda^{-1} Gamma


@dataclass(frozen=True)
class InitialSpec:
    """Initial data description.

    kind is one of ``random-band``, ``oscillating``, ``taylor-green``, ``file``.
    """

    kind: str = "random-band"
    amplitude: float = 1e-3
    tau_amplitude: float = 1e-3
    kmin: float = 1.0
    kmax: float = 4.0
    eps: float = 1.0 / 8.0
    envelope_width: float = 0.5
    path: str | None = None


@dataclass(frozen=True)
class SimConfig:
    n: int = 2
    N: int = 64
    b: float = 0.0
    mu: float = 1.0
    k1: float = 1.0
    k2: float = 1.0
    dt: float = 1e-2
    t_end: float = 1.0
    j0: int = 2
    p: float = 3.0
    output_every: float = 0.1
    snapshot_every: float | None = None
    initial: InitialSpec = field(default_factory=InitialSpec)
    dealias: str = "2/3"
    integrator: str = "ifrk2"
    linear: bool = False
    cfl: float = 0.5
    seed: int = 0
    keep_states: bool = False

    def __post_init__(self):
        if self.dt <= 0 or self.t_end < 0:
            raise ValueError("dt must be positive and t_end non-negative")
        if self.dealias != "2/3":
            raise ValueError(f"unsupported dealiasing rule {self.dealias!r}")
        if self.integrator != "ifrk2":
            raise ValueError(f"unsupported integrator {self.integrator!r}")
        if not 2 <= self.p < 4:
            raise ValueError(f"p must satisfy 2 <= p < 4, got {self.p}")
        ConstitutiveParams(self.b, self.mu, self.k1, self.k2)
        Grid(self.n, self.N)

    @property
    def grid(self):
        return Grid(self.n, self.N)

    @property
    def params(self):
        return ConstitutiveParams(self.b, self.mu, self.k1, self.k2)

    def steps_between(self, interval):
        k = interval / self.dt
        if abs(k - round(k)) > 1e-9 * max(1.0, k) or round(k) < 1:
            raise ValueError(f"interval {interval} is not a positive multiple of dt={self.dt}")
        return int(round(k))


# -- right-hand side -----------------------------------------------------------


class _Operator:
    """Precomputed multipliers and the fused explicit right-hand side."""

    def __init__(self, grid, params, linear=False):
        self.grid = grid
        self.params = params
        self.linear = linear
        self.mask = grid.dealias_mask
        k2 = grid.k2.copy()
        k2[grid.zero_mode] = 1.0
        self.k2safe = k2
        self.ik = 1j * grid.kd

    def project(self, uh):
        k = self.grid.k
        return uh - k * (np.sum(k * uh, axis=0) / self.k2safe)

    def full(self, th):
        g = self.grid
        out = np.empty((g.n, g.n) + g.shape, dtype=th.dtype)
        for c, (i, j) in enumerate(g.sym_index):
            out[i, j] = th[c]
            out[j, i] = th[c]
        return out

    def pack(self, t):
        return np.array([t[i, j] for i, j in self.grid.sym_index])

    def explicit(self, uh, th):
        """Everything but the viscous term: returns ``(N_u, N_tau)`` coefficients."""
        # non-finite input is reported by the callers as a blow-up
        with np.errstate(invalid="ignore", over="ignore"):
            return self._explicit(uh, th)

    def _explicit(self, uh, th):
        g, prm, ik = self.grid, self.params, self.ik
        n = g.n
        Th = self.full(th)
        Gh = uh[:, None] * ik[None, :]  # G[i, j] = d_j u_i
        Dh = 0.5 * (Gh + np.swapaxes(Gh, 0, 1))
        div_tau = np.sum(ik[None, :] * Th, axis=1)
        Nu = prm.k1 * div_tau
        Nt = prm.k2 * self.pack(Dh)
        if not self.linear:
            inv = lambda a: sp._ifftn(a, n).real  # noqa: E731
            fwd = lambda a: sp._fftn(a, n) * self.mask  # noqa: E731
            up = inv(uh)
            G = inv(Gh)
            tp = inv(th)
            gt = inv(th[:, None] * ik[None, :])  # (ncomp, n, ...)
            adv_u = np.einsum("j...,ij...->i...", up, G)
            adv_t = np.einsum("l...,cl...->c...", up, gt)
            T = self.full(tp)
            D = 0.5 * (G + np.swapaxes(G, 0, 1))
            W = 0.5 * (G - np.swapaxes(G, 0, 1))
            mm = lambda a, c: np.einsum("ik...,kj...->ij...", a, c)  # noqa: E731
            F = mm(T, W) - mm(W, T) + prm.b * (mm(D, T) + mm(T, D))
            F = self.pack(0.5 * (F + np.swapaxes(F, 0, 1)))
            Nu = Nu - fwd(adv_u)
            Nt = Nt - fwd(adv_t + F)
            self.umax = float(np.max(np.sqrt(np.sum(up**2, axis=0))))
        return self.project(Nu), Nt


def nonlinear_rhs(state, b=None, params=None, linear=False):
    """Full time derivative ``(du/dt, dtau/dt)`` including the viscous term.

    Raises :class:`BlowUpError` when the products are not finite.
    """
    params = params or ConstitutiveParams(b=0.0 if b is None else b)
    op = _Operator(state.grid, params, linear)
    Nu, Nt = op.explicit(state.u.coeffs, state.tau.coeffs)
    if not (np.all(np.isfinite(Nu)) and np.all(np.isfinite(Nt))):
        raise BlowUpError(state.t)
    du = Nu - params.mu * state.grid.k2 * state.u.coeffs
    return SpectralField(state.grid, VECTOR, du), SpectralField(state.grid, SYM, Nt)


def reference_rhs(state, params, linear=False):
    """Same right-hand side assembled from the generic spectral operators."""
    u, tau = state.u, state.tau
    D, _ = sp.sym_skew_parts(u)
    du = sp.leray_project(params.k1 * sp.div(tau)) + params.mu * sp.laplacian(u)
    dtau = params.k2 * D
    if not linear:
        du = du - sp.leray_project(sp.advect(u, u))
        dtau = dtau - sp.advect(u, tau) - sp.bilinear_F(tau, u, params.b)
    return du, dtau


# -- stepping ------------------------------------------------------------------


def amplification_matrix(r, dt, alpha=1.0, beta=1.0, mu=1.0):
    """One IF-RK2 step of the linear ``(Gamma, u)`` system at radius ``r``."""
    E = np.diag([1.0, math.exp(-mu * r * r * dt)])
    C = np.array([[0.0, -alpha * r], [beta * r, 0.0]])
    I = np.eye(2)
    return E + 0.5 * dt * (E @ C + C @ E @ (I + dt * C))


def linear_stability_radius(grid, dt, params):
    """Largest spectral radius of the IF-RK2 amplification over the dealiased radii."""
    alpha, beta, mu = lm.symbol_coefficients(params)
    radii = np.unique(np.round(grid.kmag[grid.dealias_mask & (grid.kmag > 0)], 12))
    return max(np.max(np.abs(np.linalg.eigvals(amplification_matrix(r, dt, alpha, beta, mu)))) for r in radii)


class Stepper:
    def __init__(self, grid, params, dt, linear=False, cfl=0.5):
        self.op = _Operator(grid, params, linear)
        self.dt = dt
        self.cfl = cfl
        self.E = np.exp(-params.mu * grid.k2 * dt)

    def check_cfl(self):
        umax = getattr(self.op, "umax", 0.0)
        if umax > 0 and self.dt > self.cfl * self.op.grid.dx / umax:
            raise StepSizeError(f"dt={self.dt} exceeds CFL bound {self.cfl * self.op.grid.dx / umax:.3g}")

    def __call__(self, state):
        op, dt, E = self.op, self.dt, self.E
        uh, th = state.u.coeffs, state.tau.coeffs
        Nu0, Nt0 = op.explicit(uh, th)
        self.check_cfl()
        u1 = E * (uh + dt * Nu0)
        t1 = th + dt * Nt0
        Nu1, Nt1 = op.explicit(u1, t1)
        u_new = op.project(E * uh + 0.5 * dt * (E * Nu0 + Nu1))
        t_new = th + 0.5 * dt * (Nt0 + Nt1)
        if not (np.all(np.isfinite(u_new)) and np.all(np.isfinite(t_new))):
            raise BlowUpError(state.t + dt)
        g = op.grid
        return State(state.t + dt, SpectralField(g, VECTOR, u_new), SpectralField(g, SYM, t_new))


def step(state, dt, params=None, linear=False, cfl=0.5):
    params = params or ConstitutiveParams()
    return Stepper(state.grid, params, dt, linear, cfl)(state)


# -- effective variables and initial data -----------------------------------


def gamma_of(tau):
    return sp.lambda_power(sp.leray_project(sp.div(tau)), -1)


def effective_variables(state):
    gamma = gamma_of(state.tau)
    w = sp.lambda_power(gamma, 1) - state.u
    G = state.u - sp.lambda_power(gamma, -1)
    return EffectiveVariables(gamma, w, G)


def periodic_gaussian(grid, width, center=None, images=1):
    """Gaussian bump of standard deviation ``width`` summed over neighbouring periods."""
    center = np.full(grid.n, np.pi) if center is None else np.asarray(center, float)
    L = 2 * np.pi
    out = np.zeros(grid.shape)
    shifts = np.arange(-images, images + 1)
    for m in np.array(np.meshgrid(*([shifts] * grid.n), indexing="ij")).reshape(grid.n, -1).T:
        d2 = sum((grid.x[i] - center[i] - L * m[i]) ** 2 for i in range(grid.n))
        out += np.exp(-d2 / (2 * width**2))
    return out


def oscillating_velocity(grid, eps, width, direction=None):
    """``P(sin(x_1/eps) phi(x) e)`` with ``1/eps`` a resolved integer frequency."""
    m = 1.0 / eps
    if abs(m - round(m)) > 1e-9 * m or round(m) < 1:
        raise InitialDataError(f"1/eps={m} must be an integer frequency")
    if round(m) > grid.N / 3:
        raise InitialDataError(f"frequency 1/eps={m:g} exceeds the dealiased band N/3={grid.N / 3:g}")
    e = np.zeros(grid.n)
    e[1 if direction is None else direction] = 1.0
    base = np.sin(round(m) * grid.x[0]) * periodic_gaussian(grid, width)
    u = sp.transform(base[None] * e[(slice(None),) + (None,) * grid.n], grid, VECTOR)
    return sp.leray_project(sp.dealias(u))


def taylor_green(grid, amplitude):
    x = grid.x
    if grid.n == 2:
        vals = np.array([np.sin(x[0]) * np.cos(x[1]), -np.cos(x[0]) * np.sin(x[1])])
    else:
        vals = np.array(
            [
                np.sin(x[0]) * np.cos(x[1]) * np.cos(x[2]),
                -np.cos(x[0]) * np.sin(x[1]) * np.cos(x[2]),
                np.zeros(grid.shape),
            ]
        )
    return sp.transform(amplitude * vals, grid, VECTOR)


def make_initial_data(spec, grid, rng=None):
    rng = np.random.default_rng(0) if rng is None else rng
    if spec.kind == "file":
        from .io import read_state

        state = read_state(spec.path)
        if state.grid != grid:
            raise InitialDataError(f"snapshot grid {state.grid} does not match {grid}")
        return State(0.0, sp.leray_project(state.u), state.tau)
    if spec.kind == "random-band":
        u = sp.random_divfree(grid, rng, kmin=spec.kmin, kmax=spec.kmax, amplitude=spec.amplitude)
    elif spec.kind == "oscillating":
        u = oscillating_velocity(grid, spec.eps, spec.envelope_width) * spec.amplitude
    elif spec.kind == "taylor-green":
        u = taylor_green(grid, spec.amplitude)
    else:
        raise InitialDataError(f"unknown initial data kind {spec.kind!r}")
    if spec.tau_amplitude > 0:
        tau = sp.random_field(grid, SYM, rng, kmin=spec.kmin, kmax=spec.kmax, amplitude=spec.tau_amplitude)
    else:
        tau = sp.zeros(grid, SYM)
    return State(0.0, sp.leray_project(u), tau)


# -- invariants and recording ------------------------------------------------


def divergence_residual(u):
    """Spectral ``max|div u| / max|grad u|`` (0 for a vanishing field)."""
    scale = np.max(np.abs(sp.grad(u).coeffs))
    return 0.0 if scale == 0 else float(np.max(np.abs(sp.div(u).coeffs)) / scale)


def symmetry_residual(tau):
    t = sp.physical(tau)
    scale = np.max(np.abs(t))
    return 0.0 if scale == 0 else float(np.max(np.abs(t - np.swapaxes(t, 0, 1))) / scale)


CHANNELS = ("u", "tau", "gamma")


@dataclass
class Trajectory:
    """Time series of block norms (and optionally states) of a run.

    ``blocks[(name, p)]`` is a list of per-block ``L^p`` norm arrays for the
    fields ``u``, ``tau`` and ``gamma = Lambda^{-1} P div tau``.
    """

    config: SimConfig
    partition: lp.DyadicPartition
    times: list = field(default_factory=list)
    blocks: dict = field(default_factory=dict)
    states: list = field(default_factory=list)
    invariants: list = field(default_factory=list)
    blew_up: bool = False
    message: str = ""

    def record(self, state, keep_state=False):
        cfg, part = self.config, self.partition
        fields = {"u": state.u, "tau": state.tau, "gamma": gamma_of(state.tau)}
        for name, f in fields.items():
            for p in sorted({2.0, float(cfg.p)}):
                self.blocks.setdefault((name, p), []).append(lp.block_norms(f, part, p))
        self.times.append(state.t)
        self.invariants.append(
            {
                "div": divergence_residual(state.u),
                "sym": symmetry_residual(state.tau),
                "real": max(sp.realness_defect(state.u), sp.realness_defect(state.tau))
                if np.any(state.u.coeffs) or np.any(state.tau.coeffs)
                else 0.0,
            }
        )
        if keep_state:
            self.states.append(state)

    def block_array(self, name, p):
        return np.array(self.blocks[(name, float(p))])

    def besov_series(self, name, s, p, band=None):
        """Instantaneous ``B^s_{p,1}`` (semi-)norm of a channel at every time."""
        arr = self.block_array(name, p)
        return np.array([lp.besov_from_blocks(a, self.partition, s, band) for a in arr])


def simulate(config, initial_state=None, callback=None):
    """Run ``config`` and return a :class:`Trajectory`.

    A blow-up raises :class:`BlowUpError` whose ``trajectory`` attribute holds
    the partial, flagged trajectory.
    """
    grid, params = config.grid, config.params
    part = lp.build_partition(grid, config.j0)
    state = initial_state or make_initial_data(config.initial, grid, np.random.default_rng(config.seed))
    nsteps = int(round(config.t_end / config.dt))
    if abs(nsteps * config.dt - config.t_end) > 1e-9 * max(1.0, config.t_end):
        raise ValueError("t_end must be a multiple of dt")
    rho = linear_stability_radius(grid, config.dt, params)
    if rho > 1.0 + 1e-12:
        raise StepSizeError(f"IF-RK2 is linearly unstable at dt={config.dt} (spectral radius {rho:.6f})")
    out_k = config.steps_between(config.output_every)
    snap_k = config.steps_between(config.snapshot_every) if config.snapshot_every else None
    traj = Trajectory(config, part)
    stepper = Stepper(grid, params, config.dt, config.linear, config.cfl)

    def keep(k):
        return config.keep_states or (snap_k is not None and k % snap_k == 0)

    traj.record(state, keep(0))
    for k in range(1, nsteps + 1):
        try:
            try:
                state = stepper(state)
            except StepSizeError as err:
                if k == 1:
                    raise
                # the data were admissible at t=0, so the growth is the solution's
                raise BlowUpError(state.t, reason=f"CFL violation ({err})") from err
        except BlowUpError as err:
            traj.blew_up = True
            traj.message = str(err)
            err.trajectory = traj
            raise
        state = replace(state, t=k * config.dt)
        if k % out_k == 0 or k == nsteps:
            traj.record(state, keep(k))
            if callback is not None:
                callback(state, traj)
    log.debug("simulated %d steps to t=%g", nsteps, state.t)
    traj.final_state = state
    return traj
