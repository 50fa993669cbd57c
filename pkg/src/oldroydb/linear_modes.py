"""Fourier-symbol analysis of the linearized stress/velocity system.

Per frequency radius ``r = |xi|`` the pair ``(Gamma_hat, u_hat)`` with
``Gamma = Lambda^{-1} P div tau`` obeys ``d/dt x = A(r) x`` where

    A(r) = [[0, -alpha r], [beta r, -mu r^2]] .

The defaults ``alpha = beta = mu = 1`` give the reference symbol
``[[0, -r], [r, -r^2]]``.  For the nonlinear system with coefficients
``(mu, K1, K2)`` the exact linearization has ``alpha = K2/2`` (because
``div D(u) = Delta u / 2`` for divergence-free ``u``) and ``beta = K1``; see
:func:`symbol_coefficients`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OSCILLATORY, DEGENERATE, OVERDAMPED = "oscillatory", "degenerate", "overdamped"


def symbol_coefficients(params):
    """``(alpha, beta, mu)`` of the linearization of the full system."""
    return params.k2 / 2.0, params.k1, params.mu


def _check_r(r):
    if not np.all(np.asarray(r) > 0):
        raise ValueError(f"radius must be positive, got {r}")


def mode_matrix(r, alpha=1.0, beta=1.0, mu=1.0):
    _check_r(r)
    return np.array([[0.0, -alpha * r], [beta * r, -mu * r * r]])


def critical_radius(alpha=1.0, beta=1.0, mu=1.0):
    """Radius where the discriminant ``mu^2 r^4 - 4 alpha beta r^2`` vanishes."""
    return 2.0 * np.sqrt(alpha * beta) / mu


@dataclass(frozen=True)
class LinearMode:
    r: float
    matrix: np.ndarray
    lam_plus: complex
    lam_minus: complex
    regime: str


def eigenvalues(r, alpha=1.0, beta=1.0, mu=1.0, rtol=1e-12):
    """Eigenvalue pair ``(lam_plus, lam_minus, regime)``.

    ``lam_plus`` is the branch ``-(mu r^2/2)(1 + sqrt(1 - 4 alpha beta/(mu^2 r^2)))``
    (``~ -r^2`` at high frequency), ``lam_minus`` the other root (``~ -1``).
    For ``r`` below the critical radius they are complex conjugates with real
    part ``-mu r^2/2``; ``lam_plus = -(mu r^2/2)(1 + i s)`` has the negative
    imaginary part.
    The small root is computed from the product of roots to avoid
    cancellation.
    """
    _check_r(r)
    b = mu * r * r
    c = alpha * beta * r * r
    disc = b * b - 4.0 * c
    if abs(disc) <= rtol * b * b:
        lam = -b / 2.0
        return complex(lam), complex(lam), DEGENERATE
    if disc < 0:
        im = np.sqrt(-disc) / 2.0
        return complex(-b / 2.0, -im), complex(-b / 2.0, im), OSCILLATORY
    big = -(b + np.sqrt(disc)) / 2.0
    return complex(big), complex(c / big), OVERDAMPED


def linear_mode(r, **coef):
    lp, lm, regime = eigenvalues(r, **coef)
    return LinearMode(float(r), mode_matrix(r, **coef), lp, lm, regime)


def propagator(r, t, alpha=1.0, beta=1.0, mu=1.0):
    """``exp(t A(r))`` in closed form.

    Uses the Putzer / Sylvester form
    ``exp(tA) = e^{l1 t} I + (e^{l1 t} - e^{l2 t})/(l1 - l2) (A - l1 I)``
    and the Jordan form ``e^{l t}(I + t (A - l I))`` at the double root.  For
    complex pairs the divided difference is evaluated as
    ``e^{at} sin(bt)/b`` so the result stays real.
    """
    if t < 0:
        raise ValueError(f"propagator needs t >= 0, got {t}")
    A = mode_matrix(r, alpha, beta, mu)
    lp, lm, regime = eigenvalues(r, alpha, beta, mu)
    I = np.eye(2)
    if regime == DEGENERATE:
        lam = lp.real
        return np.exp(lam * t) * (I + t * (A - lam * I))
    if regime == OSCILLATORY:
        a, b = lm.real, lm.imag
        e = np.exp(a * t)
        # exp(tA) = e^{at}[cos(bt) I + sin(bt)/b (A - a I)]
        return e * (np.cos(b * t) * I + np.sin(b * t) / b * (A - a * I))
    l1, l2 = lm.real, lp.real  # l1 is the slow root
    e1 = np.exp(l1 * t)
    # (e^{l1 t} - e^{l2 t})/(l1 - l2) = e^{l1 t} (1 - e^{(l2 - l1) t})/(l1 - l2)
    dd = e1 * -np.expm1((l2 - l1) * t) / (l1 - l2)
    return e1 * I + dd * (A - l1 * I)


def condition_number(r, **coef):
    """Condition number of the eigenvector basis (infinite at the double root)."""
    _, _, regime = eigenvalues(r, **coef)
    if regime == DEGENERATE:
        return np.inf
    w, V = np.linalg.eig(mode_matrix(r, **coef))
    return float(np.linalg.cond(V))


def rk4_propagator(r, t_end, dt=1e-4, alpha=1.0, beta=1.0, mu=1.0, times=None):
    """Independent check: integrate ``X' = A X, X(0) = I`` with classical RK4.

    Returns the matrices at ``times`` (default: ``[t_end]``); each requested
    time must be a multiple of ``dt``.
    """
    A = mode_matrix(r, alpha, beta, mu)
    times = [t_end] if times is None else list(times)
    X = np.eye(2)
    nsteps = int(round(t_end / dt))
    marks = {int(round(tt / dt)): i for i, tt in enumerate(times)}
    res = [None] * len(times)
    if 0 in marks:
        res[marks[0]] = X.copy()
    for k in range(1, nsteps + 1):
        k1 = A @ X
        k2 = A @ (X + 0.5 * dt * k1)
        k3 = A @ (X + 0.5 * dt * k2)
        k4 = A @ (X + dt * k3)
        X = X + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if k in marks:
            res[marks[k]] = X.copy()
    return res if len(times) > 1 else res[0]


def asymptotic_check(r_list, **coef):
    """Rows ``(r, lam_plus/(-r^2), lam_minus)`` for radii above the critical one."""
    rc = critical_radius(**coef)
    rows = []
    for r in r_list:
        if r <= rc:
            raise ValueError(f"asymptotic table needs r > {rc}, got {r}")
        lp, lm, _ = eigenvalues(r, **coef)
        rows.append((float(r), lp.real / (-r * r), lm.real))
    return rows


def default_eta(j0):
    return min(0.5, 2.0 ** (-2 * j0 - 4))


def coercivity_weight(r, eta):
    """Quadratic form ``|a|^2 + (1-eta)|v|^2 + eta|r a - v|^2`` in ``(Gamma, u)``.

    Returns the symmetric form matrix and the extreme eigenvalues relative to
    ``|a|^2 + |v|^2``.  The lower ratio never drops below ``1 - eta``; the
    upper ratio grows like ``eta r^2``, which is why the equivalence constant
    is only uniform on a bounded frequency range.
    """
    if not 0 < eta < 1:
        raise ValueError(f"eta must lie in (0, 1), got {eta}")
    _check_r(r)
    Q = np.array([[1.0 + eta * r * r, -eta * r], [-eta * r, 1.0]])
    ev = np.linalg.eigvalsh(Q)
    return Q, float(ev[0]), float(ev[-1])


def dissipation_form(r, eta, alpha=1.0, beta=1.0, mu=1.0):
    """Symmetric matrix ``M`` with ``-1/2 d/dt x^T Q x = x^T M x`` along ``x' = A x``.

    For the reference symbol this is ``diag(eta r^2, (1-eta) r^2)``: the
    cross terms cancel exactly.
    """
    Q, _, _ = coercivity_weight(r, eta)
    A = mode_matrix(r, alpha, beta, mu)
    return -0.5 * (Q @ A + A.T @ Q)


def duhamel(r, t, x0, forcing, nquad=201, **coef):
    """``exp(tA) x0 + int_0^t exp((t-s)A) f(s) ds`` by Simpson quadrature."""
    from scipy.integrate import simpson

    s = np.linspace(0.0, t, nquad)
    integrand = np.array([propagator(r, t - si, **coef) @ np.asarray(forcing(si)) for si in s])
    return propagator(r, t, **coef) @ np.asarray(x0) + simpson(integrand, x=s, axis=0)


def sweep(r_min, r_max, points, **coef):
    """Log-spaced table of ``(r, Re l+, Im l+, Re l-, Im l-, regime)``."""
    rows = []
    for r in np.geomspace(r_min, r_max, points):
        lp, lm, regime = eigenvalues(r, **coef)
        rows.append((float(r), lp.real, lp.imag, lm.real, lm.imag, regime))
    return rows
