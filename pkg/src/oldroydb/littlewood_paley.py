"""Dyadic filter bank, homogeneous Besov norms and paradifferential tools.

The radial cutoff is ``chi(r) = psi((r - 3/4) / (4/3 - 3/4))`` with the smooth
step ``psi(t) = g(1 - t) / (g(t) + g(1 - t))``, ``g(t) = exp(-1/t)`` for
``t > 0``.  It equals one on ``|xi| <= 3/4``, vanishes for ``|xi| >= 4/3`` and
is non-increasing, so ``phi(xi) = chi(xi/2) - chi(xi)`` lives in the annulus
``3/4 <= |xi| <= 8/3``.

On the torus the homogeneous blocks only see the mean-free part of a field.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.integrate import trapezoid

from . import spectral as sp

R_IN, R_OUT = 0.75, 4.0 / 3.0


def _g(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_step(t):
    """C-infinity step: 1 for ``t <= 0``, 0 for ``t >= 1``."""
    t = np.asarray(t, dtype=float)
    a, b = _g(1.0 - t), _g(t)
    return a / (a + b)


def chi(r):
    return smooth_step((np.asarray(r, dtype=float) - R_IN) / (R_OUT - R_IN))


def phi(r):
    r = np.asarray(r, dtype=float)
    return chi(r / 2.0) - chi(r)


@dataclass(frozen=True)
class DyadicPartition:
    """Truncated Littlewood-Paley partition on a grid.

    Blocks ``j_min..j_max`` cover every nonzero grid frequency; ``j0`` splits
    low (``j <= j0``) from high (``j > j0``) frequencies.
    """

    grid: sp.Grid
    j0: int
    j_min: int
    j_max: int

    @property
    def blocks(self):
        return range(self.j_min, self.j_max + 1)

    @property
    def nblocks(self):
        return self.j_max - self.j_min + 1

    def index(self, j):
        if not self.j_min <= j <= self.j_max:
            raise IndexError(f"block {j} outside [{self.j_min}, {self.j_max}]")
        return j - self.j_min

    @cached_property
    def symbols(self):
        """``phi(2^-j |xi|)`` for every block, shape ``(nblocks, N, ..., N)``."""
        r = self.grid.kmag
        return np.array([phi(r * 2.0**-j) for j in self.blocks])

    def symbol(self, j):
        return self.symbols[self.index(j)]

    def low_symbol(self, k):
        """``chi(2^-k |xi|)`` with the origin excluded (homogeneous cutoff)."""
        s = chi(self.grid.kmag * 2.0**-k)
        s[self.grid.zero_mode] = 0.0
        return s

    @cached_property
    def low_band(self):
        """Multiplier of ``z -> z^l``."""
        return np.sum(self.symbols[: self.index(self.j0) + 1], axis=0)

    @cached_property
    def high_band(self):
        return np.sum(self.symbols[self.index(self.j0) + 1 :], axis=0)

    def mask(self, band):
        """Boolean selection of blocks for ``band`` in ``{None, 'low', 'high'}``."""
        j = np.arange(self.j_min, self.j_max + 1)
        if band is None:
            return np.ones_like(j, dtype=bool)
        if band == "low":
            return j <= self.j0
        if band == "high":
            return j > self.j0
        raise ValueError(f"unknown band {band!r}")

    @property
    def block_array(self):
        return np.arange(self.j_min, self.j_max + 1)


def default_block_range(grid):
    j_max = int(np.ceil(np.log2(grid.N * np.sqrt(grid.n) / 2.0))) + 1
    return -2, j_max


def build_partition(grid, j0=2):
    j_min, j_max = default_block_range(grid)
    if not (0 <= j0 and j_min <= j0 <= j_max):
        raise ValueError(f"split index j0={j0} outside [max(0, {j_min}), {j_max}]")
    return DyadicPartition(grid, int(j0), j_min, j_max)


def partition_defect(part):
    """Max ``|sum_j phi(2^-j xi) - 1|`` over the nonzero grid frequencies."""
    s = np.sum(part.symbols, axis=0)
    nz = part.grid.kmag > 0
    return float(np.max(np.abs(s[nz] - 1.0)))


# -- filters -----------------------------------------------------------------


def dyadic_block(f, part, j):
    return f.multiply_modes(part.symbol(j))


def low_cutoff(f, part, k):
    """``S_k f = chi(2^-k D) f`` (homogeneous: the mean is dropped)."""
    return f.multiply_modes(part.low_symbol(k))


def low_high_split(f, part):
    return f.multiply_modes(part.low_band), f.multiply_modes(part.high_band)


# -- norms -------------------------------------------------------------------


def _pointwise_magnitude(values, rank, grid):
    """Euclidean / Frobenius magnitude at each grid point."""
    if rank == sp.SYM:
        w = np.array([1.0 if i == j else 2.0 for i, j in grid.sym_index])
        return np.sqrt(np.einsum("c,c...->...", w, np.abs(values) ** 2))
    return np.sqrt(np.sum(np.abs(values) ** 2, axis=0))


def lp_norm(f, p):
    """Discrete ``L^p`` norm: ``(mean |f|^p (2 pi)^n)^{1/p}``; sup norm for ``p = inf``."""
    g = f.grid
    if p == 2:
        w = sp._component_weights(f)
        return float(np.sqrt(g.volume * np.sum(w[(slice(None),) + (None,) * g.n] * np.abs(f.coeffs) ** 2)))
    mag = _pointwise_magnitude(sp.inverse_transform(f), f.rank, g)
    return _lp_of_magnitude(mag, p, g)


def _lp_of_magnitude(mag, p, g):
    if np.isinf(p):
        return float(np.max(mag))
    return float((np.mean(mag**p) * g.volume) ** (1.0 / p))


def block_norms(f, part, p):
    """``||Delta_j f||_{L^p}`` for every block, in block order."""
    g = f.grid
    out = np.empty(part.nblocks)
    if p == 2:
        w = sp._component_weights(f)
        power = np.sum(w[(slice(None),) + (None,) * g.n] * np.abs(f.coeffs) ** 2, axis=0)
        flat = (part.symbols**2).reshape(part.nblocks, -1)
        return np.sqrt(g.volume * (flat @ power.ravel()))
    for b, sym in enumerate(part.symbols):
        if not np.any(sym):
            out[b] = 0.0
            continue
        out[b] = lp_norm(f.multiply_modes(sym), p)
    return out


@dataclass(frozen=True)
class BesovSpec:
    """Regularity ``s`` and integrability ``p`` of a ``B^s_{p,1}`` norm; ``q`` is the time exponent."""

    s: float
    p: float = 2.0
    q: float = np.inf

    def __post_init__(self):
        if not (1 <= self.p <= np.inf and 1 <= self.q <= np.inf):
            raise ValueError("p and q must lie in [1, inf]")

    def label(self, band=None):
        tag = f"B_{self.p:g}_1_s-{float(self.s)}"
        return tag if band is None else f"{tag}_{band}"


def besov_from_blocks(norms, part, s, band=None):
    j = part.block_array
    sel = part.mask(band)
    return float(np.sum(2.0 ** (s * j[sel]) * norms[sel]))


def besov_norm(f, part, s, p=2, band=None):
    """``sum_j 2^{js} ||Delta_j f||_{L^p}`` over all, low or high blocks.

    ``band='low'``/``'high'`` gives the truncated semi-norms, whose sum is the
    full norm.
    """
    mean = np.max(np.abs(f.mean())) if f.coeffs.size else 0.0
    if mean > 1e-12 * max(np.max(np.abs(f.coeffs)), 1e-300):
        warnings.warn("homogeneous Besov norm ignores the nonzero mean", stacklevel=2)
    return besov_from_blocks(block_norms(f, part, p), part, s, band)


def chemin_lerner_from_blocks(times, norms, part, s, q, band=None):
    """Chemin-Lerner norm from a ``(ntimes, nblocks)`` array of block norms.

    ``q = 1`` integrates each block in time with the trapezoid rule,
    ``q = inf`` takes the running max, other ``q`` the trapezoidal ``L^q``.
    """
    times = np.asarray(times, dtype=float)
    norms = np.asarray(norms, dtype=float)
    if times.size < 2:
        raise ValueError("Chemin-Lerner norm needs at least two time samples")
    if np.isinf(q):
        per_block = np.max(norms, axis=0)
    elif q == 1:
        per_block = trapezoid(norms, times, axis=0)
    else:
        per_block = trapezoid(norms**q, times, axis=0) ** (1.0 / q)
    return besov_from_blocks(per_block, part, s, band)


def chemin_lerner_norm(times, fields, part, spec, band=None):
    if len(fields) == 0:
        raise ValueError("empty series")
    norms = np.array([block_norms(f, part, spec.p) for f in fields])
    return chemin_lerner_from_blocks(times, norms, part, spec.s, spec.q, band)


def bochner_norm(times, fields, part, spec, band=None):
    """``L^q_T(B^s_{p,1})``: the time norm of the Besov norm."""
    vals = np.array([besov_norm(f, part, spec.s, spec.p, band) for f in fields])
    times = np.asarray(times, dtype=float)
    if np.isinf(spec.q):
        return float(np.max(vals))
    return float(trapezoid(vals**spec.q, times) ** (1.0 / spec.q))


# -- Bony decomposition ------------------------------------------------------


def bony_decompose(u, v, part):
    """Split ``uv = T_u v + T_v u + R(u, v)`` for scalar fields.

    Uses ``T_u v = sum_j S_{j-1}u Delta_j v`` and
    ``R(u, v) = sum_j Delta_j u (Delta_{j-1} + Delta_j + Delta_{j+1}) v``.
    """
    g = u.grid
    tuv = np.zeros(g.shape)
    tvu = np.zeros(g.shape)
    rem = np.zeros(g.shape)
    blocks = list(part.blocks)
    du = [sp.physical(dyadic_block(u, part, j)) for j in blocks]
    dv = [sp.physical(dyadic_block(v, part, j)) for j in blocks]
    for b, j in enumerate(blocks):
        tuv = tuv + sp.physical(low_cutoff(u, part, j - 1)) * dv[b]
        tvu = tvu + sp.physical(low_cutoff(v, part, j - 1)) * du[b]
        wide = sum(dv[c] for c in (b - 1, b, b + 1) if 0 <= c < len(blocks))
        rem = rem + du[b] * wide
    return tuple(sp._to_spectral(x[None], g, sp.SCALAR) for x in (tuv, tvu, rem))


# -- Bernstein and lemma ratios ---------------------------------------------


def bernstein_ratio(f, alpha, p, q, lam):
    """``||d^alpha f||_{L^q} / (lam^{|alpha| + n(1/p - 1/q)} ||f||_{L^p})``."""
    g = f.grid
    denom_norm = lp_norm(f, p)
    if denom_norm == 0:
        raise ValueError("Bernstein ratio of the zero field")
    d = f
    for axis, order in enumerate(alpha):
        for _ in range(order):
            d = sp.derivative(d, axis)
    k = sum(alpha)
    inv = lambda x: 0.0 if np.isinf(x) else 1.0 / x  # noqa: E731
    return lp_norm(d, q) / (lam ** (k + g.n * (inv(p) - inv(q))) * denom_norm)


def gradient_bernstein_ratio(f, p, lam):
    """``||grad f||_{L^p} / (lam ||f||_{L^p})`` (reverse Bernstein on an annulus)."""
    return lp_norm(sp.grad(f), p) / (lam * lp_norm(f, p))


class InadmissibleError(ValueError):
    """Exponents outside the range where an inequality is claimed."""


def _require_divfree(u, tol=1e-10):
    d = np.max(np.abs(sp.div(u).coeffs))
    scale = max(np.max(np.abs(sp.grad(u).coeffs)), 1e-300)
    if d > tol * scale:
        raise InadmissibleError("velocity must be divergence-free")


def _commutator_block(u, v, part, j, multiplier=None, inside=True):
    """``[Delta_j A, u.grad] v`` (``inside``) or ``[Delta_j, u.grad] A v``."""
    sym = part.symbol(j)
    A = (lambda z: z) if multiplier is None else multiplier
    if inside:
        first = sp.advect(u, A(v.multiply_modes(sym)))
        second = A(sp.advect(u, v)).multiply_modes(sym)
    else:
        av = A(v)
        first = sp.advect(u, av.multiply_modes(sym))
        second = sp.advect(u, av).multiply_modes(sym)
    return second - first


def commutator_norms(u, v, part, p, multiplier=None, inside=True):
    """``||[Delta_j, u.grad] v||_{L^p}`` per block (with optional zero-order multiplier)."""
    return np.array(
        [lp_norm(_commutator_block(u, v, part, j, multiplier, inside), p) for j in part.blocks]
    )


def inequality_ratio(kind, u, v, part, p=3.0, **kw):
    """LHS/RHS of a Besov inequality evaluated with constant one.

    kinds
        ``product_law_22``: ``||uv||_{B^{n/2-1}_{2,1}}`` against
        ``||u||_{B^{n/p-1}_{p,1}}||v||_{B^{n/p}_{p,1}} + (u <-> v)``, ``2 <= p < 4``.
        ``product_law``: ``||uv||_{B^{s1+s2-n/q}_{p,1}}`` against
        ``||u||_{B^{s1}_{q,1}}||v||_{B^{s2}_{p,1}}`` (keywords ``q, s1, s2``).
        ``commutator_block``: ``sum_j 2^{js}||[u.grad, Delta_j] v||_{L^p}`` against
        ``||grad u||_{B^{n/p}_{p,1}} ||v||_{B^s_{p,1}}`` (keyword ``s``).
        ``commutator_lowfreq``: ``sum_{j<=j0} 2^{(n/2-1)j}||[Delta_j, u.grad] v||_{L^2}``
        against ``||grad u||_{B^{n/p}_{p,1}}(||v||^l_{B^{n/2-1}_{2,1}} + ||v||^h_{B^{n/p-1}_{p,1}})``.
        ``commutator_multiplier``: as ``commutator_lowfreq`` with the Leray
        projector inserted (``inside=True``: ``[Delta_j P, u.grad]v``, else
        ``[Delta_j, u.grad] P v``).
    """
    n = part.grid.n
    if kind in ("product_law_22", "commutator_lowfreq", "commutator_multiplier") and not 2 <= p < 4:
        raise InadmissibleError(f"{kind} needs 2 <= p < 4, got p={p}")
    if kind == "product_law_22":
        lhs = besov_norm(sp.drop_mean(sp.product(u, v)), part, n / 2 - 1, 2)
        rhs = besov_norm(u, part, n / p - 1, p) * besov_norm(v, part, n / p, p) + besov_norm(
            u, part, n / p, p
        ) * besov_norm(v, part, n / p - 1, p)
    elif kind == "product_law":
        q, s1, s2 = kw["q"], kw["s1"], kw["s2"]
        ok = s1 <= n / q and s2 <= n * min(1 / p, 1 / q) and s1 + s2 > n * max(0.0, 1 / p + 1 / q - 1)
        if not ok:
            raise InadmissibleError(f"product law inadmissible for q={q}, s1={s1}, s2={s2}, p={p}")
        lhs = besov_norm(sp.drop_mean(sp.product(u, v)), part, s1 + s2 - n / q, p)
        rhs = besov_norm(u, part, s1, q) * besov_norm(v, part, s2, p)
    elif kind == "commutator_block":
        s = kw["s"]
        if not -1 - n * min(1 / p, 1 - 1 / p) < s <= 1 + n / p:
            raise InadmissibleError(f"commutator estimate inadmissible for s={s}, p={p}")
        _require_divfree(u)
        norms = commutator_norms(u, v, part, p)
        lhs = float(np.sum(2.0 ** (s * part.block_array) * norms))
        rhs = besov_norm(sp.grad(u), part, n / p, p) * besov_norm(v, part, s, p)
    elif kind in ("commutator_lowfreq", "commutator_multiplier"):
        _require_divfree(u)
        if kind == "commutator_multiplier":
            norms = commutator_norms(u, v, part, 2, sp.leray_project, kw.get("inside", True))
        else:
            norms = commutator_norms(u, v, part, 2)
        sel = part.mask("low")
        lhs = float(np.sum(2.0 ** ((n / 2 - 1) * part.block_array[sel]) * norms[sel]))
        rhs = besov_norm(sp.grad(u), part, n / p, p) * (
            besov_norm(v, part, n / 2 - 1, 2, "low") + besov_norm(v, part, n / p - 1, p, "high")
        )
    else:
        raise ValueError(f"unknown inequality kind {kind!r}")
    if lhs == 0:
        return 0.0
    return lhs / rhs
