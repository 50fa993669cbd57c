"""Periodic spectral calculus on the torus [0, 2*pi)^n.

Fields are stored as complex Fourier coefficients with the ``forward``
normalization, i.e. ``c(xi) = mean_x f(x) exp(-i xi.x)``, so a constant field
``1`` has a single coefficient ``1`` at ``xi = 0`` and

    ||f||_{L^2}^2 = (2 pi)^n * sum_xi |c(xi)|^2 .

Symmetric tensors use packed upper-triangular storage (``n(n+1)/2``
components, row-major over ``i <= j``).
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft

SCALAR, VECTOR, SYM, TENSOR = "scalar", "vector", "sym", "tensor"
RANKS = (SCALAR, VECTOR, SYM, TENSOR)


class DegenerateInputError(ValueError):
    """An operator was applied outside the data it is defined on."""


def _workers():
    try:
        return max(1, int(os.environ.get("OLDB_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid with ``N`` points per axis in ``n`` dimensions."""

    n: int
    N: int

    def __post_init__(self):
        if self.n not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.n}")
        if self.N < 8 or self.N % 2:
            raise ValueError(f"N must be even and >= 8, got {self.N}")

    @property
    def shape(self):
        return (self.N,) * self.n

    @property
    def dx(self):
        return 2 * np.pi / self.N

    @property
    def volume(self):
        return (2 * np.pi) ** self.n

    @cached_property
    def x(self):
        """Coordinate arrays, shape ``(n, N, ..., N)``."""
        x1 = np.arange(self.N) * self.dx
        return np.array(np.meshgrid(*([x1] * self.n), indexing="ij"))

    @cached_property
    def k(self):
        """Integer wavenumbers, shape ``(n, N, ..., N)``; Nyquist stored as -N/2."""
        k1 = scipy.fft.fftfreq(self.N, 1.0 / self.N)
        return np.array(np.meshgrid(*([k1] * self.n), indexing="ij"))

    @cached_property
    def kd(self):
        """Wavenumbers used for differentiation (Nyquist set to zero)."""
        kd = self.k.copy()
        kd[np.abs(kd) == self.N // 2] = 0.0
        return kd

    @cached_property
    def k2(self):
        return np.sum(self.k**2, axis=0)

    @cached_property
    def kmag(self):
        return np.sqrt(self.k2)

    @cached_property
    def dealias_mask(self):
        """2/3 rule: keep modes with every ``|xi_i| <= N/3``."""
        return np.all(np.abs(self.k) <= self.N / 3.0, axis=0)

    @cached_property
    def zero_mode(self):
        return (0,) * self.n

    @property
    def nsym(self):
        return self.n * (self.n + 1) // 2

    @cached_property
    def sym_index(self):
        """List of ``(i, j)`` pairs, ``i <= j``, in packed order."""
        return [(i, j) for i in range(self.n) for j in range(i, self.n)]

    def ncomp(self, rank):
        return {SCALAR: 1, VECTOR: self.n, SYM: self.nsym, TENSOR: self.n * self.n}[rank]


@dataclass(frozen=True)
class ConstitutiveParams:
    """Coefficients of the Oldroyd-B system; the nondimensional default is all ones."""

    b: float = 0.0
    mu: float = 1.0
    k1: float = 1.0
    k2: float = 1.0

    def __post_init__(self):
        if not -1.0 <= self.b <= 1.0:
            raise ValueError(f"slip parameter b must lie in [-1, 1], got {self.b}")
        if min(self.mu, self.k1, self.k2) < 0:
            raise ValueError("mu, K1, K2 must be non-negative")


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of a scalar, vector or tensor field.

    ``coeffs`` always has a leading component axis, shape
    ``(ncomp, N, ..., N)``.
    """

    grid: Grid
    rank: str
    coeffs: np.ndarray = field(repr=False)
    real: bool = True

    def __post_init__(self):
        if self.rank not in RANKS:
            raise ValueError(f"unknown rank {self.rank!r}")
        want = (self.grid.ncomp(self.rank),) + self.grid.shape
        if self.coeffs.shape != want:
            raise ValueError(f"coefficient shape {self.coeffs.shape} != {want}")

    # -- arithmetic -------------------------------------------------------
    def _like(self, coeffs, real=None):
        return SpectralField(self.grid, self.rank, coeffs, self.real if real is None else real)

    def _check(self, other):
        if not isinstance(other, SpectralField) or other.grid != self.grid or other.rank != self.rank:
            raise ValueError("fields must share grid and rank")

    def __add__(self, other):
        self._check(other)
        return self._like(self.coeffs + other.coeffs, self.real and other.real)

    def __radd__(self, other):
        if isinstance(other, (int, float)) and other == 0:
            return self
        return self.__add__(other)

    def __sub__(self, other):
        self._check(other)
        return self._like(self.coeffs - other.coeffs, self.real and other.real)

    def __neg__(self):
        return self._like(-self.coeffs)

    def __mul__(self, alpha):
        alpha = complex(alpha) if np.iscomplexobj(alpha) else float(alpha)
        return self._like(self.coeffs * alpha, self.real and isinstance(alpha, float))

    __rmul__ = __mul__

    def multiply_modes(self, symbol, real=None):
        """Apply a Fourier multiplier of shape ``grid.shape``."""
        return self._like(self.coeffs * symbol, real)

    # -- tensor helpers ---------------------------------------------------
    def full(self):
        """Coefficients as a full ``(n, n, ...)`` tensor (tensor ranks only)."""
        n = self.grid.n
        if self.rank == TENSOR:
            return self.coeffs.reshape((n, n) + self.grid.shape)
        if self.rank != SYM:
            raise ValueError("full() requires a tensor rank")
        out = np.empty((n, n) + self.grid.shape, dtype=self.coeffs.dtype)
        for c, (i, j) in enumerate(self.grid.sym_index):
            out[i, j] = self.coeffs[c]
            out[j, i] = self.coeffs[c]
        return out

    def components(self):
        """Real-space samples, shape ``(ncomp, N, ..., N)``."""
        return inverse_transform(self)

    def norm_l2(self):
        """L^2 norm, counting off-diagonal tensor entries twice."""
        return np.sqrt(inner(self, self))

    def mean(self):
        return self.coeffs[(slice(None),) + self.grid.zero_mode]


def zeros(grid, rank):
    return SpectralField(grid, rank, np.zeros((grid.ncomp(rank),) + grid.shape, complex))


def _infer_rank(grid, values):
    if values.shape == grid.shape:
        return SCALAR
    if values.ndim == grid.n + 2 and values.shape[:2] == (grid.n, grid.n):
        return TENSOR
    if values.ndim == grid.n + 1 and values.shape[1:] == grid.shape:
        for rank in (VECTOR, SYM):
            if values.shape[0] == grid.ncomp(rank):
                return rank
    raise ValueError(f"array of shape {values.shape} does not match grid {grid.shape}")


def _fftn(values, n):
    axes = tuple(range(-n, 0))
    return scipy.fft.fftn(values, axes=axes, norm="forward", workers=_workers())


def _ifftn(coeffs, n):
    axes = tuple(range(-n, 0))
    return scipy.fft.ifftn(coeffs, axes=axes, norm="forward", workers=_workers())


def transform(values, grid, rank=None, symmetrize=False):
    """Real-space samples to a :class:`SpectralField`.

    A full ``(n, n, ...)`` tensor is packed into symmetric storage when
    ``rank == "sym"``; unless ``symmetrize`` is set it must already be
    symmetric.
    """
    values = np.asarray(values)
    inferred = _infer_rank(grid, values)
    rank = rank or inferred
    real = not np.iscomplexobj(values)
    if inferred == TENSOR and rank == SYM:
        asym = values - np.swapaxes(values, 0, 1)
        if not symmetrize and np.max(np.abs(asym)) > 1e-12 * max(np.max(np.abs(values)), 1e-300):
            raise ValueError("tensor is not symmetric")
        sym = 0.5 * (values + np.swapaxes(values, 0, 1))
        values = np.array([sym[i, j] for i, j in grid.sym_index])
    elif inferred == TENSOR:
        values = values.reshape((grid.n * grid.n,) + grid.shape)
    elif inferred != rank:
        raise ValueError(f"array of rank {inferred} cannot be stored as {rank}")
    if rank == SCALAR:
        values = values[None]
    return SpectralField(grid, rank, _fftn(values, grid.n), real)


def inverse_transform(f):
    """Real-space samples with a leading component axis.

    For real fields the (round-off) imaginary part is dropped.
    """
    vals = _ifftn(f.coeffs, f.grid.n)
    return vals.real if f.real else vals


def physical(f):
    """Real-space samples in natural shape: ``(N..)``, ``(n, N..)`` or ``(n, n, N..)``."""
    if f.rank == SCALAR:
        return inverse_transform(f)[0]
    if f.rank in (SYM, TENSOR):
        g = f.grid
        return inverse_transform(SpectralField(g, TENSOR, f.full().reshape((g.n * g.n,) + g.shape), f.real)).reshape(
            (g.n, g.n) + g.shape
        )
    return inverse_transform(f)


def realness_defect(f):
    """Max relative violation of ``c(-xi) = conj(c(xi))``."""
    c = f.coeffs
    flipped = np.conj(np.roll(np.flip(c, axis=tuple(range(1, c.ndim))), 1, axis=tuple(range(1, c.ndim))))
    scale = max(np.max(np.abs(c)), 1e-300)
    return float(np.max(np.abs(c - flipped)) / scale)


def inner(a, b):
    """Real L^2 inner product ``<a, b>`` via Parseval (tensor entries all counted)."""
    if a.grid != b.grid or a.rank != b.rank:
        raise ValueError("inner product needs matching fields")
    w = _component_weights(a)
    s = np.sum(w[(slice(None),) + (None,) * a.grid.n] * np.real(a.coeffs * np.conj(b.coeffs)))
    return float(a.grid.volume * s)


def _component_weights(f):
    if f.rank == SYM:
        return np.array([1.0 if i == j else 2.0 for i, j in f.grid.sym_index])
    return np.ones(f.coeffs.shape[0])


def drop_mean(f):
    c = f.coeffs.copy()
    c[(slice(None),) + f.grid.zero_mode] = 0.0
    return f._like(c)


def dealias(f):
    return f.multiply_modes(f.grid.dealias_mask)


# -- differential operators --------------------------------------------------


def derivative(f, direction):
    """``d/dx_direction`` applied componentwise."""
    return f.multiply_modes(1j * f.grid.kd[direction])


def grad(f):
    """Gradient of a scalar (vector) or of a vector (full tensor ``T[i, j] = d_j f_i``)."""
    g = f.grid
    if f.rank == SCALAR:
        return SpectralField(g, VECTOR, 1j * g.kd * f.coeffs[0], f.real)
    if f.rank == VECTOR:
        t = 1j * f.coeffs[:, None] * g.kd[None, :]
        return SpectralField(g, TENSOR, t.reshape((g.n * g.n,) + g.shape), f.real)
    raise ValueError("grad needs a scalar or vector field")


def div(f):
    """Divergence of a vector (scalar) or row divergence of a tensor (vector)."""
    g = f.grid
    if f.rank == VECTOR:
        return SpectralField(g, SCALAR, np.sum(1j * g.kd * f.coeffs, axis=0)[None], f.real)
    if f.rank in (SYM, TENSOR):
        t = f.full()
        return SpectralField(g, VECTOR, np.sum(1j * g.kd[None, :] * t, axis=1), f.real)
    raise ValueError("div needs a vector or tensor field")


def laplacian(f):
    return f.multiply_modes(-f.grid.k2)


def leray_project(v):
    """Orthogonal projection onto divergence-free fields; the mean passes through."""
    if v.rank != VECTOR:
        raise ValueError("Leray projection needs a vector field")
    g = v.grid
    k2 = g.k2.copy()
    k2[g.zero_mode] = 1.0
    kdotv = np.sum(g.k * v.coeffs, axis=0)
    return v._like(v.coeffs - g.k * (kdotv / k2))


def lambda_power(f, s):
    """Fractional power ``|xi|^s`` of ``(-Delta)^{1/2}``.

    Negative powers require zero mean; the mean is mapped to zero for
    ``s != 0``.
    """
    if s == 0:
        return f
    g = f.grid
    if s < 0:
        mean = np.max(np.abs(f.mean()))
        if mean > 0 and mean > 1e-12 * np.sqrt(np.sum(np.abs(f.coeffs) ** 2)):
            raise DegenerateInputError("negative power of Lambda needs a mean-free field")
    kmag = g.kmag.copy()
    kmag[g.zero_mode] = 1.0
    sym = kmag**s
    sym[g.zero_mode] = 0.0
    return f.multiply_modes(sym)


def sym_skew_parts(u):
    """``D(u) = (grad u + grad u^T)/2`` (packed) and ``Omega(u)`` (full tensor)."""
    g = u.grid
    G = grad(u).full()
    D = 0.5 * (G + np.swapaxes(G, 0, 1))
    W = 0.5 * (G - np.swapaxes(G, 0, 1))
    Dp = np.array([D[i, j] for i, j in g.sym_index])
    return (
        SpectralField(g, SYM, Dp, u.real),
        SpectralField(g, TENSOR, W.reshape((g.n * g.n,) + g.shape), u.real),
    )


# -- nonlinear terms ---------------------------------------------------------


def _pack(full, grid):
    return np.array([full[i, j] for i, j in grid.sym_index])


def _to_spectral(values, grid, rank):
    """Real-space products back to dealiased coefficients."""
    c = _fftn(values, grid.n) * grid.dealias_mask
    return SpectralField(grid, rank, c, not np.iscomplexobj(values))


def product(a, b):
    """Dealiased pointwise product of two scalar fields."""
    if a.rank != SCALAR or b.rank != SCALAR:
        raise ValueError("product needs scalar fields")
    return _to_spectral((physical(a) * physical(b))[None], a.grid, SCALAR)


def advect(u, f):
    """Dealiased ``(u . grad) f`` for scalar, vector or tensor ``f``."""
    g = u.grid
    up = physical(u)
    if f.rank == SCALAR:
        df = physical(grad(f))
        return _to_spectral(np.sum(up * df, axis=0)[None], g, SCALAR)
    grads = _ifftn(1j * g.kd[None, :] * f.coeffs[:, None], g.n)
    if f.real and u.real:
        grads = grads.real
    out = np.sum(up[None] * grads, axis=1)
    return _to_spectral(out, g, f.rank)


def bilinear_F(tau, u, b):
    """``F(tau, grad u) = tau Omega - Omega tau + b (D tau + tau D)``, dealiased.

    The product is evaluated in real space on symmetric ``tau`` and returned
    in packed symmetric storage.
    """
    if not -1.0 <= b <= 1.0:
        raise ValueError(f"slip parameter b must lie in [-1, 1], got {b}")
    if tau.rank not in (SYM, TENSOR):
        raise ValueError("tau must be a tensor field")
    g = u.grid
    D, W = sym_skew_parts(u)
    t = physical(tau)
    d = physical(D)
    w = physical(W)
    mm = lambda a, c: np.einsum("ik...,kj...->ij...", a, c)  # noqa: E731
    F = mm(t, w) - mm(w, t) + b * (mm(d, t) + mm(t, d))
    if tau.rank == TENSOR:
        return _to_spectral(F.reshape((g.n * g.n,) + g.shape), g, TENSOR)
    F = 0.5 * (F + np.swapaxes(F, 0, 1))
    return _to_spectral(_pack(F, g), g, SYM)


def resample(f, grid):
    """The same trigonometric polynomial on another grid of equal dimension.

    Modes that do not fit on the target grid are dropped, as is the Nyquist
    plane of the source (its sign convention is grid dependent).
    """
    if grid.n != f.grid.n:
        raise ValueError("resample keeps the dimension")
    src, dst = f.grid.N, grid.N
    keep = min(src, dst) // 2 - 1
    k = np.arange(-keep, keep + 1)
    idx_src = np.ix_(*([k % src] * grid.n))
    idx_dst = np.ix_(*([k % dst] * grid.n))
    c = np.zeros((f.coeffs.shape[0],) + grid.shape, dtype=f.coeffs.dtype)
    c[(slice(None),) + idx_dst] = f.coeffs[(slice(None),) + idx_src]
    return SpectralField(grid, f.rank, c, f.real)


# -- random fields -----------------------------------------------------------


def random_field(grid, rank, rng, kmin=1.0, kmax=None, slope=0.0, amplitude=1.0):
    """Random real mean-free field with isotropic band ``kmin <= |xi| <= kmax``.

    The band is intersected with the 2/3 dealiasing set, so products of such
    fields are computed without aliasing error.  Coefficients are Gaussian with
    envelope ``|xi|^slope``; the result is scaled to unit max amplitude times
    ``amplitude`` in real space.
    """
    kmax = grid.N / 3.0 if kmax is None else kmax
    shape = (grid.ncomp(rank),) + grid.shape
    vals = rng.standard_normal(shape)
    c = _fftn(vals, grid.n)
    kmag = grid.kmag.copy()
    kmag[grid.zero_mode] = 1.0
    band = (grid.kmag >= kmin) & (grid.kmag <= kmax) & grid.dealias_mask
    c = c * band * kmag**slope
    f = SpectralField(grid, rank, c, True)
    peak = np.max(np.abs(inverse_transform(f)))
    if peak == 0:
        return f
    return f * (amplitude / peak)


def random_divfree(grid, rng, **kw):
    return leray_project(random_field(grid, VECTOR, rng, **kw))
