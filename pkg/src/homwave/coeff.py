"""Periodic matrix-valued coefficients held as truncated Fourier series.

A field is F(x) = sum_n F_n exp(i <n @ dual_basis, x>), with integer
coordinates n in [-N, N]^d.  Coefficients are stored on a centred dense
array of shape (2N+1,)*d + (p, q).
"""

from __future__ import annotations

import itertools
from typing import Callable

import numpy as np

from .lattice import Lattice, ModeSet


class GridTooCoarseError(ValueError):
    pass


class NotPositiveError(ValueError):
    pass


class AliasingError(ValueError):
    pass


def _grid_points(lattice: Lattice, M: int) -> np.ndarray:
    d = lattice.d
    u = np.arange(M) / M
    red = np.stack(np.meshgrid(*([u] * d), indexing="ij"), axis=-1)
    return red @ lattice.basis


def _spatial_axes(d: int) -> tuple[int, ...]:
    return tuple(range(d))


class PeriodicMatrixField:
    def __init__(self, coef: np.ndarray, lattice: Lattice, aliasing: float = 0.0):
        coef = np.asarray(coef, dtype=complex)
        d = lattice.d
        if coef.ndim != d + 2:
            raise ValueError(f"coefficient array must have {d} mode axes plus (p, q)")
        side = coef.shape[0]
        if side % 2 != 1 or any(s != side for s in coef.shape[:d]):
            raise ValueError("mode axes must all have odd length 2N+1")
        self.coef = coef
        self.lattice = lattice
        self.aliasing = float(aliasing)
        self._bounds = None

    # -- construction -------------------------------------------------
    @classmethod
    def constant(cls, value, lattice: Lattice) -> "PeriodicMatrixField":
        value = np.atleast_2d(np.asarray(value, dtype=complex))
        coef = value.reshape((1,) * lattice.d + value.shape)
        return cls(coef, lattice)

    @classmethod
    def from_samples(cls, values, lattice: Lattice, cutoff: int) -> "PeriodicMatrixField":
        """Fourier coefficients of samples on the uniform grid u = j/M of the cell."""
        values = np.asarray(values, dtype=complex)
        d = lattice.d
        M = values.shape[0]
        if values.ndim == d:
            values = values[..., None, None]
        if M < 2 * cutoff + 1:
            raise GridTooCoarseError(f"grid of {M} points per axis cannot resolve cutoff {cutoff}")
        spec = np.fft.fftn(values, axes=_spatial_axes(d)) / M**d
        idx = np.arange(-cutoff, cutoff + 1) % M
        coef = spec[np.ix_(*([idx] * d))]
        total = np.sum(np.abs(spec) ** 2)
        kept = np.sum(np.abs(coef) ** 2)
        alias = float((total - kept) / total) if total > 0 else 0.0
        return cls(coef, lattice, aliasing=max(alias, 0.0))

    @classmethod
    def from_callable(
        cls, func: Callable, lattice: Lattice, cutoff: int, grid: int | None = None
    ) -> "PeriodicMatrixField":
        """Sample ``func(x)`` (x of shape (..., d)) on a (4N+1)^d grid and transform."""
        M = grid or 4 * cutoff + 1
        x = _grid_points(lattice, M)
        vals = np.asarray(func(x), dtype=complex)
        return cls.from_samples(vals, lattice, cutoff)

    @classmethod
    def from_fourier(cls, table: dict, lattice: Lattice) -> "PeriodicMatrixField":
        """``table`` maps integer mode tuples to p x q matrices."""
        items = {tuple(int(v) for v in np.atleast_1d(k)): np.atleast_2d(np.asarray(v, dtype=complex))
                 for k, v in table.items()}
        N = max(max(abs(v) for v in k) for k in items)
        shape = next(iter(items.values())).shape
        coef = np.zeros((2 * N + 1,) * lattice.d + shape, dtype=complex)
        for k, v in items.items():
            coef[tuple(np.array(k) + N)] = v
        return cls(coef, lattice)

    # -- basic properties ---------------------------------------------
    @property
    def d(self) -> int:
        return self.lattice.d

    @property
    def cutoff(self) -> int:
        return (self.coef.shape[0] - 1) // 2

    @property
    def shape(self) -> tuple[int, int]:
        return self.coef.shape[-2:]

    def coefficient(self, n) -> np.ndarray:
        n = np.atleast_1d(np.asarray(n, dtype=int))
        N = self.cutoff
        if np.any(np.abs(n) > N):
            return np.zeros(self.shape, dtype=complex)
        return self.coef[tuple(n + N)]

    def mean(self) -> np.ndarray:
        return self.coefficient(np.zeros(self.d, dtype=int)).copy()

    def resized(self, cutoff: int) -> "PeriodicMatrixField":
        """Zero-pad or truncate to a new cutoff."""
        N, d = self.cutoff, self.d
        out = np.zeros((2 * cutoff + 1,) * d + self.shape, dtype=complex)
        c = min(N, cutoff)
        src = tuple(slice(N - c, N + c + 1) for _ in range(d))
        dst = tuple(slice(cutoff - c, cutoff + c + 1) for _ in range(d))
        out[dst] = self.coef[src]
        return PeriodicMatrixField(out, self.lattice)

    # -- sampling -----------------------------------------------------
    def samples(self, M: int | None = None) -> np.ndarray:
        """Values on the uniform grid with M points per axis (M >= 2N+1)."""
        N, d = self.cutoff, self.d
        M = M or 4 * N + 1
        if M < 2 * N + 1:
            raise GridTooCoarseError(f"grid {M} too coarse for cutoff {N}")
        spec = np.zeros((M,) * d + self.shape, dtype=complex)
        idx = np.arange(-N, N + 1) % M
        spec[np.ix_(*([idx] * d))] = self.coef
        return np.fft.ifftn(spec, axes=_spatial_axes(d)) * M**d

    def __call__(self, x) -> np.ndarray:
        """Direct evaluation at points x of shape (..., d)."""
        x = np.asarray(x, dtype=float)
        N, d = self.cutoff, self.d
        ints = np.array(list(itertools.product(range(-N, N + 1), repeat=d)))
        b = ints @ self.lattice.dual_basis
        phase = np.exp(1j * x @ b.T)
        flat = self.coef.reshape(-1, *self.shape)
        return np.einsum("...k,kpq->...pq", phase, flat)

    def quadrature_grid(self) -> int:
        return max(4 * self.cutoff + 1, 64 if self.d == 1 else 32 if self.d == 2 else 17)

    # -- algebra ------------------------------------------------------
    def __matmul__(self, other: "PeriodicMatrixField") -> "PeriodicMatrixField":
        """Pointwise matrix product; exact for trigonometric polynomials."""
        N = self.cutoff + other.cutoff
        M = 2 * N + 1
        vals = self.samples(M) @ other.samples(M)
        return PeriodicMatrixField.from_samples(vals, self.lattice, N)

    def _aligned(self, other):
        N = max(self.cutoff, other.cutoff)
        return self.resized(N).coef, other.resized(N).coef

    def __add__(self, other):
        if not isinstance(other, PeriodicMatrixField):
            other = PeriodicMatrixField.constant(np.broadcast_to(other, self.shape), self.lattice)
        a, b = self._aligned(other)
        return PeriodicMatrixField(a + b, self.lattice)

    def __sub__(self, other):
        if not isinstance(other, PeriodicMatrixField):
            other = PeriodicMatrixField.constant(np.broadcast_to(other, self.shape), self.lattice)
        a, b = self._aligned(other)
        return PeriodicMatrixField(a - b, self.lattice)

    def __mul__(self, scalar):
        return PeriodicMatrixField(self.coef * scalar, self.lattice)

    __rmul__ = __mul__

    def adjoint(self) -> "PeriodicMatrixField":
        """Pointwise conjugate transpose: coefficient at n becomes (F_{-n})^*."""
        flipped = self.coef[tuple(slice(None, None, -1) for _ in range(self.d))]
        return PeriodicMatrixField(np.conj(np.swapaxes(flipped, -1, -2)), self.lattice)

    def left(self, matrix) -> "PeriodicMatrixField":
        return PeriodicMatrixField(np.asarray(matrix) @ self.coef, self.lattice)

    def right(self, matrix) -> "PeriodicMatrixField":
        return PeriodicMatrixField(self.coef @ np.asarray(matrix), self.lattice)

    # -- metadata -----------------------------------------------------
    @property
    def is_hermitian(self) -> bool:
        p, q = self.shape
        if p != q:
            return False
        scale = max(1.0, float(np.abs(self.coef).max()))
        return bool(np.abs(self.adjoint().coef - self.coef).max() <= 1e-12 * scale)

    @property
    def is_real(self) -> bool:
        """Real-valued entries in x (conjugate-symmetric coefficients)."""
        flipped = self.coef[tuple(slice(None, None, -1) for _ in range(self.d))]
        scale = max(1.0, float(np.abs(self.coef).max()))
        return bool(np.abs(np.conj(flipped) - self.coef).max() <= 1e-12 * scale)

    def bounds(self) -> tuple[float, float]:
        """(min lambda_min, max lambda_max) over the quadrature grid; Hermitian fields only."""
        if self._bounds is None:
            vals = self.samples(self.quadrature_grid())
            vals = 0.5 * (vals + np.conj(np.swapaxes(vals, -1, -2)))
            ev = np.linalg.eigvalsh(vals)
            self._bounds = (float(ev[..., 0].min()), float(ev[..., -1].max()))
        return self._bounds

    @property
    def is_positive(self) -> bool:
        return self.is_hermitian and self.bounds()[0] >= 1e-10

    def sup_norm(self) -> float:
        """max over the grid of the pointwise spectral norm."""
        vals = self.samples(self.quadrature_grid())
        return float(np.linalg.svd(vals, compute_uv=False)[..., 0].max())

    def inverse_sup_norm(self) -> float:
        """max over the grid of |F(x)^{-1}|."""
        vals = self.samples(self.quadrature_grid())
        sv = np.linalg.svd(vals, compute_uv=False)
        smin = sv[..., -1].min()
        if smin <= 1e-13 * max(1.0, float(sv.max())):
            raise NotPositiveError("field is singular somewhere on the grid")
        return float(1.0 / smin)

    # -- Galerkin blocks ------------------------------------------------
    def conv_matrix(self, rows: ModeSet, cols: ModeSet | None = None) -> np.ndarray:
        """Block matrix T[(b', :), (b, :)] = F_{b' - b} of size (|rows| p, |cols| q)."""
        cols = cols or rows
        N = self.cutoff
        diff = rows.ints[:, None, :] - cols.ints[None, :, :]
        inside = np.all(np.abs(diff) <= N, axis=-1)
        idx = np.clip(diff + N, 0, 2 * N)
        blocks = self.coef[tuple(idx[..., j] for j in range(self.d))]
        blocks = np.where(inside[..., None, None], blocks, 0.0)
        p, q = self.shape
        return blocks.transpose(0, 2, 1, 3).reshape(len(rows) * p, len(cols) * q)


def harmonic_mean(field: PeriodicMatrixField, rtol: float = 1e-13, max_points: int = 2**21) -> np.ndarray:
    """(cell mean of F^{-1})^{-1} by trapezoidal quadrature.

    F^{-1} is analytic but not a trigonometric polynomial; the grid is doubled
    until the mean of F^{-1} settles to ``rtol`` (geometric convergence, slow
    only for high-contrast fields).
    """
    if not field.is_hermitian:
        raise NotPositiveError("harmonic mean requires a Hermitian field")

    def inverse_mean(M):
        vals = field.samples(M)
        try:
            inv = np.linalg.inv(vals)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveError("singular pointwise value") from exc
        return inv.reshape(-1, *field.shape).mean(axis=0)

    M = field.quadrature_grid()
    m = inverse_mean(M)
    while (2 * M) ** field.d <= max_points:
        M *= 2
        m_new = inverse_mean(M)
        done = np.abs(m_new - m).max() <= rtol * np.abs(m_new).max()
        m = m_new
        if done:
            break
    out = np.linalg.inv(m)
    return 0.5 * (out + out.conj().T)


def mean(field: PeriodicMatrixField) -> np.ndarray:
    return field.mean()


def _pointwise_function(vals: np.ndarray, fn, floor: float = 1e-12) -> np.ndarray:
    vals = 0.5 * (vals + np.conj(np.swapaxes(vals, -1, -2)))
    w, v = np.linalg.eigh(vals)
    if w.min() <= 0:
        raise NotPositiveError(f"field is not positive definite (min eigenvalue {w.min():.3e})")
    w = np.maximum(w, floor * w.max())
    return (v * fn(w)[..., None, :]) @ np.conj(np.swapaxes(v, -1, -2))


def factor_density(Q: PeriodicMatrixField, cutoff: int | None = None) -> PeriodicMatrixField:
    """f = Q^{-1/2} pointwise (Hermitian square root), so that f f^* = Q^{-1}."""
    if not Q.is_hermitian:
        raise NotPositiveError("density must be Hermitian")
    N = cutoff if cutoff is not None else max(4 * Q.cutoff, 8)
    M = 4 * N + 1
    vals = _pointwise_function(Q.samples(M), lambda w: w**-0.5)
    return PeriodicMatrixField.from_samples(vals, Q.lattice, N)


def inverse_field(F: PeriodicMatrixField, cutoff: int) -> PeriodicMatrixField:
    M = 4 * cutoff + 1
    return PeriodicMatrixField.from_samples(np.linalg.inv(F.samples(M)), F.lattice, cutoff)
