"""Bravais lattices, dual lattices, Brillouin zones and truncated mode sets.

Conventions: the rows of ``basis`` are the lattice vectors a_1..a_d; the rows
of ``dual_basis`` are b_1..b_d with <b_l, a_j> = 2*pi*delta_jl.  Integer
coordinates ``n`` of a dual vector are mapped to ``n @ dual_basis``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np


class DegenerateLatticeError(ValueError):
    pass


def _integer_box(d: int, bound: int) -> np.ndarray:
    rng = np.arange(-bound, bound + 1)
    return np.array(list(itertools.product(rng, repeat=d)), dtype=int).reshape(-1, d)


@dataclass(frozen=True)
class Lattice:
    basis: np.ndarray
    dual_basis: np.ndarray
    cell_volume: float
    dual_cell_volume: float
    r0: float
    search_bound: int
    # nonzero dual vectors within the search bound, used for Voronoi tests
    _dual_vectors: np.ndarray = field(repr=False, compare=False)

    @property
    def d(self) -> int:
        return self.basis.shape[0]

    def dual_vector(self, n) -> np.ndarray:
        return np.asarray(n, dtype=float) @ self.dual_basis

    def to_reduced(self, x: np.ndarray) -> np.ndarray:
        """Cell coordinates u with x = u @ basis."""
        return np.asarray(x, dtype=float) @ np.linalg.inv(self.basis)

    def fold(self, k: np.ndarray) -> np.ndarray:
        """Representative of k + (dual lattice) in the Brillouin zone.

        Ties on the zone boundary are broken towards the lexicographically
        largest representative, so equivalent points always fold alike.
        """
        k = np.atleast_2d(np.asarray(k, dtype=float))
        # coarse reduction to the dual cell around 0, then a Voronoi search
        k = k - np.rint(k @ np.linalg.inv(self.dual_basis)) @ self.dual_basis
        cands = np.vstack([np.zeros((1, self.d)), self._dual_vectors])
        for _ in range(4):
            shifted = k[:, None, :] - cands[None, :, :]
            dist = np.linalg.norm(shifted, axis=-1)
            best = dist.min(axis=1, keepdims=True)
            tied = dist <= best + 1e-12 * max(1.0, self.r0)
            out = np.empty_like(k)
            for i in range(len(k)):
                opts = shifted[i, tied[i]]
                out[i] = opts[np.lexsort(opts.T[::-1])[-1]]
            if np.array_equal(out, k):
                break
            k = out
        return k


def make_lattice(basis) -> Lattice:
    a = np.atleast_2d(np.asarray(basis, dtype=float))
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DegenerateLatticeError(f"basis must be a square d x d array, got shape {a.shape}")
    d = a.shape[0]
    det = np.linalg.det(a)
    if not np.isfinite(det) or abs(det) <= 1e-12 * max(1.0, np.abs(a).max()) ** d:
        raise DegenerateLatticeError("lattice basis is singular")
    dual = 2.0 * np.pi * np.linalg.inv(a).T
    cond = np.linalg.norm(dual, 2) * np.linalg.norm(np.linalg.inv(dual), 2)
    bound = max(1, math.ceil(2.0 * cond))
    ns = _integer_box(d, bound)
    ns = ns[np.any(ns != 0, axis=1)]
    vecs = ns @ dual
    r0 = 0.5 * float(np.linalg.norm(vecs, axis=1).min())
    vol = abs(det)
    return Lattice(
        basis=a,
        dual_basis=dual,
        cell_volume=vol,
        dual_cell_volume=(2.0 * np.pi) ** d / vol,
        r0=r0,
        search_bound=bound,
        _dual_vectors=vecs,
    )


def cubic_lattice(d: int, period: float = 2.0 * np.pi) -> Lattice:
    return make_lattice(period * np.eye(d))


def in_brillouin(lattice: Lattice, k) -> bool | np.ndarray:
    """Strict membership in the central Brillouin zone (vectorised over rows)."""
    k = np.asarray(k, dtype=float)
    single = k.ndim == 1
    k = np.atleast_2d(k)
    vecs = lattice._dual_vectors
    # |k| < |k - b|  <=>  2<k,b> < |b|^2
    lhs = 2.0 * k @ vecs.T
    rhs = np.sum(vecs**2, axis=1)[None, :]
    inside = np.all(lhs < rhs, axis=1)
    return bool(inside[0]) if single else inside


def direction_fan(d: int, count: int) -> np.ndarray:
    """Deterministic unit vectors: +-1 in 1D, uniform angles in 2D, Fibonacci sphere otherwise."""
    if d == 1:
        return np.array([[1.0], [-1.0]])[: max(1, min(count, 2))]
    if d == 2:
        ang = 2.0 * np.pi * (np.arange(count) + 0.5) / count
        return np.column_stack([np.cos(ang), np.sin(ang)])
    if d == 3:
        i = np.arange(count) + 0.5
        z = 1.0 - 2.0 * i / count
        phi = np.pi * (1.0 + 5**0.5) * i
        rho = np.sqrt(1.0 - z**2)
        return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])
    rng = np.random.default_rng(12345)
    v = rng.standard_normal((count, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


@dataclass(frozen=True)
class GridSpec:
    uniform: int = 8
    log_levels: int = 0
    directions: int = 4


def brillouin_grid(lattice: Lattice, spec: GridSpec | None = None, **kw) -> np.ndarray:
    """Uniform grid over the Brillouin zone plus a log-radial fan near k = 0.

    The uniform part uses cell midpoints of the dual cell folded into the
    zone; k = 0 is never returned.
    """
    spec = spec or GridSpec(**kw)
    if spec.uniform < 1 or spec.log_levels < 0:
        raise ValueError("uniform count must be >= 1 and log levels >= 0")
    d = lattice.d
    u = -0.5 + (np.arange(spec.uniform) + 0.5) / spec.uniform
    red = np.array(list(itertools.product(u, repeat=d))).reshape(-1, d)
    ks = lattice.fold(red @ lattice.dual_basis)
    ks = ks[np.linalg.norm(ks, axis=1) > 1e-12]
    on_boundary = ~in_brillouin(lattice, ks)
    ks[on_boundary] *= 1.0 - 1e-9
    pts = [ks]
    if spec.log_levels > 0:
        dirs = direction_fan(d, spec.directions)
        radii = lattice.r0 * 2.0 ** -np.arange(1, spec.log_levels + 1)
        pts.append((radii[:, None, None] * dirs[None, :, :]).reshape(-1, d))
    return np.vstack(pts)


class ModeSet:
    """Dual-lattice modes with integer coordinates in [-N, N]^d."""

    def __init__(self, lattice: Lattice, cutoff: int):
        if cutoff < 0:
            raise ValueError("cutoff must be non-negative")
        self.lattice = lattice
        self.cutoff = int(cutoff)
        self.ints = _integer_box(lattice.d, self.cutoff)
        self.vectors = self.ints @ lattice.dual_basis
        self._index = {tuple(n): i for i, n in enumerate(self.ints)}
        self.zero = self._index[(0,) * lattice.d]

    def __len__(self) -> int:
        return len(self.ints)

    def index(self, n) -> int:
        return self._index[tuple(int(v) for v in n)]

    def get(self, n, default=None):
        return self._index.get(tuple(int(v) for v in n), default)

    def nonzero(self) -> np.ndarray:
        return np.array([i for i in range(len(self)) if i != self.zero], dtype=int)
