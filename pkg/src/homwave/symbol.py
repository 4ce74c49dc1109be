"""First-order matrix symbols b(xi) = sum_l b_l xi_l and their ellipticity constants."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .lattice import direction_fan


class RankDeficientSymbolError(ValueError):
    pass


@dataclass(frozen=True)
class DiffSymbol:
    b_mats: np.ndarray  # (d, m, n) complex
    name: str = "custom"

    def __post_init__(self):
        b = np.asarray(self.b_mats, dtype=complex)
        if b.ndim != 3:
            raise ValueError("b_mats must have shape (d, m, n)")
        if b.shape[1] < b.shape[2]:
            raise ValueError(f"need m >= n, got m={b.shape[1]}, n={b.shape[2]}")
        object.__setattr__(self, "b_mats", b)

    @property
    def d(self) -> int:
        return self.b_mats.shape[0]

    @property
    def m(self) -> int:
        return self.b_mats.shape[1]

    @property
    def n(self) -> int:
        return self.b_mats.shape[2]

    @property
    def is_real(self) -> bool:
        return bool(np.all(self.b_mats.imag == 0))

    def __call__(self, xi) -> np.ndarray:
        return eval_symbol(self, xi)


def eval_symbol(sym: DiffSymbol, xi) -> np.ndarray:
    """b(xi); ``xi`` may carry leading batch axes, the last axis has length d."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] != sym.d:
        raise ValueError(f"xi has length {xi.shape[-1]}, symbol dimension is {sym.d}")
    return np.einsum("...l,lmn->...mn", xi, sym.b_mats)


def _sphere_fan(d: int, size: int) -> np.ndarray:
    if d == 1:
        return np.array([[1.0], [-1.0]])
    # coordinate axes are common extremal directions for structured symbols
    return np.vstack([np.eye(d), direction_fan(d, size)])


def ellipticity_bounds(sym: DiffSymbol, fan_size: int = 256) -> tuple[float, float]:
    """(alpha0, alpha1) = extreme eigenvalues of b(theta)^* b(theta) over a sphere fan.

    The fan is evaluated at ``fan_size`` and once more at 4x refinement.
    """
    if fan_size < 2 * sym.d:
        raise ValueError("fan_size must be at least 2d")
    thetas = np.vstack([_sphere_fan(sym.d, fan_size), _sphere_fan(sym.d, 4 * fan_size)])
    bt = eval_symbol(sym, thetas)
    ev = np.linalg.eigvalsh(np.conj(np.swapaxes(bt, -1, -2)) @ bt)
    alpha0, alpha1 = float(ev[:, 0].min()), float(ev[:, -1].max())
    if alpha0 <= 1e-12:
        raise RankDeficientSymbolError(f"b(theta) loses rank on the fan (alpha0 = {alpha0:.3e})")
    return alpha0, alpha1


def acoustics_symbol(d: int) -> DiffSymbol:
    """b(D) = D: m = d, n = 1."""
    if d < 1:
        raise ValueError("acoustics symbol needs d >= 1")
    b = np.zeros((d, d, 1))
    for l in range(d):
        b[l, l, 0] = 1.0
    return DiffSymbol(b, name="acoustics")


def elasticity_pairs(d: int) -> list[tuple[int, int]]:
    """Row ordering of strain components (0-based pairs j <= l)."""
    if d == 2:
        return [(0, 0), (0, 1), (1, 1)]
    if d == 3:
        return [(0, 0), (0, 1), (1, 1), (1, 2), (2, 2), (0, 2)]
    return [(j, l) for j in range(d) for l in range(j, d)]


def elasticity_symbol(d: int) -> DiffSymbol:
    """b(D)u = -i e_*(u), m = d(d+1)/2, n = d."""
    if d < 2:
        raise ValueError("elasticity symbol needs d >= 2")
    pairs = elasticity_pairs(d)
    b = np.zeros((d, len(pairs), d))
    for row, (j, l) in enumerate(pairs):
        if j == l:
            b[j, row, j] = 1.0
        else:
            b[l, row, j] = 0.5
            b[j, row, l] = 0.5
    return DiffSymbol(b, name="elasticity")


def hill_symbol(d: int) -> DiffSymbol:
    """Divergence row followed by one rotation row per pair j < l; m = 1 + d(d-1)/2."""
    if d < 2:
        raise ValueError("Hill symbol needs d >= 2")
    pairs = list(itertools.combinations(range(d), 2))
    b = np.zeros((d, 1 + len(pairs), d))
    for l in range(d):
        b[l, 0, l] = 1.0
    for row, (j, l) in enumerate(pairs, start=1):
        b[l, row, j] = 1.0
        b[j, row, l] = -1.0
    return DiffSymbol(b, name="hill")


def custom_symbol(mats) -> DiffSymbol:
    """Build from nested lists; complex entries may be given as [re, im] pairs."""
    arr = np.asarray(mats, dtype=float if _is_pair_encoded(mats) else complex)
    if _is_pair_encoded(mats):
        arr = arr[..., 0] + 1j * arr[..., 1]
    return DiffSymbol(arr)


def _is_pair_encoded(mats) -> bool:
    arr = np.asarray(mats)
    return arr.ndim == 4 and arr.shape[-1] == 2 and not np.iscomplexobj(arr)


def make_symbol(kind: str, d: int, mats=None) -> DiffSymbol:
    if kind == "acoustics":
        return acoustics_symbol(d)
    if kind == "elasticity":
        return elasticity_symbol(d)
    if kind == "hill":
        return hill_symbol(d)
    if kind == "custom":
        if mats is None:
            raise ValueError("custom symbol requires matrices")
        return custom_symbol(mats)
    raise ValueError(f"unknown symbol kind {kind!r}")
