"""Named example media used by the CLI, the tests and the acceptance suite.

Each preset fixes a lattice, a symbol b(D), the coefficient g (and optionally a
density Q), a Galerkin cutoff and a reference direction for germ and branch
probes.  Fields that are not trigonometric polynomials are sampled with a
cutoff large enough that the dropped tail is below 1e-9.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .cell import EffectiveModel, build_model
from .coeff import PeriodicMatrixField
from .lattice import cubic_lattice
from .symbol import DiffSymbol, acoustics_symbol, elasticity_symbol, hill_symbol


class UnknownPresetError(KeyError):
    pass


@dataclass(frozen=True)
class Preset:
    name: str
    sym: DiffSymbol
    g: PeriodicMatrixField
    cutoff: int
    theta: tuple = (0.0, 1.0)
    Q: PeriodicMatrixField | None = None
    note: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def d(self) -> int:
        return self.sym.d

    def model(self) -> EffectiveModel:
        return _model(self.name)


def _diag_field(entries, shape):
    out = np.zeros(shape + (len(entries), len(entries)), dtype=complex)
    for j, e in enumerate(entries):
        out[..., j, j] = e
    return out


def _const(d=2):
    L = cubic_lattice(d)
    g = np.array([[2.0, 0.3], [0.3, 1.0]]) if d == 2 else np.array([[1.7]])
    return Preset("const", acoustics_symbol(d), PeriodicMatrixField.constant(g, L), cutoff=3,
                  theta=(0.6, 0.8) if d == 2 else (1.0,), note="constant coefficient sanity case")


def _acoustics_1d():
    L = cubic_lattice(1)
    g = PeriodicMatrixField.from_callable(lambda x: 2.0 + np.sin(x[..., 0]), L, 1)
    return Preset("acoustics-1d", acoustics_symbol(1), g, cutoff=8, theta=(1.0,),
                  note="g = 2 + sin x")


def _acoustics_1d_harmonic():
    L = cubic_lattice(1)
    g = PeriodicMatrixField.from_callable(lambda x: 1.0 / (2.0 + np.sin(x[..., 0])), L, 16)
    return Preset("acoustics-1d-harmonic", acoustics_symbol(1), g, cutoff=16, theta=(1.0,),
                  note="g = 1/(2 + sin x); g0 = 1/2")


def _acoustics_1d_weighted():
    L = cubic_lattice(1)
    g = PeriodicMatrixField.from_callable(lambda x: 2.0 + np.sin(x[..., 0]), L, 1)
    Q = PeriodicMatrixField.from_callable(lambda x: 1.0 + 0.5 * np.cos(x[..., 0]), L, 1)
    return Preset("acoustics-1d-weighted", acoustics_symbol(1), g, cutoff=8, theta=(1.0,), Q=Q,
                  note="g = 2 + sin x, density Q = 1 + cos(x)/2")


def _acoustics_real_2d():
    L = cubic_lattice(2)

    def g(x):
        x1, x2 = x[..., 0], x[..., 1]
        out = np.zeros(x.shape[:-1] + (2, 2))
        out[..., 0, 0] = 2.0 + 0.5 * np.cos(x1)
        out[..., 1, 1] = 1.5 + 0.4 * np.sin(x2)
        out[..., 0, 1] = out[..., 1, 0] = 0.3 * np.cos(x1 + x2)
        return out

    return Preset("acoustics-real-2d", acoustics_symbol(2), PeriodicMatrixField.from_callable(g, L, 1),
                  cutoff=4, theta=(0.6, 0.8), note="real symmetric trigonometric g")


def _crossing_elasticity():
    L = cubic_lattice(2)

    def g(x):
        x1 = x[..., 0]
        return _diag_field([np.ones_like(x1), 4.0 / (1.0 + 0.5 * np.sin(x1)), 1.0 + 0.5 * np.cos(x1)],
                           x.shape[:-1])

    return Preset("example-8.7", elasticity_symbol(2), PeriodicMatrixField.from_callable(g, L, 16),
                  cutoff=8, theta=(0.0, 1.0), note="anisotropic elasticity-type system with N0 != 0")


def _complex_scalar(c: float = 0.3):
    L = cubic_lattice(2)

    def g(x):
        x1 = x[..., 0]
        bp = c * (np.cos(x1) - 2.0 * np.sin(2.0 * x1))
        out = np.zeros(x.shape[:-1] + (2, 2), dtype=complex)
        out[..., 0, 0] = out[..., 1, 1] = 1.0
        out[..., 0, 1] = 1j * bp
        out[..., 1, 0] = -1j * bp
        return out

    return Preset("example-13.2", acoustics_symbol(2), PeriodicMatrixField.from_callable(g, L, 2),
                  cutoff=6, theta=(0.0, 1.0), note=f"complex Hermitian g, c = {c}", extra={"c": c})


def _hill(beta0: float = 1.5, beta1: float = 0.4, mu0: float = 1.0):
    L = cubic_lattice(2)

    def g(x):
        x1 = x[..., 0]
        return _diag_field([beta0 + beta1 * np.cos(x1), np.full_like(x1, 0.5 * mu0)], x.shape[:-1])

    under_beta = np.sqrt(beta0**2 - beta1**2)
    return Preset("hill", hill_symbol(2), PeriodicMatrixField.from_callable(g, L, 1), cutoff=6,
                  theta=(0.6, 0.8), note="constant shear modulus",
                  extra={"mu0": mu0, "underline_beta": float(under_beta)})


def _layered_isotropic():
    from .layered_iso import B_DEFAULT, C_DEFAULT, solve_shift

    a = solve_shift()
    b, c = B_DEFAULT, C_DEFAULT
    L = cubic_lattice(2)

    # Lame form g = [[K+mu, 0, K-mu], [0, 4 mu, 0], [K-mu, 0, K+mu]] on the (11, 12, 22) strain rows,
    # with the jump of K smoothed only by Fourier truncation
    def g(x):
        x1 = x[..., 0]
        K = np.where(x1 < 0.5 * np.pi, a - b, a + b)
        mu = 1.0 + c * np.cos(x1) ** 2
        out = np.zeros(x.shape[:-1] + (3, 3))
        out[..., 0, 0] = out[..., 2, 2] = K + mu
        out[..., 0, 2] = out[..., 2, 0] = K - mu
        out[..., 1, 1] = 4.0 * mu
        return out

    return Preset("isotropic-elasticity-15.3", elasticity_symbol(2), PeriodicMatrixField.from_callable(g, L, 24),
                  cutoff=12, theta=(0.7345, 0.6787), note="piecewise K; Fourier-truncated, see layered_iso",
                  extra={"a": a})


_REGISTRY = {
    "const": _const,
    "acoustics-1d": _acoustics_1d,
    "acoustics-1d-harmonic": _acoustics_1d_harmonic,
    "acoustics-1d-weighted": _acoustics_1d_weighted,
    "acoustics-real-2d": _acoustics_real_2d,
    "example-8.7": _crossing_elasticity,
    "example-13.2": _complex_scalar,
    "hill": _hill,
    "isotropic-elasticity-15.3": _layered_isotropic,
}

PRESET_NAMES = tuple(_REGISTRY)


@lru_cache(maxsize=None)
def get_preset(name: str) -> Preset:
    try:
        return _REGISTRY[name]()
    except KeyError:
        raise UnknownPresetError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}") from None


@lru_cache(maxsize=None)
def _model(name: str) -> EffectiveModel:
    p = get_preset(name)
    return build_model(p.sym, p.g, p.cutoff, Q=p.Q)
