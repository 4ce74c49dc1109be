"""Periodic cell problem, effective matrix and spectral window constants.

The corrector Lambda (n x m) solves b(D)^* g (b(D) Lambda + 1_m) = 0 with zero
mean.  It is computed by a Galerkin method over the nonzero modes of a
``ModeSet``; the resulting Hermitian positive definite system is solved
densely.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .coeff import PeriodicMatrixField, factor_density, harmonic_mean
from .lattice import ModeSet
from .symbol import DiffSymbol, ellipticity_bounds, eval_symbol


class SingularCellProblemError(RuntimeError):
    pass


@dataclass(frozen=True)
class SpectralWindow:
    c_star: float
    delta: float
    t0: float


@dataclass(frozen=True)
class CellSolution:
    Lambda: PeriodicMatrixField
    residual: float
    modes: ModeSet


@dataclass(frozen=True)
class EffectiveModel:
    sym: DiffSymbol
    g: PeriodicMatrixField
    Lambda: PeriodicMatrixField
    g_tilde: PeriodicMatrixField
    g0: np.ndarray
    Q: PeriodicMatrixField | None
    Q_bar: np.ndarray
    f: PeriodicMatrixField | None
    f0: np.ndarray
    Lambda_Q: PeriodicMatrixField
    window: SpectralWindow
    cutoff: int
    residual: float

    @property
    def lattice(self):
        return self.g.lattice

    @property
    def weighted(self) -> bool:
        return self.Q is not None


def symbol_blocks(sym: DiffSymbol, vectors: np.ndarray) -> np.ndarray:
    """Block-diagonal matrix diag_b b(b) of size (P m, P n)."""
    bs = eval_symbol(sym, vectors)
    return sla.block_diag(*bs)


def solve_cell(sym: DiffSymbol, g: PeriodicMatrixField, cutoff: int) -> CellSolution:
    """Galerkin corrector over modes 0 < |n|_inf <= cutoff."""
    if g.shape != (sym.m, sym.m):
        raise ValueError(f"g must be {sym.m} x {sym.m}, got {g.shape}")
    modes = ModeSet(g.lattice, cutoff)
    m, n = sym.m, sym.n
    nz = modes.nonzero()
    bs = eval_symbol(sym, modes.vectors[nz])  # (P', m, n)
    G = g.conv_matrix(modes)
    rows = (nz[:, None] * m + np.arange(m)).ravel()
    Gnn = G[np.ix_(rows, rows)]
    Gn0 = G[rows, modes.zero * m:(modes.zero + 1) * m]
    B = sla.block_diag(*bs)
    K = B.conj().T @ Gnn @ B
    K = 0.5 * (K + K.conj().T)
    rhs = -B.conj().T @ Gn0
    try:
        x = sla.cho_solve(sla.cho_factor(K), rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularCellProblemError("cell Galerkin matrix is not positive definite") from exc
    res = np.linalg.norm(K @ x - rhs) / max(np.linalg.norm(rhs), 1e-300)
    coef = np.zeros((len(modes), n, m), dtype=complex)
    coef[nz] = x.reshape(len(nz), n, m)
    coef = coef.reshape((2 * cutoff + 1,) * g.d + (n, m))
    return CellSolution(PeriodicMatrixField(coef, g.lattice), float(res), modes)


def apply_symbol(sym: DiffSymbol, F: PeriodicMatrixField) -> PeriodicMatrixField:
    """Coefficients of b(D) F: b(b) F_b at each mode b."""
    N = F.cutoff
    modes = ModeSet(F.lattice, N)
    bs = eval_symbol(sym, modes.vectors)
    flat = F.coef.reshape(len(modes), *F.shape)
    out = (bs @ flat).reshape((2 * N + 1,) * F.d + (sym.m, F.shape[1]))
    return PeriodicMatrixField(out, F.lattice)


def effective_matrix(sym: DiffSymbol, g: PeriodicMatrixField, Lam: PeriodicMatrixField):
    """(g_tilde, g0) with g_tilde = g (b(D) Lambda + 1) and g0 its mean."""
    inner = apply_symbol(sym, Lam) + np.eye(sym.m)
    g_tilde = g @ inner
    g0 = g_tilde.mean()
    return g_tilde, 0.5 * (g0 + g0.conj().T)


def weighted_mean_product(A: PeriodicMatrixField, B: PeriodicMatrixField) -> np.ndarray:
    """Cell mean of A(x) B(x) via Parseval: sum_b A_{-b} B_b."""
    N = min(A.cutoff, B.cutoff)
    modes = ModeSet(A.lattice, N)
    out = np.zeros((A.shape[0], B.shape[1]), dtype=complex)
    for nvec in modes.ints:
        out += A.coefficient(-nvec) @ B.coefficient(nvec)
    return out


def solve_cell_weighted(sym, g, Q: PeriodicMatrixField, cutoff: int, Lam=None):
    """Lambda_Q = Lambda - Qbar^{-1} mean(Q Lambda)."""
    if Lam is None:
        Lam = solve_cell(sym, g, cutoff).Lambda
    Qbar = Q.mean()
    shift = np.linalg.solve(Qbar, weighted_mean_product(Q, Lam))
    return Lam - shift


def _sqrtm_inv(M: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (M + M.conj().T))
    return (v * w**-0.5) @ v.conj().T


def spectral_window(sym, g: PeriodicMatrixField, f: PeriodicMatrixField | None) -> SpectralWindow:
    alpha0, alpha1 = ellipticity_bounds(sym)
    g_norm, g_inv = g.sup_norm(), g.inverse_sup_norm()
    if f is None:
        f_norm = f_inv = 1.0
    else:
        f_norm, f_inv = f.sup_norm(), f.inverse_sup_norm()
    r0 = g.lattice.r0
    c_star = alpha0 / (f_inv**2 * g_inv)
    delta = c_star * r0**2 / 4.0
    # h^* h = g, so |h| = |g|^{1/2} and |h^{-1}| = |g^{-1}|^{1/2}
    t0 = 0.5 * r0 * np.sqrt(alpha0 / alpha1) / (np.sqrt(g_norm * g_inv) * f_norm * f_inv)
    return SpectralWindow(float(c_star), float(delta), float(t0))


def build_model(sym: DiffSymbol, g: PeriodicMatrixField, cutoff: int,
                Q: PeriodicMatrixField | None = None, f_cutoff: int | None = None) -> EffectiveModel:
    """Solve the cell problem and collect every effective quantity."""
    if not g.is_hermitian:
        raise ValueError("g must be Hermitian")
    sol = solve_cell(sym, g, cutoff)
    g_tilde, g0 = effective_matrix(sym, g, sol.Lambda)
    if Q is None:
        Qbar = np.eye(sym.n)
        f = None
        Lam_Q = sol.Lambda
    else:
        if Q.shape != (sym.n, sym.n):
            raise ValueError("Q must be n x n")
        Qbar = Q.mean()
        f = factor_density(Q, f_cutoff)
        Lam_Q = solve_cell_weighted(sym, g, Q, cutoff, Lam=sol.Lambda)
    f0 = _sqrtm_inv(Qbar)
    window = spectral_window(sym, g, f)
    return EffectiveModel(sym=sym, g=g, Lambda=sol.Lambda, g_tilde=g_tilde, g0=g0, Q=Q,
                          Q_bar=Qbar, f=f, f0=f0, Lambda_Q=Lam_Q, window=window,
                          cutoff=cutoff, residual=sol.residual)


def _psd_leq(A, B, slack):
    return float(np.linalg.eigvalsh(0.5 * ((B - A) + (B - A).conj().T)).min()) >= -slack


def voigt_reuss_check(g: PeriodicMatrixField, g0: np.ndarray, slack: float = 1e-8) -> dict:
    """Compare g0 with the harmonic and arithmetic means in the PSD order."""
    upper = g.mean()
    upper = 0.5 * (upper + upper.conj().T)
    lower = harmonic_mean(g)
    gap_up = np.linalg.eigvalsh(upper - g0)
    gap_lo = np.linalg.eigvalsh(g0 - lower)
    return {
        "lower_ok": _psd_leq(lower, g0, slack),
        "upper_ok": _psd_leq(g0, upper, slack),
        "equals_mean": bool(np.abs(upper - g0).max() <= slack),
        "equals_harmonic_mean": bool(np.abs(lower - g0).max() <= slack),
        "min_gap_upper": float(gap_up.min()),
        "min_gap_lower": float(gap_lo.min()),
        "gaps_upper": gap_up.tolist(),
        "gaps_lower": gap_lo.tolist(),
        "strict": bool(gap_up.min() > slack and gap_lo.min() > slack),
    }
