"""Spectral germ, threshold operators N(theta) and the cluster splitting N = N0 + N*.

All matrices "in the germ basis" are expressed through the columns zeta_l of
``Z``, which are orthonormal with weight Qbar: Z^* Qbar Z = I.  Entries of
Z^* N Z are then the pairings <N zeta_k, zeta_l>.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.optimize import minimize, minimize_scalar

from .cell import EffectiveModel
from .coeff import PeriodicMatrixField
from .lattice import ModeSet, direction_fan
from .symbol import eval_symbol

CLUSTER_RTOL = 1e-8


class ProbeInapplicableError(ValueError):
    pass


@dataclass
class GermData:
    theta: np.ndarray
    S_hat: np.ndarray
    gammas: np.ndarray
    zetas: np.ndarray  # columns, Qbar-orthonormal
    N_full: np.ndarray  # germ basis
    N0: np.ndarray
    Nstar: np.ndarray
    clusters: list[list[int]]
    N_standard: np.ndarray = field(repr=False, default=None)

    @property
    def mus(self) -> np.ndarray:
        return np.real(np.diag(self.N0)).copy()


def _unit(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if abs(np.linalg.norm(theta) - 1.0) > 1e-10:
        raise ValueError("theta must be a unit vector")
    return theta


def _contract(Lam: PeriodicMatrixField, B: np.ndarray, g_tilde: PeriodicMatrixField) -> np.ndarray:
    """mean(Lambda^* B g_tilde) = sum_b (Lambda_b)^* B g_tilde_b (Parseval)."""
    N = min(Lam.cutoff, g_tilde.cutoff)
    modes = ModeSet(Lam.lattice, N)
    out = np.zeros((Lam.shape[1], g_tilde.shape[1]), dtype=complex)
    for nvec in modes.ints:
        out += Lam.coefficient(nvec).conj().T @ B @ g_tilde.coefficient(nvec)
    return out


def L_matrix(model: EffectiveModel, theta, Lam: PeriodicMatrixField | None = None) -> np.ndarray:
    theta = _unit(theta)
    Lam = model.Lambda if Lam is None else Lam
    B = eval_symbol(model.sym, theta).conj().T
    M = _contract(Lam, B, model.g_tilde)
    return M + M.conj().T


def N_matrix(model: EffectiveModel, theta) -> np.ndarray:
    bt = eval_symbol(model.sym, _unit(theta))
    N = bt.conj().T @ L_matrix(model, theta) @ bt
    return 0.5 * (N + N.conj().T)


def N_weighted(model: EffectiveModel, theta) -> np.ndarray:
    """Threshold operator built from the Q-weighted corrector Lambda_Q."""
    bt = eval_symbol(model.sym, _unit(theta))
    N = bt.conj().T @ L_matrix(model, theta, Lam=model.Lambda_Q) @ bt
    return 0.5 * (N + N.conj().T)


def clusters_of(gammas: np.ndarray, rtol: float = CLUSTER_RTOL) -> list[list[int]]:
    tol = rtol * max(1.0, float(np.abs(gammas).max()))
    groups = [[0]]
    for l in range(1, len(gammas)):
        if gammas[l] - gammas[groups[-1][-1]] <= tol:
            groups[-1].append(l)
        else:
            groups.append([l])
    return groups


def split_N(Ng: np.ndarray, clusters: list[list[int]]):
    """(N0, Nstar, mus) for N given in the germ basis."""
    N0 = np.zeros_like(Ng)
    for c in clusters:
        N0[np.ix_(c, c)] = Ng[np.ix_(c, c)]
    return N0, Ng - N0, np.real(np.diag(N0)).copy()


def germ_at(model: EffectiveModel, theta, weighted: bool | None = None) -> GermData:
    """Germ eigenpairs at theta; within clusters the basis diagonalizes N."""
    theta = _unit(theta)
    weighted = model.weighted if weighted is None else weighted
    bt = eval_symbol(model.sym, theta)
    S = bt.conj().T @ model.g0 @ bt
    S = 0.5 * (S + S.conj().T)
    Qbar = model.Q_bar if weighted else np.eye(model.sym.n)
    gam, Z = sla.eigh(S, Qbar)
    N = N_weighted(model, theta) if weighted else N_matrix(model, theta)
    cl = clusters_of(gam)
    for c in cl:
        if len(c) > 1:
            blk = Z[:, c].conj().T @ N @ Z[:, c]
            _, U = np.linalg.eigh(0.5 * (blk + blk.conj().T))
            Z[:, c] = Z[:, c] @ U
    Ng = Z.conj().T @ N @ Z
    N0, Ns, _ = split_N(Ng, cl)
    return GermData(theta=theta, S_hat=S, gammas=gam, zetas=Z, N_full=Ng, N0=N0,
                    Nstar=Ns, clusters=cl, N_standard=N)


@dataclass
class ConditionReport:
    n_theta: int
    N_zero: bool
    N0_zero: bool
    crossing_pairs: list  # (k, l, theta)
    K_set: list  # (k, l)
    c_circ: float | None
    condition_A: bool
    max_N: float
    max_N0: float

    def to_dict(self) -> dict:
        return {
            "n_theta": self.n_theta,
            "N_zero": self.N_zero,
            "N0_zero": self.N0_zero,
            "crossing_pairs": [[int(k), int(l), [float(v) for v in th]] for k, l, th in self.crossing_pairs],
            "K_set": [[int(k), int(l)] for k, l in self.K_set],
            "c_circ": self.c_circ,
            "condition_A": self.condition_A,
            "max_N": self.max_N,
            "max_N0": self.max_N0,
        }


def _germ_gammas(model, theta, weighted):
    bt = eval_symbol(model.sym, theta)
    S = bt.conj().T @ model.g0 @ bt
    Qbar = model.Q_bar if weighted else np.eye(model.sym.n)
    return sla.eigh(0.5 * (S + S.conj().T), Qbar, eigvals_only=True)


def _refine_crossing(model, weighted, l, theta0, neighbours):
    """Minimize the gap gamma_{l+1} - gamma_l near theta0; returns (theta, gap)."""
    d = model.sym.d

    def gap_theta(th):
        th = th / np.linalg.norm(th)
        g = _germ_gammas(model, th, weighted)
        return g[l + 1] - g[l]

    if d == 2:
        phi0 = np.arctan2(theta0[1], theta0[0])
        span = np.max([abs(np.angle(np.exp(1j * (np.arctan2(v[1], v[0]) - phi0)))) for v in neighbours])
        res = minimize_scalar(lambda p: gap_theta(np.array([np.cos(p), np.sin(p)])),
                              bounds=(phi0 - span, phi0 + span), method="bounded",
                              options={"xatol": 1e-12})
        th = np.array([np.cos(res.x), np.sin(res.x)])
        return th, float(res.fun)
    # tangent-plane parametrization around theta0
    basis = np.linalg.svd(theta0[None, :])[2][1:]
    res = minimize(lambda u: gap_theta(theta0 + u @ basis), np.zeros(d - 1),
                   method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000})
    th = theta0 + res.x @ basis
    return th / np.linalg.norm(th), float(res.fun)


def condition_scan(model: EffectiveModel, fan=None, weighted: bool | None = None,
                   tol: float = 1e-10, fan_size: int = 64) -> ConditionReport:
    """Scan the unit sphere for vanishing of N, N0 and for crossings carrying nonzero N blocks."""
    weighted = model.weighted if weighted is None else weighted
    d, n = model.sym.d, model.sym.n
    fan = direction_fan(d, fan_size) if fan is None else np.asarray(fan, dtype=float)
    germs = [germ_at(model, th, weighted=weighted) for th in fan]
    scale = max(1.0, float(np.abs(model.g0).max()))
    max_N = max(float(np.abs(g.N_full).max()) for g in germs)
    max_N0 = max(float(np.abs(g.N0).max()) for g in germs)
    gam = np.array([g.gammas for g in germs])

    # K_set: off-diagonal germ-basis entries that are nonzero somewhere on the fan
    K = []
    for k in range(n):
        for l in range(n):
            if k != l and max(abs(g.N_full[k, l]) for g in germs) > tol * scale:
                K.append((k, l))

    crossings = []
    if d >= 2 and n >= 2:
        dists = np.linalg.norm(fan[:, None, :] - fan[None, :, :], axis=-1)
        nb = np.argsort(dists, axis=1)[:, 1:(3 if d == 2 else 7)]
        for l in range(n - 1):
            gap = gam[:, l + 1] - gam[:, l]
            found = []
            for i in range(len(fan)):
                if np.all(gap[i] <= gap[nb[i]]):
                    th, gval = _refine_crossing(model, weighted, l, fan[i], fan[nb[i]])
                    if gval <= 1e-6 * max(1.0, float(gam.max())):
                        if not any(np.linalg.norm(th - t2) < 1e-4 for t2 in found):
                            found.append(th)
                            crossings.append((l, l + 1, th))
    # at a crossing the two branches form one cluster; its N block belongs to N0
    for k, l, th in crossings:
        g = germ_at(model, th, weighted=weighted)
        Z = g.zetas[:, [k, l]]
        blk = Z.conj().T @ g.N_standard @ Z
        max_N0 = max(max_N0, float(np.abs(np.linalg.eigvalsh(0.5 * (blk + blk.conj().T))).max()))
    crossing_pairs = {(k, l) for k, l, _ in crossings}
    bad = [p for p in K if (min(p), max(p)) in crossing_pairs]
    N0_zero = max_N0 <= tol * scale
    condition_A = N0_zero and not bad
    c_circ = None
    if K:
        c_star = model.window.c_star
        vals = [min(c_star, abs(gam[i, k] - gam[i, l]) / n) for i in range(len(fan)) for k, l in K]
        c_circ = float(min(vals))
    return ConditionReport(
        n_theta=len(fan), N_zero=max_N <= tol * scale, N0_zero=N0_zero,
        crossing_pairs=crossings, K_set=K, c_circ=c_circ, condition_A=condition_A,
        max_N=max_N, max_N0=max_N0,
    )
