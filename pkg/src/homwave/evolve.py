"""Cauchy problems for the oscillating and homogenized wave equations on band-limited data.

Data are finite sums phi(x) = sum_j a_j exp(i <xi_j, x>).  At scale eps each
frequency is regrouped as eps xi = b + k with k in the Brillouin zone; the
fiber matrix functions at time tau / eps act on the grouped amplitudes and
the result is read back at frequencies (b + k) / eps.  Norms are Euclidean
norms of amplitude vectors.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .cell import EffectiveModel
from .coeff import AliasingError
from .fiber import assemble_fiber, fit_slope
from .lattice import ModeSet
from .symbol import eval_symbol


@dataclass
class Spectrum:
    freqs: np.ndarray  # (K, d)
    amps: np.ndarray  # (K, n)

    def __post_init__(self):
        self.freqs = np.atleast_2d(np.asarray(self.freqs, dtype=float))
        self.amps = np.atleast_2d(np.asarray(self.amps, dtype=complex))
        if len(self.freqs) != len(self.amps):
            raise ValueError("freqs and amps must have the same length")

    @property
    def n(self) -> int:
        return self.amps.shape[1]

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def hs_norm(self, s: float) -> float:
        w = (1.0 + np.sum(self.freqs**2, axis=1)) ** s
        return float(np.sqrt(np.sum(w[:, None] * np.abs(self.amps) ** 2)))

    def sample(self, x) -> np.ndarray:
        """Values at points x of shape (..., d)."""
        x = np.asarray(x, dtype=float)
        return np.exp(1j * x @ self.freqs.T) @ self.amps

    def scaled(self, c) -> "Spectrum":
        return Spectrum(self.freqs.copy(), self.amps * c)


def zero_spectrum(d: int, n: int) -> Spectrum:
    return Spectrum(np.zeros((0, d)), np.zeros((0, n)))


def gaussian_packet(d: int, n: int, width: float = 1.0, spacing: float = 0.25,
                    radius: float = 3.0, polarization=None) -> Spectrum:
    """Samples of a Gaussian profile exp(-|xi|^2 / (2 width^2)) on a symmetric frequency lattice."""
    m = int(np.floor(radius / spacing))
    axis = spacing * np.arange(-m, m + 1)
    grid = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)
    grid = grid[np.linalg.norm(grid, axis=1) <= radius + 1e-12]
    pol = np.ones(n) / np.sqrt(n) if polarization is None else np.asarray(polarization, dtype=complex)
    prof = np.exp(-np.sum(grid**2, axis=1) / (2.0 * width**2)) * spacing ** (d / 2)
    return Spectrum(grid, prof[:, None] * pol[None, :])


@dataclass
class Forcing:
    """F(x, tau) = sum_j c_j(tau) exp(i <xi_j, x>); ``amps(tau)`` returns (K, n)."""
    freqs: np.ndarray
    amps: Callable[[float], np.ndarray]


@dataclass
class WaveState:
    eps: float
    tau: float
    freqs: np.ndarray
    amps: np.ndarray
    vel: np.ndarray
    energy: float | None = None

    def spectrum(self) -> Spectrum:
        return Spectrum(self.freqs, self.amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def sample(self, x) -> np.ndarray:
        return self.spectrum().sample(x)


def _key(v, digits: int = 9):
    return tuple(np.round(np.asarray(v, dtype=float), digits) + 0.0)


def l2_distance(a, b) -> float:
    """Distance between two band-limited functions given as (freqs, amps) pairs or states."""
    table: dict = {}
    for sgn, obj in ((1.0, a), (-1.0, b)):
        for xi, amp in zip(obj.freqs, obj.amps):
            key = _key(xi)
            table[key] = table.get(key, 0.0) + sgn * np.asarray(amp)
    return float(np.sqrt(sum(np.sum(np.abs(v) ** 2) for v in table.values())))


def _merge(*spectra):
    freqs, K = [], {}
    for sp in spectra:
        if sp is None:
            continue
        for xi in sp.freqs:
            key = _key(xi)
            if key not in K:
                K[key] = len(freqs)
                freqs.append(np.asarray(xi, dtype=float))
    d = next((sp.freqs.shape[1] for sp in spectra if sp is not None), 0)
    return np.array(freqs).reshape(len(freqs), d), K


def _fun_values(lam, t, kind):
    w = np.sqrt(lam)
    if kind == "cos":
        return np.cos(t * w)
    if kind == "sinc":
        out = np.full_like(w, float(t))
        nz = w > 0
        out[nz] = np.sin(t * w[nz]) / w[nz]
        return out
    if kind == "dcos":  # d/dt cos(t w) = -w sin(t w)
        return -w * np.sin(t * w)
    return np.cos(t * w)  # d/dt sinc = cos


_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(8)
_GAUSS_X = 0.5 * (_GAUSS_X + 1.0)
_GAUSS_W = 0.5 * _GAUSS_W


def _duhamel_nodes(tau: float, scale: float, wmax: float) -> np.ndarray:
    """Step nodes on [0, tau]: step <= tau/64 and <= scale * pi / (8 wmax)."""
    if tau == 0:
        return np.array([0.0])
    h = min(abs(tau) / 64.0, scale * np.pi / (8.0 * max(wmax, 1e-12)))
    count = max(int(np.ceil(abs(tau) / h)), 1) + 1
    return np.linspace(0.0, tau, count)


class _FiberGroup:
    """One k: eigenpairs of the fiber (or per-frequency effective blocks) plus sandwich factors."""

    def __init__(self, V, lam, left_cos, right_cos, left_sin, right_sin):
        self.V, self.lam = V, lam
        self.lc, self.rc, self.ls, self.rs = left_cos, right_cos, left_sin, right_sin

    def apply(self, kind: str, t: float, vec: np.ndarray) -> np.ndarray:
        vals = _fun_values(self.lam, t, kind)
        if kind in ("cos", "dcos"):
            return self.lc @ (self.V @ (vals * (self.V.conj().T @ (self.rc @ vec))))
        return self.ls @ (self.V @ (vals * (self.V.conj().T @ (self.rs @ vec))))


def _group_for_fiber(model: EffectiveModel, k, modes, weighted: bool) -> _FiberGroup:
    f = model.f if weighted else None
    A = assemble_fiber(model.sym, model.g, k, modes, f)
    size = A.size
    eye = np.eye(size)
    if weighted:
        F = A.F
        Finv = np.linalg.inv(F)
        return _FiberGroup(A.evecs, A.evals, F, Finv, F, F.conj().T)
    return _FiberGroup(A.evecs, A.evals, eye, eye, eye, eye)


def _effective_block(model: EffectiveModel, xi, weighted: bool) -> _FiberGroup:
    bt = eval_symbol(model.sym, xi)
    M = bt.conj().T @ model.g0 @ bt
    n = model.sym.n
    if weighted:
        f0 = model.f0
        M = f0 @ M @ f0
    M = 0.5 * (M + M.conj().T)
    lam, V = np.linalg.eigh(M)
    lam = np.maximum(lam, 0.0)
    eye = np.eye(n)
    if weighted:
        f0 = model.f0
        return _FiberGroup(V, lam, f0, np.linalg.inv(f0), f0, f0)
    return _FiberGroup(V, lam, eye, eye, eye, eye)


@dataclass
class _Plan:
    """Frequency bookkeeping for one scale: fiber groups and embedding positions."""
    eps: float
    freqs: np.ndarray
    groups: list  # (group, members, positions, out_freqs)


def _plan(model: EffectiveModel, freqs: np.ndarray, eps: float, weighted: bool,
          modes: ModeSet | None) -> _Plan:
    d = model.sym.d
    if eps == 0:
        groups = [(_effective_block(model, xi, weighted), [j], [0], freqs[j][None, :])
                  for j, xi in enumerate(freqs)]
        return _Plan(0.0, freqs, groups)
    modes = modes or ModeSet(model.lattice, model.cutoff)
    lat = model.lattice
    scaled = eps * freqs
    ks = lat.fold(scaled) if len(freqs) else np.zeros((0, d))
    reduced = np.rint((scaled - ks) @ np.linalg.inv(lat.dual_basis)).astype(int)
    by_k = defaultdict(list)
    for j, k in enumerate(ks):
        by_k[_key(k, 10)].append(j)
    groups = []
    for members in by_k.values():
        pos = []
        for j in members:
            p = modes.get(reduced[j])
            if p is None:
                raise AliasingError(
                    f"frequency {freqs[j]} maps to mode {reduced[j]} outside cutoff {modes.cutoff}")
            pos.append(p)
        k = ks[members[0]]
        grp = _group_for_fiber(model, k, modes, weighted)
        base = modes.vectors[pos[0]]
        out = freqs[members[0]] + (modes.vectors - base) / eps
        groups.append((grp, members, pos, out))
    return _Plan(eps, freqs, groups)


def _embed(rows: np.ndarray, members, pos, size: int, n: int) -> np.ndarray:
    vec = np.zeros(size, dtype=complex)
    for p, j in zip(pos, members):
        vec[p * n:(p + 1) * n] += rows[j]
    return vec


def _duhamel(grp: _FiberGroup, fvec, tau: float, scale: float):
    """int_0^tau of the sine propagator applied to F, and its time derivative.

    Composite 8-point Gauss rule with F evaluated at every Gauss node; steps
    resolve the fastest band, so smooth forcing is integrated to rounding.
    """
    lam = grp.lam
    wmax = float(np.sqrt(lam.max())) if lam.size else 1.0
    nodes = _duhamel_nodes(tau, scale, wmax)
    if len(nodes) == 1:
        z = np.zeros(grp.V.shape[0], dtype=complex)
        return z, z.copy()
    h = np.diff(nodes)
    S = nodes[:-1, None] + h[:, None] * _GAUSS_X[None, :]  # (M, q)
    W = h[:, None] * _GAUSS_W[None, :]
    proj = grp.V.conj().T @ grp.rs
    Fi = np.stack([proj @ fvec(t) for t in S.ravel()], axis=1).reshape(-1, *S.shape)  # (P, M, q)
    w = np.sqrt(lam)[:, None, None]
    arg = (tau - S)[None, :, :] / scale
    safe = np.where(w > 0, w, 1.0)
    ksin = np.where(w > 0, np.sin(arg * w) / safe, arg)
    kcos = np.cos(arg * w)
    du = scale * np.sum(W * ksin * Fi, axis=(1, 2))
    dv = np.sum(W * kcos * Fi, axis=(1, 2))
    return grp.ls @ (grp.V @ du), grp.ls @ (grp.V @ dv)


def _prepare(model, phi, psi, forcing):
    d, n = model.sym.d, model.sym.n
    psi = psi if psi is not None else zero_spectrum(d, n)
    src = [phi, psi] + ([Spectrum(forcing.freqs, forcing.amps(0.0))] if forcing is not None else [])
    freqs, index = _merge(*src)
    freqs = freqs.reshape(len(freqs), d)

    def table(sp):
        out = np.zeros((len(freqs), n), dtype=complex)
        for xi, a in zip(sp.freqs, sp.amps):
            out[index[_key(xi)]] += a
        return out

    ftab = None
    if forcing is not None:
        rows = np.array([index[_key(xi)] for xi in np.atleast_2d(forcing.freqs)], dtype=int)

        def ftab(t):
            out = np.zeros((len(freqs), n), dtype=complex)
            np.add.at(out, rows, np.asarray(forcing.amps(t), dtype=complex))
            return out

    return freqs, table(phi), table(psi), ftab


def _evolve(plan: _Plan, model, Phi, Psi, ftab, tau: float, want_energy: bool) -> WaveState:
    n, d = model.sym.n, model.sym.d
    scale = plan.eps if plan.eps > 0 else 1.0
    T = tau / scale
    out_f, out_a, out_v = [], [], []
    energy = 0.0
    for grp, members, pos, freqs_out in plan.groups:
        size = grp.V.shape[0]
        u0, u1 = _embed(Phi, members, pos, size, n), _embed(Psi, members, pos, size, n)
        u = grp.apply("cos", T, u0) + scale * grp.apply("sinc", T, u1)
        v = grp.apply("dcos", T, u0) / scale + grp.apply("dsinc", T, u1)
        if ftab is not None:
            du, dv = _duhamel(grp, lambda t: _embed(ftab(t), members, pos, size, n), tau, scale)
            u, v = u + du, v + dv
        if want_energy:
            Au = grp.V @ (grp.lam * (grp.V.conj().T @ u))
            energy += float(np.real(np.vdot(v, v)) + np.real(np.vdot(u, Au)) / scale**2)
        U, Vv = u.reshape(-1, n), v.reshape(-1, n)
        keep = np.any(U != 0, axis=1) | np.any(Vv != 0, axis=1)
        out_f.append(freqs_out[keep])
        out_a.append(U[keep])
        out_v.append(Vv[keep])

    def cat(xs, w):
        return np.vstack(xs) if xs else np.zeros((0, w))

    return WaveState(eps=plan.eps, tau=tau, freqs=cat(out_f, d), amps=cat(out_a, n), vel=cat(out_v, n),
                     energy=energy if want_energy else None)


def solve_cauchy(model: EffectiveModel, phi: Spectrum, psi: Spectrum | None, tau: float, eps: float,
                 forcing: Forcing | None = None, weighted: bool = False,
                 modes: ModeSet | None = None) -> WaveState:
    """v_eps(tau) (eps > 0) or the homogenized v_0(tau) (eps == 0), with velocity.

    The energy |v_tau|^2 + <A_eps v, v> is reported in the unweighted case.
    """
    if weighted and not model.weighted:
        raise ValueError("model has no density Q")
    if eps < 0:
        raise ValueError("eps must be non-negative")
    freqs, Phi, Psi, ftab = _prepare(model, phi, psi, forcing)
    plan = _plan(model, freqs, eps, weighted, modes)
    return _evolve(plan, model, Phi, Psi, ftab, tau, want_energy=not weighted)


def _propagate_many(grp: _FiberGroup, u0, u1, taus, scale):
    c0 = grp.V.conj().T @ (grp.rc @ u0)
    c1 = grp.V.conj().T @ (grp.rs @ u1)
    w = np.sqrt(grp.lam)[:, None]
    arg = taus[None, :] / scale
    sinc = np.where(w > 0, np.sin(arg * w) / np.where(w > 0, w, 1.0), arg)
    return (grp.lc @ (grp.V @ (np.cos(arg * w) * c0[:, None]))
            + scale * (grp.ls @ (grp.V @ (sinc * c1[:, None]))))


def error_in_time(model: EffectiveModel, phi: Spectrum, psi: Spectrum | None, taus, eps: float,
                  weighted: bool = False, modes: ModeSet | None = None) -> np.ndarray:
    """|v_eps(t) - v_0(t)| for every t in ``taus`` (no forcing); fibers are factored once."""
    n = model.sym.n
    freqs, Phi, Psi, _ = _prepare(model, phi, psi, None)
    fine = _plan(model, freqs, eps, weighted, modes)
    coarse = _plan(model, freqs, 0.0, weighted, modes)
    eff = {members[0]: grp for grp, members, _, _ in coarse.groups}
    taus = np.asarray(taus, dtype=float)
    sq = np.zeros(len(taus))
    for grp, members, pos, _ in fine.groups:
        size = grp.V.shape[0]
        U = _propagate_many(grp, _embed(Phi, members, pos, size, n), _embed(Psi, members, pos, size, n),
                            taus, eps)
        for p, j in zip(pos, members):
            U[p * n:(p + 1) * n] -= _propagate_many(eff[j], Phi[j], Psi[j], taus, 1.0)
        sq += np.sum(np.abs(U) ** 2, axis=0)
    return np.sqrt(sq)


def initial_energy(model: EffectiveModel, phi: Spectrum, psi: Spectrum | None, eps: float,
                   modes: ModeSet | None = None) -> float:
    """Energy of the data for the oscillating operator (tau = 0 state)."""
    return solve_cauchy(model, phi, psi, 0.0, eps, modes=modes).energy


def apply_operator(model: EffectiveModel, state: WaveState, modes: ModeSet | None = None) -> Spectrum:
    """A_eps applied to a state produced by ``solve_cauchy`` (unweighted)."""
    eps = state.eps
    n = model.sym.n
    modes = modes or ModeSet(model.lattice, model.cutoff)
    lat = model.lattice
    if eps == 0:
        out = np.array([eval_symbol(model.sym, xi).conj().T @ model.g0 @ eval_symbol(model.sym, xi) @ a
                        for xi, a in zip(state.freqs, state.amps)]).reshape(-1, n)
        return Spectrum(state.freqs, out)
    scaled = eps * state.freqs
    ks = lat.fold(scaled)
    reduced = np.rint((scaled - ks) @ np.linalg.inv(lat.dual_basis)).astype(int)
    groups = defaultdict(list)
    for j, k in enumerate(ks):
        groups[_key(k, 10)].append(j)
    res = np.zeros_like(state.amps)
    for members in groups.values():
        k = ks[members[0]]
        A = assemble_fiber(model.sym, model.g, k, modes).matrix
        vec = np.zeros(len(modes) * n, dtype=complex)
        pos = [modes.get(reduced[j]) for j in members]
        for p, j in zip(pos, members):
            vec[p * n:(p + 1) * n] = state.amps[j]
        w = A @ vec / eps**2
        for p, j in zip(pos, members):
            res[j] = w[p * n:(p + 1) * n]
    return Spectrum(state.freqs, res)


def duhamel_residual(model: EffectiveModel, forcing: Forcing, tau: float, eps: float,
                     steps: int = 256) -> float:
    """Relative residual of the second time difference against -A v + F at an interior time."""
    n = model.sym.n
    phi = Spectrum(forcing.freqs, np.zeros((len(forcing.freqs), n)))
    h = tau / steps
    states = [solve_cauchy(model, phi, None, t, eps, forcing=forcing) for t in (tau - h, tau, tau + h)]
    mid = states[1]
    second = Spectrum(mid.freqs, (states[0].amps - 2 * mid.amps + states[2].amps) / h**2)
    Av = apply_operator(model, mid)
    rhs = Spectrum(mid.freqs, -Av.amps)
    fk = {_key(xi): a for xi, a in zip(forcing.freqs, np.asarray(forcing.amps(tau)))}
    for j, xi in enumerate(mid.freqs):
        if _key(xi) in fk:
            rhs.amps[j] = rhs.amps[j] + fk[_key(xi)]
    num = np.linalg.norm(second.amps - rhs.amps)
    den = max(np.linalg.norm(np.asarray(forcing.amps(tau))), 1e-300)
    return float(num / den)


@dataclass
class RateReport:
    eps: np.ndarray
    errors: np.ndarray
    slope: float | None
    residual: float | None
    data_norm: float

    def to_dict(self) -> dict:
        return {"eps": self.eps.tolist(), "errors": self.errors.tolist(), "slope": self.slope,
                "residual": self.residual, "data_norm": self.data_norm}


def cauchy_rate(model: EffectiveModel, phi: Spectrum, psi: Spectrum | None, eps_list, tau: float,
                forcing: Forcing | None = None, weighted: bool = False, s: float = 0.0,
                time_uniform: bool = False) -> RateReport:
    """|v_eps - v_0| over eps_list with a fitted log-log slope.

    With ``time_uniform`` the error is the maximum over [0, tau] sampled at
    spacing about eps / 4 (forcing is not supported there); otherwise it is
    taken at tau only.
    """
    eps_list = np.asarray(eps_list, dtype=float)
    if time_uniform:
        if forcing is not None:
            raise ValueError("time_uniform errors are only available without forcing")
        errs = np.array([
            error_in_time(model, phi, psi, np.linspace(0.0, tau, int(np.ceil(4 * tau / e)) + 1), e,
                          weighted=weighted).max()
            for e in eps_list])
    else:
        v0 = solve_cauchy(model, phi, psi, tau, 0.0, forcing=forcing, weighted=weighted)
        errs = np.array([l2_distance(solve_cauchy(model, phi, psi, tau, e, forcing=forcing,
                                                  weighted=weighted), v0)
                         for e in eps_list])
    slope = resid = None
    if np.all(errs > 1e-14):
        slope, resid = fit_slope(eps_list, errs)
    return RateReport(eps=eps_list, errors=errs, slope=slope, residual=resid, data_norm=phi.hs_norm(s))
