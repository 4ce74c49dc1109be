"""Truncated Bloch fibers, spectral matrix functions and homogenization error functionals.

A fiber is assembled on a ``ModeSet`` as A(k) = F^* B(k)^* G B(k) F where G and
F are the block-Toeplitz (Galerkin) matrices of g and f and B(k) is the block
diagonal of b(b + k).  Eigenpairs come from the SVD of X = C^* B(k) F with
G = C C^*, so that small eigenvalues lambda = sigma^2 keep full relative
accuracy near k = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linear_sum_assignment

from .cell import EffectiveModel
from .coeff import AliasingError, PeriodicMatrixField
from .germ import ProbeInapplicableError, germ_at
from .lattice import ModeSet, brillouin_grid, GridSpec
from .symbol import DiffSymbol, eval_symbol

EIG_FLOOR = 1e-12


class BranchTrackingError(RuntimeError):
    pass


@dataclass
class FiberOperator:
    k: np.ndarray
    modes: ModeSet
    n: int
    evals: np.ndarray  # ascending, floored at 0
    evecs: np.ndarray  # orthonormal columns
    F: np.ndarray | None = None  # sandwich factor (weighted case)
    _matrix: np.ndarray | None = field(default=None, repr=False)

    @property
    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            self._matrix = (self.evecs * self.evals) @ self.evecs.conj().T
        return self._matrix

    @property
    def size(self) -> int:
        return len(self.evals)


def _floor(lam: np.ndarray) -> np.ndarray:
    lam = np.maximum(lam, 0.0)
    top = lam.max() if lam.size else 0.0
    return np.where(lam < EIG_FLOOR * top, 0.0, lam)


def _check_band(field_: PeriodicMatrixField, modes: ModeSet, name: str):
    if field_.lattice is not modes.lattice and not np.allclose(field_.lattice.basis, modes.lattice.basis):
        raise ValueError(f"{name} lives on a different lattice than the mode set")
    if field_.cutoff > 2 * modes.cutoff:
        raise AliasingError(
            f"{name} has cutoff {field_.cutoff}, beyond the 2N = {2 * modes.cutoff} band the mode set can resolve"
        )


def symbol_block_diag(sym: DiffSymbol, vectors: np.ndarray) -> np.ndarray:
    return sla.block_diag(*eval_symbol(sym, vectors))


def assemble_fiber(sym: DiffSymbol, g: PeriodicMatrixField, k, modes: ModeSet,
                   f: PeriodicMatrixField | None = None) -> FiberOperator:
    k = np.asarray(k, dtype=float).reshape(sym.d)
    _check_band(g, modes, "g")
    G = g.conv_matrix(modes)
    G = 0.5 * (G + G.conj().T)
    C = np.linalg.cholesky(G)
    X = C.conj().T @ symbol_block_diag(sym, modes.vectors + k)
    F = None
    if f is not None:
        _check_band(f, modes, "f")
        F = f.conv_matrix(modes)
        X = X @ F
    _, sv, vh = np.linalg.svd(X, full_matrices=False)
    order = np.argsort(sv)
    lam = _floor(sv[order] ** 2)
    return FiberOperator(k=k, modes=modes, n=sym.n, evals=lam, evecs=vh.conj().T[:, order], F=F)


def effective_fiber(sym: DiffSymbol, g0: np.ndarray, k, modes: ModeSet,
                    f0: np.ndarray | None = None) -> FiberOperator:
    """Block-diagonal fiber b(b+k)^* g0 b(b+k), sandwiched by the constant f0 if given."""
    k = np.asarray(k, dtype=float).reshape(sym.d)
    bs = eval_symbol(sym, modes.vectors + k)
    blocks = np.conj(np.swapaxes(bs, -1, -2)) @ g0 @ bs
    if f0 is not None:
        blocks = f0.conj().T @ blocks @ f0
    blocks = 0.5 * (blocks + np.conj(np.swapaxes(blocks, -1, -2)))
    w, v = np.linalg.eigh(blocks)
    lam = w.ravel()
    vecs = sla.block_diag(*v)
    order = np.argsort(lam, kind="stable")
    F = None if f0 is None else np.kron(np.eye(len(modes)), f0)
    return FiberOperator(k=k, modes=modes, n=sym.n, evals=_floor(lam[order]),
                         evecs=vecs[:, order], F=F)


def _cos_values(lam, tau):
    return np.cos(tau * np.sqrt(lam))


def _sinc_values(lam, tau):
    r = np.sqrt(lam)
    out = np.full_like(r, float(tau))
    nz = r > 0
    out[nz] = np.sin(tau * r[nz]) / r[nz]
    return out


def _apply(fib: FiberOperator, vals: np.ndarray) -> np.ndarray:
    return (fib.evecs * vals) @ fib.evecs.conj().T


def matfun_cos(fib: FiberOperator, tau: float) -> np.ndarray:
    return _apply(fib, _cos_values(fib.evals, tau))


def matfun_sinc(fib: FiberOperator, tau: float) -> np.ndarray:
    """A^{-1/2} sin(tau A^{1/2}), equal to tau on the kernel."""
    return _apply(fib, _sinc_values(fib.evals, tau))


def smoothing_diag(k, eps: float, s: float, modes: ModeSet, n: int) -> np.ndarray:
    """Diagonal entries eps^s (|b+k|^2 + eps^2)^{-s/2}, each repeated n times."""
    k = np.asarray(k, dtype=float)
    r2 = np.sum((modes.vectors + k) ** 2, axis=1)
    vals = eps**s * (r2 + eps**2) ** (-s / 2.0)
    return np.repeat(vals, n)


def smoothing(k, eps: float, s: float, modes: ModeSet, n: int) -> np.ndarray:
    return np.diag(smoothing_diag(k, eps, s, modes, n))


def _sandwich(fib: FiberOperator, core: np.ndarray, functional: str) -> np.ndarray:
    if fib.F is None:
        return core
    if functional == "J1":
        # F cos F^{-1}
        return np.linalg.solve(fib.F.T, (fib.F @ core).T).T
    return fib.F @ core @ fib.F.conj().T


def fiber_difference(A: FiberOperator, A0: FiberOperator, arg: float, functional: str) -> np.ndarray:
    fn = matfun_cos if functional == "J1" else matfun_sinc
    return _sandwich(A, fn(A, arg), functional) - _sandwich(A0, fn(A0, arg), functional)


def fiber_error_pair(A: FiberOperator, A0: FiberOperator, eps: float, tau: float, s: float,
                     functional: str = "J1") -> float:
    """Spectral norm of [matfun(A) - matfun(A0)] R^{s/2} at argument tau/eps (J2 scaled by eps)."""
    if functional not in ("J1", "J2"):
        raise ValueError("functional must be 'J1' or 'J2'")
    D = fiber_difference(A, A0, tau / eps, functional)
    D = D * smoothing_diag(A.k, eps, s, A.modes, A.n)[None, :]
    val = float(np.linalg.norm(D, 2))
    return eps * val if functional == "J2" else val


def fibers_for(model: EffectiveModel, k, modes: ModeSet, weighted: bool = False):
    if weighted and not model.weighted:
        raise ValueError("model has no density Q")
    f = model.f if weighted else None
    f0 = model.f0 if weighted else None
    A = assemble_fiber(model.sym, model.g, k, modes, f)
    A0 = effective_fiber(model.sym, model.g0, k, modes, f0)
    return A, A0


def fiber_error(model: EffectiveModel, k, eps: float, tau: float, s: float, functional: str = "J1",
                weighted: bool = False, modes: ModeSet | None = None) -> float:
    modes = modes or ModeSet(model.lattice, model.cutoff)
    A, A0 = fibers_for(model, k, modes, weighted)
    return fiber_error_pair(A, A0, eps, tau, s, functional)


# -- sweeps --------------------------------------------------------------

@dataclass
class ErrorCurve:
    s: float
    tau: float
    functional: str
    eps: np.ndarray
    E: np.ndarray
    argmax_k: np.ndarray
    slope: float | None
    residual: float | None
    degenerate: bool
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "s": self.s, "tau": self.tau, "functional": self.functional,
            "eps": self.eps.tolist(), "E": self.E.tolist(),
            "slope": self.slope, "residual": self.residual, "degenerate": self.degenerate,
            **self.meta,
        }


def fit_slope(x, y) -> tuple[float, float]:
    """Least-squares slope of log y against log x and the RMS residual."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    coef, res, *_ = np.polyfit(lx, ly, 1, full=True)
    rms = float(np.sqrt(res[0] / len(lx))) if len(res) else 0.0
    return float(coef[0]), rms


def _window_errors(A: FiberOperator, A0: FiberOperator, eps: float, taus: np.ndarray, s: float,
                   functional: str) -> np.ndarray:
    """Batched fiber errors for several times at once (same conventions as fiber_error_pair)."""
    r = smoothing_diag(A.k, eps, s, A.modes, A.n)
    vals = _cos_values if functional == "J1" else _sinc_values

    def batch(fib):
        W = fib.evecs.conj().T
        if fib.F is not None:
            left = fib.F @ fib.evecs
            W = (np.linalg.solve(fib.F.T, W.T).T if functional == "J1" else W @ fib.F.conj().T)
        else:
            left = fib.evecs
        W = W * r[None, :]
        fv = np.stack([vals(fib.evals, t / eps) for t in taus])
        return (left[None, :, :] * fv[:, None, :]) @ W

    D = batch(A) - batch(A0)
    # largest singular value through the Gram matrix on the smaller side
    if D.shape[1] <= D.shape[2]:
        gram = D @ np.conj(np.swapaxes(D, 1, 2))
    else:
        gram = np.conj(np.swapaxes(D, 1, 2)) @ D
    out = np.sqrt(np.maximum(np.linalg.eigvalsh(gram)[:, -1], 0.0))
    return eps * out if functional == "J2" else out


def tau_samples(tau: float, eps: float, per_unit: float = 4.0) -> np.ndarray:
    """Times in [0, tau] with spacing <= eps / per_unit."""
    count = int(np.ceil(per_unit * abs(tau) / eps)) + 1
    return np.linspace(0.0, tau, count)


def sweep(model: EffectiveModel, grid, eps_list, tau: float, s: float, functional: str = "J1",
          weighted: bool = False, modes: ModeSet | None = None, floor: float = 1e-10,
          time_uniform: bool = False) -> ErrorCurve:
    """E(eps) = max over the k grid of fiber_error; fibers are assembled once per k.

    With ``time_uniform`` the maximum also runs over times tau' in [0, tau],
    which removes the erratic dependence of a single-time error on the phases
    tau sqrt(lambda_j) / eps of the upper bands.
    """
    if functional not in ("J1", "J2"):
        raise ValueError("functional must be 'J1' or 'J2'")
    modes = modes or ModeSet(model.lattice, model.cutoff)
    eps_list = np.asarray(eps_list, dtype=float)
    E = np.zeros(len(eps_list))
    arg = np.zeros((len(eps_list), model.sym.d))
    for k in np.atleast_2d(grid):
        A, A0 = fibers_for(model, k, modes, weighted)
        for i, eps in enumerate(eps_list):
            if time_uniform:
                e = float(_window_errors(A, A0, eps, tau_samples(tau, eps), s, functional).max())
            else:
                e = fiber_error_pair(A, A0, eps, tau, s, functional)
            if e > E[i]:
                E[i], arg[i] = e, k
    degenerate = bool(np.all(E <= floor))
    slope = resid = None
    if not degenerate:
        slope, resid = fit_slope(eps_list, np.maximum(E, floor))
    return ErrorCurve(s=s, tau=tau, functional=functional, eps=eps_list, E=E, argmax_k=arg,
                      slope=slope, residual=resid, degenerate=degenerate,
                      meta={"cutoff": modes.cutoff, "grid_size": int(np.atleast_2d(grid).shape[0]),
                            "time_uniform": time_uniform})


def default_grid(model: EffectiveModel, eps_min: float, uniform: int | None = None,
                 directions: int | None = None) -> np.ndarray:
    """Uniform grid plus a log-radial fan reaching below the smallest eps."""
    lat = model.lattice
    d = lat.d
    levels = int(np.ceil(np.log2(lat.r0 / (0.25 * eps_min)))) + 1
    levels = min(levels, int(np.floor(np.log2(1e6))))
    if uniform is None:
        uniform = {1: 64, 2: 12}.get(d, 6)
    if directions is None:
        directions = {1: 2, 2: 8}.get(d, 12)
    coarse = brillouin_grid(lat, GridSpec(uniform=uniform, log_levels=0))
    # dense radial sampling: 4 radii per octave
    dirs = brillouin_grid(lat, GridSpec(uniform=1, log_levels=1, directions=directions))[1:] / (0.5 * lat.r0)
    radii = lat.r0 * 2.0 ** (-np.arange(1, 4 * levels + 1) / 4.0)
    radial = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, d)
    return np.vstack([coarse, radial])


def truncation_check(model: EffectiveModel, grid, eps: float, tau: float, s: float,
                     functional: str = "J1", weighted: bool = False) -> dict:
    """Compare E(eps) at the model cutoff N with a model rebuilt at 2N."""
    from .cell import build_model

    fine = build_model(model.sym, model.g, 2 * model.cutoff, Q=model.Q)
    e1 = sweep(model, grid, [eps], tau, s, functional, weighted).E[0]
    e2 = sweep(fine, grid, [eps], tau, s, functional, weighted).E[0]
    rel = abs(e2 - e1) / max(e1, 1e-300)
    return {"E_N": e1, "E_2N": e2, "relative_change": rel, "ok": bool(rel <= 0.10)}


def grid_stability_check(model: EffectiveModel, eps_list, tau: float, s: float,
                         functional: str = "J1", weighted: bool = False) -> dict:
    eps_min = float(np.min(eps_list))
    g1 = default_grid(model, eps_min)
    d = model.sym.d
    g2 = default_grid(model, eps_min, uniform={1: 128, 2: 24}.get(d, 12),
                      directions={1: 2, 2: 16}.get(d, 24))
    c1 = sweep(model, g1, eps_list, tau, s, functional, weighted)
    c2 = sweep(model, g2, eps_list, tau, s, functional, weighted)
    rel = np.abs(c2.E - c1.E) / np.maximum(c1.E, 1e-300)
    return {"E": c1.E.tolist(), "E_refined": c2.E.tolist(), "max_relative_change": float(rel.max()),
            "ok": bool(rel.max() <= 0.05)}


# -- branch fitting ------------------------------------------------------

@dataclass
class BranchFit:
    theta: np.ndarray
    gammas: np.ndarray
    mus: np.ndarray
    residuals: np.ndarray
    t_grid: np.ndarray
    lams: np.ndarray  # (2 * len(t), n): rows for -t (reversed) then +t


def embryos(model: EffectiveModel, germ, modes: ModeSet, weighted: bool) -> np.ndarray:
    """Kernel vectors of A(0) in mode space: F^{-1} applied to zeta_l at the zero mode."""
    n = model.sym.n
    P = len(modes)
    W = np.zeros((P * n, n), dtype=complex)
    W[modes.zero * n:(modes.zero + 1) * n] = germ.zetas
    if weighted:
        W = np.linalg.solve(model.f.conv_matrix(modes), W)
    W /= np.linalg.norm(W, axis=0, keepdims=True)
    return W


def _track(model, theta, ts, W0, modes, weighted, max_refine=4):
    """Lowest-n eigenvalues along t * theta, ordered by overlap continuity from W0."""
    n = model.sym.n
    prev = W0
    lams = []
    for t in ts:
        A = assemble_fiber(model.sym, model.g, t * theta, modes, model.f if weighted else None)
        V = A.evecs[:, : n + 2]
        lam = A.evals[: n + 2]
        ov = np.abs(prev.conj().T @ V)
        row, col = linear_sum_assignment(-ov)
        picked = ov[row, col]
        srt = np.sort(ov, axis=1)
        if picked.min() < 0.5 or np.any(srt[:, -1] - srt[:, -2] < 0.2):
            raise BranchTrackingError(f"ambiguous branch assignment at t = {t:.3e}")
        lams.append(lam[col])
        new = V[:, col]
        phase = np.sum(prev.conj() * new, axis=0)
        prev = new * np.exp(-1j * np.angle(phase))[None, :]
    return np.array(lams)


def branch_fit(model: EffectiveModel, theta, t_grid=None, weighted: bool | None = None,
               modes: ModeSet | None = None, max_refine: int = 3) -> BranchFit:
    """Fit lambda_l(t)/t^2 = gamma_l + mu_l t on the symmetric grid {+-t}.

    Eigenvalues along -t are those of A(t(-theta)), tracked from the same
    embryos; the symmetric grid removes the t^2 term from the mu estimate.
    """
    theta = np.asarray(theta, dtype=float)
    weighted = model.weighted if weighted is None else weighted
    modes = modes or ModeSet(model.lattice, model.cutoff)
    if t_grid is None:
        t_grid = default_t_grid(model)
    ts = np.sort(np.asarray(t_grid, dtype=float))
    if len(ts) < 6 or ts[0] <= 0:
        raise ValueError("t_grid must hold at least 6 positive values")
    germ = germ_at(model, theta, weighted=weighted)
    W0 = embryos(model, germ, modes, weighted)
    for attempt in range(max_refine + 1):
        try:
            lp = _track(model, theta, ts, W0, modes, weighted)
            lm = _track(model, -theta, ts, W0, modes, weighted)
            break
        except BranchTrackingError:
            if attempt == max_refine:
                raise
            ts = np.sort(np.concatenate([ts, np.sqrt(ts[1:] * ts[:-1])]))
    tt = np.concatenate([-ts[::-1], ts])
    lams = np.vstack([lm[::-1], lp])
    y = lams / tt[:, None] ** 2
    X = np.column_stack([np.ones_like(tt), tt])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = np.sqrt(np.mean((y - X @ coef) ** 2, axis=0))
    return BranchFit(theta=theta, gammas=coef[0], mus=coef[1], residuals=resid, t_grid=ts, lams=lams)


def residual_scaling(model: EffectiveModel, theta, t_grid=None, weighted: bool | None = None,
                     modes: ModeSet | None = None, floor: float = 1e-10):
    """Fit residual ratio when the t grid is halved (about 4 for an O(t^2) remainder).

    Returns (ratios, fit, fit_half); branches whose residual is below
    ``floor * max(1, gamma)`` carry no t^2 term to measure and get ratio nan.
    """
    t_grid = default_t_grid(model) if t_grid is None else np.asarray(t_grid, dtype=float)
    full = branch_fit(model, theta, t_grid, weighted=weighted, modes=modes)
    half = branch_fit(model, theta, 0.5 * t_grid, weighted=weighted, modes=modes)
    scale = floor * np.maximum(1.0, np.abs(full.gammas))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(full.residuals > scale, full.residuals / half.residuals, np.nan)
    return ratios, full, half


def default_t_grid(model: EffectiveModel, points: int = 8, t_max: float | None = None) -> np.ndarray:
    # the mu estimate carries an O(t_max^2) bias, so stay well inside (0, t0]
    t_max = t_max or model.window.t0 / 16.0
    return t_max * 2.0 ** -np.linspace(0, 3, points)


# -- sharpness -------------------------------------------------------------

@dataclass
class SharpnessReport:
    s: float
    tau: float
    functional: str
    theta: np.ndarray
    gamma: float
    mu: float
    ks: np.ndarray
    eps: np.ndarray
    t: np.ndarray
    E: np.ndarray
    ratio: np.ndarray
    growth: float
    diverges: bool

    def to_dict(self) -> dict:
        return {
            "s": self.s, "tau": self.tau, "functional": self.functional,
            "theta": self.theta.tolist(), "gamma": self.gamma, "mu": self.mu,
            "k": self.ks.tolist(), "eps": self.eps.tolist(), "t": self.t.tolist(),
            "E": self.E.tolist(), "ratio": self.ratio.tolist(),
            "growth": self.growth, "diverges": self.diverges,
        }


def resonant_sequence(gamma: float, mu: float, tau: float, ks):
    """eps_k = alpha^2 / (2 pi k)^2 and t(eps) = (2 pi)^{1/2} gamma^{1/4} |mu tau|^{-1/2} eps^{1/2}."""
    ks = np.asarray(ks, dtype=float)
    alpha = np.sqrt(2 * np.pi) * gamma**0.75 * abs(tau) ** 0.5 * abs(mu) ** -0.5
    eps = alpha**2 / (2 * np.pi * ks) ** 2
    t = np.sqrt(2 * np.pi) * gamma**0.25 * abs(mu * tau) ** -0.5 * np.sqrt(eps)
    return eps, t


def sharpness_probe(model: EffectiveModel, theta, s: float, tau: float = 1.0, ks=None,
                    functional: str = "J1", t_cap: float | None = None,
                    modes: ModeSet | None = None, branch: int | None = None) -> SharpnessReport:
    """Evaluate the fiber error at k = t(eps) theta along the resonant sequence eps_k."""
    theta = np.asarray(theta, dtype=float)
    germ = germ_at(model, theta, weighted=False)
    scale = max(1.0, float(np.abs(model.g0).max()))
    if np.abs(germ.N0).max() <= 1e-10 * scale:
        raise ProbeInapplicableError("N0 vanishes at theta; no resonant sequence exists")
    l = int(np.argmax(np.abs(germ.mus))) if branch is None else branch
    gamma, mu = float(germ.gammas[l]), float(germ.mus[l])
    if ks is None:
        t_cap = t_cap or 0.05 * model.lattice.r0
        # smallest k with t(eps_k) <= t_cap, then a geometric run of 5 octaves
        _, t1 = resonant_sequence(gamma, mu, tau, [1.0])
        k0 = int(np.ceil(t1[0] / t_cap))
        ks = np.unique(np.round(k0 * 2.0 ** np.arange(0, 5.5, 0.5)).astype(int))
    ks = np.asarray(ks)
    eps, t = resonant_sequence(gamma, mu, tau, ks)
    modes = modes or ModeSet(model.lattice, model.cutoff)
    E = np.array([fiber_error(model, ti * theta, e, tau, s, functional, modes=modes) for e, ti in zip(eps, t)])
    ratio = E / eps if functional == "J1" else E
    growth = float(ratio[-1] / ratio[0])
    monotone = bool(np.all(np.diff(ratio) > 0))
    diverges = monotone and growth >= 2.0
    return SharpnessReport(s=s, tau=tau, functional=functional, theta=theta, gamma=gamma, mu=mu,
                           ks=ks, eps=eps, t=t, E=E, ratio=ratio, growth=growth, diverges=diverges)
