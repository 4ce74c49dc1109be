import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st

from homwave.cell import build_model
from homwave.coeff import AliasingError, PeriodicMatrixField
from homwave.fiber import (assemble_fiber, branch_fit, default_grid, effective_fiber, fiber_error, fibers_for,
                           fit_slope, matfun_cos, matfun_sinc, resonant_sequence, sharpness_probe,
                           smoothing_diag, sweep, symbol_block_diag)
from homwave.germ import ProbeInapplicableError, germ_at
from homwave.lattice import ModeSet, cubic_lattice
from homwave.presets import get_preset
from homwave.symbol import acoustics_symbol, elasticity_symbol

from _fields import random_positive_field

L1, L2 = cubic_lattice(1), cubic_lattice(2)


def _dense(sym, g, k, modes, f=None):
    """Direct product F^* B^* G B F, no factorization."""
    B = symbol_block_diag(sym, modes.vectors + k)
    A = B.conj().T @ g.conv_matrix(modes) @ B
    if f is not None:
        F = f.conv_matrix(modes)
        A = F.conj().T @ A @ F
    return A


def _cos_sinc_oracle(A, tau):
    """Blocks of exp(tau [[0, I], [-A, 0]]) are cos(tau A^1/2) and A^-1/2 sin(tau A^1/2)."""
    n = len(A)
    M = np.block([[np.zeros((n, n)), np.eye(n)], [-A, np.zeros((n, n))]])
    E = sla.expm(tau * M)
    return E[:n, :n], E[:n, n:]


@given(st.integers(0, 10_000))
@settings(max_examples=10)
def test_fiber_matches_dense_product(seed):
    rng = np.random.default_rng(seed)
    g = random_positive_field(rng, L2, 3)
    f = random_positive_field(rng, L2, 2)
    modes = ModeSet(L2, 2)
    k = rng.uniform(-0.5, 0.5, 2)
    fib = assemble_fiber(elasticity_symbol(2), g, k, modes, f)
    ref = _dense(elasticity_symbol(2), g, k, modes, f)
    assert np.allclose(fib.matrix, fib.matrix.conj().T)
    assert np.abs(fib.matrix - ref).max() < 1e-9 * np.abs(ref).max()
    assert fib.evals.min() >= 0


@pytest.mark.parametrize("name", ["acoustics-1d", "example-13.2", "example-8.7"])
def test_lowest_band_bound(name):
    m = get_preset(name).model()
    modes = ModeSet(m.lattice, m.cutoff)
    for k in default_grid(m, 0.1, uniform=6, directions=4)[1::7]:
        lam = assemble_fiber(m.sym, m.g, k, modes).evals[0]
        assert lam >= m.window.c_star * (k @ k) * (1 - 1e-9)


@pytest.mark.parametrize("name", ["acoustics-1d", "example-8.7", "hill"])
def test_kernel_at_zero(name):
    m = get_preset(name).model()
    fib = assemble_fiber(m.sym, m.g, np.zeros(m.sym.d), ModeSet(m.lattice, m.cutoff))
    n = m.sym.n
    assert np.all(fib.evals[:n] == 0) and fib.evals[n] > 1e-3


def test_constant_medium_fiber_is_effective():
    G = np.array([[2.0, 0.3], [0.3, 1.0]])
    g = PeriodicMatrixField.constant(G, L2)
    m = build_model(acoustics_symbol(2), g, 2)
    modes = ModeSet(L2, 2)
    k = np.array([0.2, -0.1])
    A, A0 = fibers_for(m, k, modes)
    assert np.abs(A.matrix - A0.matrix).max() < 1e-12
    assert fiber_error(m, k, 0.1, 1.0, 0.0) < 1e-10
    c = sweep(m, default_grid(m, 0.05), [0.1, 0.05], 1.0, 2.0)
    assert c.degenerate and c.slope is None


@given(st.integers(0, 10_000), st.floats(0.0, 5.0))
@settings(max_examples=10)
def test_cos_and_sinc_against_expm(seed, tau):
    rng = np.random.default_rng(seed)
    g = random_positive_field(rng, L1, 1, real=True)
    fib = assemble_fiber(acoustics_symbol(1), g, [0.3], ModeSet(L1, 2))
    c, sn = _cos_sinc_oracle(fib.matrix, tau)
    assert np.abs(matfun_cos(fib, tau) - c).max() < 1e-8
    assert np.abs(matfun_sinc(fib, tau) - sn).max() < 1e-8
    assert np.linalg.norm(matfun_cos(fib, tau), 2) <= 1 + 1e-12


def test_cos_derivative_identity():
    fib = assemble_fiber(acoustics_symbol(1), get_preset("acoustics-1d").g, [0.2], ModeSet(L1, 3))
    tau, h = 0.7, 1e-5
    fd = (matfun_cos(fib, tau + h) - matfun_cos(fib, tau - h)) / (2 * h)
    assert np.abs(fd + fib.matrix @ matfun_sinc(fib, tau)).max() < 1e-6 * max(1, fib.evals.max())


def test_kernel_sinc_is_tau():
    fib = assemble_fiber(acoustics_symbol(1), get_preset("acoustics-1d").g, [0.0], ModeSet(L1, 3))
    v = fib.evecs[:, 0]
    assert np.allclose(matfun_sinc(fib, 2.5) @ v, 2.5 * v)


def test_zero_time_errors_vanish():
    m = get_preset("acoustics-1d").model()
    for func in ("J1", "J2"):
        assert fiber_error(m, [0.1], 0.1, 0.0, 0.0, func) < 1e-12


def test_smoothing_values_and_monotonicity():
    modes = ModeSet(L1, 2)
    k, eps = np.array([0.25]), 0.1
    r = smoothing_diag(k, eps, 2.0, modes, 1)
    b = modes.vectors[:, 0] + 0.25
    assert np.allclose(r, eps**2 / (b**2 + eps**2))
    assert np.all(smoothing_diag(k, eps, 3.0, modes, 1) <= r)
    m = get_preset("acoustics-1d").model()
    errs = [fiber_error(m, [0.05], 0.1, 1.0, s) for s in (0.0, 1.0, 2.0)]
    assert errs[0] >= errs[1] >= errs[2]


def test_weighted_J1_bounded_by_condition_number():
    m = get_preset("acoustics-1d-weighted").model()
    bound = 2 * m.f.sup_norm() * m.f.inverse_sup_norm()
    for k in np.linspace(-0.5, 0.5, 7):
        for eps in (0.5, 0.1, 0.02):
            assert fiber_error(m, [k], eps, 1.0, 0.0, "J1", weighted=True) <= bound


def test_weighted_requires_density():
    with pytest.raises(ValueError):
        fiber_error(get_preset("acoustics-1d").model(), [0.1], 0.1, 1.0, 0.0, weighted=True)


def test_aliasing_guard():
    g = get_preset("example-8.7").g  # cutoff 16
    with pytest.raises(AliasingError):
        assemble_fiber(elasticity_symbol(2), g, [0.1, 0.0], ModeSet(L2, 4))


def test_time_uniform_dominates_fixed_time():
    m = get_preset("acoustics-1d").model()
    grid = default_grid(m, 0.125)
    a = sweep(m, grid, [0.25, 0.125], 1.0, 2.0)
    b = sweep(m, grid, [0.25, 0.125], 1.0, 2.0, time_uniform=True)
    assert np.all(b.E >= a.E - 1e-15)


def test_fit_slope_exact_power():
    x = np.array([0.5, 0.25, 0.125])
    slope, res = fit_slope(x, 3 * x**1.5)
    assert slope == pytest.approx(1.5) and res < 1e-12


def test_effective_fiber_constant_blocks():
    G = np.array([[2.0, 0.3], [0.3, 1.0]])
    modes = ModeSet(L2, 1)
    k = np.array([0.1, 0.2])
    fib = effective_fiber(acoustics_symbol(2), G, k, modes)
    ref = np.sort([(b + k) @ G @ (b + k) for b in modes.vectors])
    assert np.allclose(fib.evals, ref)


def test_branch_fit_constant_medium():
    m = get_preset("const").model()
    th = np.array([0.6, 0.8])
    fit = branch_fit(m, th)
    assert fit.gammas[0] == pytest.approx(germ_at(m, th).gammas[0], rel=1e-10)
    assert abs(fit.mus[0]) < 1e-8


def test_branch_fit_recovers_threshold_coefficient():
    m = get_preset("example-13.2").model()
    th = np.array([0.0, 1.0])
    fit = branch_fit(m, th)
    gd = germ_at(m, th)
    assert fit.gammas[0] == pytest.approx(gd.gammas[0], rel=1e-6)
    assert fit.mus[0] == pytest.approx(gd.mus[0], rel=1e-3)


def test_resonant_sequence_phase():
    gamma, mu, tau = 1.3, 0.2, 1.0
    eps, t = resonant_sequence(gamma, mu, tau, [1, 2, 3])
    # sqrt(gamma t^2 + mu t^3) - sqrt(gamma) t ~ mu t^2 / (2 sqrt(gamma)); over time tau/eps that is pi
    assert np.allclose(tau / eps * mu * t**2 / (2 * np.sqrt(gamma)), np.pi)
    assert np.allclose(eps, eps[0] / np.array([1, 4, 9]))


def test_sharpness_refuses_real_medium():
    with pytest.raises(ProbeInapplicableError):
        sharpness_probe(get_preset("acoustics-real-2d").model(), [1.0, 0.0], 1.5)
