import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from homwave.cell import build_model
from homwave.coeff import PeriodicMatrixField
from homwave.germ import N_matrix, clusters_of, condition_scan, germ_at, split_N
from homwave.lattice import cubic_lattice, direction_fan
from homwave.presets import get_preset
from homwave.symbol import acoustics_symbol, elasticity_symbol

from _fields import random_positive_field

L2 = cubic_lattice(2)


def _unit(rng, d):
    v = rng.standard_normal(d)
    return v / np.linalg.norm(v)


@given(st.integers(0, 10_000))
@settings(max_examples=10)
def test_germ_is_qbar_orthonormal_eigenbasis(seed):
    rng = np.random.default_rng(seed)
    g = random_positive_field(rng, L2, 3)
    Q = random_positive_field(rng, L2, 2)
    m = build_model(elasticity_symbol(2), g, 3, Q=Q)
    th = _unit(rng, 2)
    gd = germ_at(m, th)
    Z = gd.zetas
    assert np.allclose(Z.conj().T @ m.Q_bar @ Z, np.eye(2), atol=1e-10)
    assert np.allclose(gd.S_hat @ Z, m.Q_bar @ Z * gd.gammas, atol=1e-10)
    assert np.all(np.diff(gd.gammas) >= -1e-12)


@given(st.integers(0, 10_000))
@settings(max_examples=10)
def test_N_is_odd_and_hermitian(seed):
    rng = np.random.default_rng(seed)
    g = random_positive_field(rng, L2, 3)
    m = build_model(elasticity_symbol(2), g, 3)
    th = _unit(rng, 2)
    N = N_matrix(m, th)
    assert np.allclose(N, N.conj().T)
    assert np.allclose(N_matrix(m, -th), -N, atol=1e-12)


@given(st.integers(0, 10_000))
@settings(max_examples=10)
def test_real_symmetric_g_gives_zero_N(seed):
    rng = np.random.default_rng(seed)
    g = random_positive_field(rng, L2, 3, real=True)
    m = build_model(elasticity_symbol(2), g, 3)
    assert np.abs(N_matrix(m, _unit(rng, 2))).max() < 1e-12


def test_scalar_case_has_no_off_diagonal_part():
    m = get_preset("example-13.2").model()
    for th in direction_fan(2, 12):
        gd = germ_at(m, th)
        assert gd.Nstar.shape == (1, 1) and gd.Nstar[0, 0] == 0
        assert gd.mus[0] == pytest.approx(N_matrix(m, th)[0, 0].real, abs=1e-15)


def test_crossing_elasticity_germ_and_threshold():
    m = get_preset("example-8.7").model()
    for th in direction_fan(2, 24):
        ref = np.sort([1 - th[0] * th[1], 1 + th[0] * th[1]])
        assert np.allclose(germ_at(m, th).gammas, ref, atol=1e-8)
    assert np.abs(N_matrix(m, [1.0, 0.0])).max() < 1e-8
    # at theta = (0, 1) the germ is double and N = [[0, i/8], [-i/8, 0]] in the standard basis
    N = N_matrix(m, [0.0, 1.0])
    assert np.allclose(N, [[0, 0.125j], [-0.125j, 0]], atol=1e-8)
    gd = germ_at(m, [0.0, 1.0])
    assert gd.clusters == [[0, 1]]
    assert np.allclose(gd.mus, [-0.125, 0.125], atol=1e-8)
    assert np.abs(gd.Nstar).max() < 1e-12


def test_clusters_and_split():
    assert clusters_of(np.array([1.0, 1.0 + 1e-10, 2.0])) == [[0, 1], [2]]
    assert clusters_of(np.array([1.0, 1.1, 1.2])) == [[0], [1], [2]]
    Ng = np.arange(9.0).reshape(3, 3)
    N0, Ns, mus = split_N(Ng, [[0, 1], [2]])
    assert np.array_equal(N0 + Ns, Ng)
    assert Ns[0, 1] == 0 and Ns[0, 2] == 2 and N0[2, 2] == 8
    assert np.array_equal(mus, [0.0, 4.0, 8.0])


def test_theta_must_be_unit():
    m = get_preset("const").model()
    with pytest.raises(ValueError):
        germ_at(m, [1.0, 1.0])


def test_condition_scan_crossing_elasticity():
    r = condition_scan(get_preset("example-8.7").model())
    assert not r.N_zero and not r.N0_zero and not r.condition_A
    # crossings sit on the coordinate axes, where theta1 theta2 = 0
    for k, l, th in r.crossing_pairs:
        assert (k, l) == (0, 1)
        assert abs(th[0] * th[1]) < 1e-6
    assert len(r.crossing_pairs) == 4
    assert r.max_N0 == pytest.approx(0.125, abs=1e-6)


@pytest.mark.parametrize("name", ["const", "acoustics-real-2d", "hill"])
def test_condition_scan_real_media(name):
    r = condition_scan(get_preset(name).model())
    assert r.N_zero and r.N0_zero and r.condition_A
    assert r.c_circ is None


def test_condition_scan_scalar_complex():
    r = condition_scan(get_preset("example-13.2").model())
    assert not r.N_zero and not r.N0_zero and not r.condition_A
    assert r.crossing_pairs == [] and r.K_set == []


def test_constant_medium_germ_is_symbol_form():
    G = np.array([[2.0, 0.3], [0.3, 1.0]])
    m = build_model(acoustics_symbol(2), PeriodicMatrixField.constant(G, L2), 2)
    th = np.array([0.6, 0.8])
    assert germ_at(m, th).gammas[0] == pytest.approx(th @ G @ th)
