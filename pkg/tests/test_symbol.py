import numpy as np
import pytest
from hypothesis import given, strategies as st

from homwave.symbol import (RankDeficientSymbolError, acoustics_symbol, custom_symbol, elasticity_symbol,
                            ellipticity_bounds, eval_symbol, hill_symbol, make_symbol)

finite = st.floats(-5, 5, allow_nan=False)


def test_acoustics_column():
    b = eval_symbol(acoustics_symbol(2), [1.0, 0.0])
    assert np.allclose(b, [[1.0], [0.0]])


@given(finite, finite)
def test_elasticity_2d_matches_displayed_matrix(x1, x2):
    b = eval_symbol(elasticity_symbol(2), [x1, x2])
    assert np.allclose(b, [[x1, 0], [0.5 * x2, 0.5 * x1], [0, x2]])


@given(st.lists(finite, min_size=6, max_size=6))
def test_linearity(v):
    sym = elasticity_symbol(3)
    xi, eta = np.array(v[:3]), np.array(v[3:])
    assert np.allclose(eval_symbol(sym, xi + eta), eval_symbol(sym, xi) + eval_symbol(sym, eta))


def test_elasticity_3d_rows():
    b = eval_symbol(elasticity_symbol(3), [1.0, 2.0, 3.0])
    # rows 11, 12, 22, 23, 33, 13
    expect = [[1, 0, 0], [1, 0.5, 0], [0, 2, 0], [0, 1.5, 1], [0, 0, 3], [1.5, 0, 0.5]]
    assert np.allclose(b, expect)


@pytest.mark.parametrize("sym,m,n", [(elasticity_symbol(3), 6, 3), (hill_symbol(3), 4, 3),
                                     (acoustics_symbol(1), 1, 1), (elasticity_symbol(2), 3, 2)])
def test_shapes(sym, m, n):
    assert (sym.m, sym.n) == (m, n)


def test_acoustics_bounds():
    assert ellipticity_bounds(acoustics_symbol(3)) == pytest.approx((1.0, 1.0), abs=1e-12)


def test_elasticity_2d_bounds_against_dense_fan():
    a0, a1 = ellipticity_bounds(elasticity_symbol(2))
    ang = np.linspace(0, 2 * np.pi, 10_000, endpoint=False)
    th = np.column_stack([np.cos(ang), np.sin(ang)])
    b = eval_symbol(elasticity_symbol(2), th)
    ev = np.linalg.eigvalsh(np.swapaxes(b, -1, -2) @ b)
    assert a0 == pytest.approx(ev[:, 0].min(), abs=1e-6)
    assert a1 == pytest.approx(ev[:, -1].max(), abs=1e-6)
    assert (a0, a1) == pytest.approx((0.25, 1.0), abs=1e-6)


def test_hill_is_isometric_on_sphere():
    sym = hill_symbol(2)
    ang = np.linspace(0, 2 * np.pi, 37)
    b = eval_symbol(sym, np.column_stack([np.cos(ang), np.sin(ang)]))
    assert np.allclose(np.swapaxes(b, -1, -2) @ b, np.eye(2), atol=1e-12)
    assert ellipticity_bounds(sym) == pytest.approx((1.0, 1.0), abs=1e-12)


@given(st.integers(0, 10_000))
def test_gram_is_hermitian_psd(seed):
    rng = np.random.default_rng(seed)
    th = rng.standard_normal(3)
    b = eval_symbol(elasticity_symbol(3), th / np.linalg.norm(th))
    G = b.conj().T @ b
    assert np.allclose(G, G.conj().T)
    assert np.linalg.eigvalsh(G).min() > -1e-12


def test_rank_deficient_symbol_rejected():
    mats = np.zeros((2, 2, 2))
    mats[0, 0, 0] = mats[1, 1, 0] = 1.0  # second component never differentiated
    with pytest.raises(RankDeficientSymbolError):
        ellipticity_bounds(custom_symbol(mats))
    with pytest.raises(ValueError):
        custom_symbol(np.zeros((2, 1, 2)))  # m < n


def test_custom_pair_encoding_and_factory():
    pairs = [[[[0.0, 1.0]]]]  # b_1 = i, d = m = n = 1
    sym = custom_symbol(pairs)
    assert eval_symbol(sym, [2.0])[0, 0] == pytest.approx(2j)
    assert make_symbol("hill", 2).m == 2
    with pytest.raises(ValueError):
        make_symbol("plasma", 2)
