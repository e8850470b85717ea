import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import linalg

from ladderexit import _jit
from ladderexit.errors import ConfigError
from ladderexit.renewal import (RenewalTable, build_tables, ell_star_renewal_ratio, green_matrix,
                                green_row_sum, renewal_sequence, spitzer_green)


def test_unit_steps():
    f = np.array([0.0, 1.0])
    assert np.array_equal(renewal_sequence(f, 20), np.ones(21))


def test_even_steps():
    u = renewal_sequence(np.array([0.0, 0.0, 1.0]), 9)
    assert u.tolist() == [1, 0, 1, 0, 1, 0, 1, 0, 1, 0]


def test_half_half_by_hand():
    u = renewal_sequence(np.array([0.0, 0.5, 0.5]), 400)
    np.testing.assert_allclose(u[:6], [1, 0.5, 0.75, 0.625, 0.6875, 0.65625], rtol=0, atol=1e-16)
    assert u[400] == pytest.approx(2 / 3, abs=1e-15)


def test_rejects_non_pmf():
    with pytest.raises(ConfigError):
        renewal_sequence(np.array([0.0, 0.7, 0.7]), 5)


sub_pmfs = st.lists(st.floats(0.0, 1.0), min_size=2, max_size=80).map(
    lambda w: np.concatenate([[0.0], np.array(w[1:]) / (sum(w[1:]) + 0.01 + 1e-300)]))


@given(sub_pmfs, st.integers(100, 3000))
def test_fft_matches_direct(f, N):
    a = renewal_sequence(f, N, method="direct")
    b = renewal_sequence(f, N, method="fft")
    np.testing.assert_allclose(b, a, rtol=0, atol=1e-12)


@given(sub_pmfs, st.integers(1, 500))
def test_backends_agree(f, N):
    _jit.set_backend("numpy")
    try:
        a = renewal_sequence(f, N, method="direct")
    finally:
        _jit.set_backend("numba" if _jit.HAVE_NUMBA else "numpy")
    b = renewal_sequence(f, N, method="direct")
    np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-300)


def test_srw_tables(tables):
    _, tab = tables("srw", 300)
    x = np.arange(301)
    assert np.array_equal(tab.u_a, np.ones(301))
    assert np.array_equal(tab.v_d, np.full(301, 2.0))
    assert np.array_equal(tab.U_a, x + 1.0)
    assert np.array_equal(tab.V_d, 2.0 * (x + 1))


def test_skip_up_ascending_renewal(tables):
    lad, tab = tables("skip_up", 100)
    f1, f2 = lad.z_pmf[1], lad.z_pmf[2]
    assert lad.z_pmf[3:].sum() == 0
    u = [1.0]
    for n in range(1, 101):
        u.append(f1 * u[n - 1] + (f2 * u[n - 2] if n >= 2 else 0.0))
    np.testing.assert_allclose(tab.u_a, u, rtol=1e-14)


@pytest.mark.parametrize("name", ["srw", "three_point", "case2", "c4", "c3"])
def test_table_invariants(tables, name):
    lad, tab = tables(name, 400)
    assert tab.u_a[0] == 1.0
    assert tab.V_d[0] == lad.v0
    assert np.all(tab.u_a >= 0) and np.all(tab.v_d >= 0)
    assert np.all(np.diff(tab.U_a) >= 0) and np.all(np.diff(tab.V_d) >= 0)
    ud = renewal_sequence(lad.zhat_pmf, 400)
    np.testing.assert_allclose(tab.v_d, lad.v0 * ud, rtol=1e-15)
    assert tab.defects == lad.truncation_defect


def test_srw_green_function(tables):
    _, tab = tables("srw", 300)
    for x in (0, 3, 17):
        for y in (0, 5, 40):
            assert spitzer_green(tab, x, y) == 2 * (min(x, y) + 1)
    # absorbing chain on [0, N] killed at -1 and N + 1
    N = 4000
    ab = np.zeros((3, N + 1))
    ab[0, 1:] = -0.5
    ab[1, :] = 1.0
    ab[2, :-1] = -0.5
    E = np.zeros((N + 1, 41))
    E[np.arange(41), np.arange(41)] = 1.0
    G = linalg.solve_banded((1, 1), ab, E)[:41]
    x = np.arange(41)
    # killing at N + 1 removes exactly 2(x+1)(y+1)/(N+2)
    corr = 2.0 * np.outer(x + 1, x + 1) / (N + 2)
    np.testing.assert_allclose(G + corr, green_matrix(tab, 40), rtol=1e-10)


def test_green_first_row(tables):
    lad, tab = tables("case2", 200)
    for y in (0, 7, 150):
        assert spitzer_green(tab, 0, y) == lad.v0 * tab.u_a[y]


@pytest.mark.slow
def test_case2_green_against_truncated_chain(laws, tables):
    law = laws("case2")
    _, tab = tables("case2", 400)
    G = green_matrix(tab, 30)

    def truncated(N):
        k = np.arange(N + 1)
        c, r = -law.pmf(-k), -law.pmf(k)
        c[0] += 1.0
        r[0] = c[0]
        E = np.zeros((N + 1, 31))
        E[np.arange(31), np.arange(31)] = 1.0
        return linalg.solve_toeplitz((c, r), E)[:31]

    # killing above N costs c1/N + c2/N^2; eliminate both terms
    a, b, c = (truncated(2 ** j) for j in (12, 13, 14))
    ext = (8 * c - 6 * b + a) / 3
    assert np.max(np.abs(ext - G)) <= 1e-6


def test_srw_row_sum_by_hand(tables):
    _, tab = tables("srw", 50)
    assert green_row_sum(tab, 2, 5) == 30.0
    assert sum(spitzer_green(tab, 2, y) for y in range(6)) == 30.0
    assert green_row_sum(tab, 0, 9) == tab.v0 * tab.U_a[9]


@pytest.mark.parametrize("name", ["three_point", "case2", "c4"])
def test_row_sum_identity_and_bound(tables, name):
    _, tab = tables(name, 600)
    rng = np.random.default_rng(3)
    cs = np.cumsum(green_matrix(tab, 600), axis=1)
    for _ in range(100):
        R = int(rng.integers(1, 601))
        x = int(rng.integers(0, R + 1))
        s = green_row_sum(tab, x, R)
        assert abs(cs[x, R] - s) <= 1e-10 * s
        assert s <= tab.V_d[x] * tab.U_a[R] * (1 + 1e-14)


@pytest.mark.slow
def test_renewal_function_trend_c3(laws):
    from ladderexit.ladder import wiener_hopf_iterate
    lad = wiener_hopf_iterate(laws("c3"), 4000)
    tab = build_tables(lad)
    r = ell_star_renewal_ratio(tab, lad, [1000, 4000])
    assert abs(r[1] - 1) <= 0.25
    assert abs(r[1] - 1) < abs(r[0] - 1)


def test_horizon_checks(tables):
    _, tab = tables("srw", 50)
    with pytest.raises(IndexError):
        spitzer_green(tab, 0, 51)
    with pytest.raises(IndexError):
        green_row_sum(tab, 5, 3)


def test_save_load_bit_identical(tmp_path, tables):
    _, tab = tables("c4", 300)
    p = tmp_path / "t.npz"
    tab.save(p)
    back = RenewalTable.load(p)
    for f in ("u_a", "v_d", "u_d"):
        assert np.array_equal(getattr(back, f), getattr(tab, f))
    assert back.v0 == tab.v0 and back.defects == tab.defects


def test_cache_matches_cold(tmp_path, laws):
    law = laws("case2")
    cold = build_tables(law, 300)
    first = build_tables(law, 300, cache=str(tmp_path))
    again = build_tables(law, 300, cache=str(tmp_path))
    for f in ("u_a", "v_d", "u_d"):
        assert np.array_equal(getattr(first, f), getattr(cold, f))
        assert np.array_equal(getattr(again, f), getattr(cold, f))
