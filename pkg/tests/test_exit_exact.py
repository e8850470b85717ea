import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ladderexit import montecarlo as mc
from ladderexit.errors import ConfigError, InvariantViolation
from ladderexit.exit_exact import (check_exit, check_upper_bound, martingale_functional,
                                   overshoot_law, ratio_profile, solve_exit, write_exit_csv)
from ladderexit.increments import build_law
from ladderexit.renewal import RenewalTable, hitting_before_ruin

from strategies import centred_pmfs


def enumerate_paths(law, R, x, steps):
    """Exit masses within ``steps`` steps by summing over all paths, plus
    the mass still inside [0, R]."""
    lo, hi = law.support_bounds
    jumps = np.arange(lo, hi + 1)
    p = law.pmf(jumps)
    dist = np.zeros(R + 1)
    dist[x] = 1.0
    up = 0.0
    for _ in range(steps):
        new = np.zeros(R + 1)
        for j, pj in zip(jumps, p):
            if pj == 0:
                continue
            src = np.arange(R + 1)
            dst = src + j
            inside = (dst >= 0) & (dst <= R)
            np.add.at(new, dst[inside], pj * dist[src[inside]])
            up += pj * dist[src[dst > R]].sum()
        dist = new
    return up, dist.sum()


@pytest.mark.parametrize("R", [10, 100, 1000])
def test_gamblers_ruin(R):
    s = solve_exit(build_law("srw"), R)
    x = np.arange(R + 1)
    assert np.max(np.abs(s.h - (x + 1) / (R + 2))) <= 1e-12


def test_dense_oracle_srw_R10():
    R = 10
    Q = np.zeros((R + 1, R + 1))
    for i in range(R + 1):
        if i > 0:
            Q[i, i - 1] = 0.5
        if i < R:
            Q[i, i + 1] = 0.5
    r = np.zeros(R + 1)
    r[R] = 0.5
    h = np.linalg.solve(np.eye(R + 1) - Q, r)
    np.testing.assert_allclose(solve_exit(build_law("srw"), R).h, h, rtol=1e-14)


@pytest.mark.parametrize("name", ["srw", "lazy_srw", "skip_down", "skip_up", "three_point"])
def test_path_enumeration_R10(laws, name):
    law = laws(name)
    s = solve_exit(law, 10)
    for x in (0, 4, 10):
        lower, rest = enumerate_paths(law, 10, x, 40)
        assert lower - 1e-15 <= s.h[x] <= lower + rest + 1e-15
        lower, rest = enumerate_paths(law, 10, x, 3000)
        assert rest < 1e-12
        assert abs(s.h[x] - lower) <= rest + 1e-13


@pytest.mark.parametrize("name", ["srw", "three_point", "case2", "c4", "c3"])
def test_exit_invariants(laws, name):
    law = laws(name)
    prev = None
    for R in (50, 100, 200):
        s = solve_exit(law, R)
        check_exit(s)
        assert np.all((s.h > 0) & (s.h < 1))
        assert np.all(np.diff(s.h) >= -1e-13)
        assert np.max(np.abs(s.h + s.failure - 1)) <= 1e-10
        assert s.h[R] >= float(law.upper(1)) - 1e-15
        if prev is not None:
            assert np.all(s.h[:prev.R + 1] <= prev.h + 1e-14)
        prev = s


def test_check_exit_catches_tampering(laws):
    s = solve_exit(laws("case2"), 50)
    s.h[10] = s.h[11] + 0.1
    with pytest.raises(InvariantViolation):
        check_exit(s)


def test_srw_overshoot_and_martingale(tables, laws):
    law = laws("srw")
    _, tab = tables("srw", 400)
    R = 100
    s = solve_exit(law, R)
    for x in (0, 37, 100):
        ov = overshoot_law(law, s, x, 20)
        assert ov.pmf[1] == pytest.approx(s.h[x], abs=1e-15)
        assert ov.pmf[2:].sum() == 0 and ov.tail == 0
        mv = martingale_functional(law, s, x, tab)
        assert abs(mv.value - 2 * (x + 1)) <= 1e-12
    assert martingale_functional(law, s, 0, tab).value == pytest.approx(tab.v0, abs=1e-12)
    assert ratio_profile(law, R, tab, s) == pytest.approx(np.full(R + 1, (R + 1) / (R + 2)),
                                                          rel=1e-13)


@pytest.mark.parametrize("name", ["case2", "c4", "c3", "three_point"])
def test_overshoot_masses_add_to_h(laws, name):
    law = laws(name)
    s = solve_exit(law, 150)
    for x in (0, 75, 150):
        ov = overshoot_law(law, s, x, 300)
        assert abs(ov.pmf.sum() + ov.tail - s.h[x]) <= 1e-9


def test_c4_martingale(laws):
    from ladderexit.ladder import wiener_hopf_iterate
    from ladderexit.renewal import build_tables
    law = laws("c4")
    R = 500
    tab = build_tables(wiener_hopf_iterate(law, 20 * R))
    s = solve_exit(law, R)
    assert martingale_functional(law, s, 100, tab).residual <= 1e-3


@pytest.mark.parametrize("name", ["srw", "three_point", "case2", "c4", "c3"])
def test_upper_bound_everywhere(laws, tables, name):
    _, tab = tables(name, 1200)
    for R in (10, 100, 600, 1200):
        rep = check_upper_bound(solve_exit(laws(name), R), tab)
        assert rep.violations == 0


@given(centred_pmfs(), st.integers(1, 120))
def test_upper_bound_random_bounded_laws(pmf, R):
    from ladderexit.ladder import wiener_hopf_iterate
    from ladderexit.renewal import build_tables
    law = build_law({"family": "bounded", "pmf": {str(k): v for k, v in pmf.items()}})
    tab = build_tables(wiener_hopf_iterate(law, 150))
    s = solve_exit(law, R)
    check_exit(s)
    assert check_upper_bound(s, tab).violations == 0


def test_bound_violation_is_reported(laws, tables):
    _, tab = tables("case2", 300)
    bad = RenewalTable(tab.u_a, tab.v_d * np.where(np.arange(301) == 0, 0.5, 1.0), tab.u_d,
                       tab.v0, tab.law_hash, tab.defects)
    s = solve_exit(laws("case2"), 100)
    with pytest.raises(InvariantViolation):
        check_upper_bound(s, bad, raise_on_violation=True)


@pytest.mark.parametrize("name", ["srw", "case2", "c4", "c3"])
def test_lower_bound_by_visiting_R(laws, tables, name):
    # visiting R before going negative forces entry into [R, inf)
    _, tab = tables(name, 400)
    R = 200
    h = np.append(solve_exit(laws(name), R - 1).h, 1.0)
    hit = np.array([hitting_before_ruin(tab, x, R) for x in range(R + 1)])
    assert hit[R] == 1.0
    assert np.all(h >= hit - 1e-12)


def test_srw_hitting_closed_form(tables):
    _, tab = tables("srw", 200)
    for x in (0, 50, 100):
        assert hitting_before_ruin(tab, x, 100) == pytest.approx((x + 1) / 101, rel=1e-14)


def test_ratio_trends(laws, tables):
    lo = ratio_profile(laws("c4"), 200, tables("c4", 4096)[1])[:101].min()
    hi = ratio_profile(laws("c4"), 800, tables("c4", 4096)[1])[:401].min()
    assert hi > lo


def test_argument_checks(laws):
    with pytest.raises(ConfigError):
        solve_exit(laws("srw"), 0)
    s = solve_exit(laws("srw"), 5)
    with pytest.raises(ConfigError):
        s.green_row(6)


def test_iterative_route_matches_dense(laws):
    law = laws("case2")
    a = solve_exit(law, 600)
    b = solve_exit(law, 600, dense_max=10)
    np.testing.assert_allclose(b.h, a.h, rtol=0, atol=1e-12)
    np.testing.assert_allclose(b.green_row(300), a.green_row(300), rtol=1e-10)


def test_csv(tmp_path, laws, tables):
    _, tab = tables("srw", 200)
    s = solve_exit(laws("srw"), 100)
    write_exit_csv(tmp_path / "e.csv", s, tab)
    data = np.loadtxt(tmp_path / "e.csv", delimiter=",", skiprows=1)
    assert data.shape == (101, 4)
    np.testing.assert_allclose(data[:, 2], 101 / 102, rtol=1e-13)


@pytest.mark.slow
def test_case2_exit_against_simulation(laws):
    law = laws("case2")
    s = solve_exit(law, 100)
    est = mc.estimate_exit(law, 50, 100, 10 ** 6, seed=5)
    assert est.within(s.h[50])


@pytest.mark.slow
def test_case2_overshoot_against_simulation(laws):
    law = laws("case2")
    R, x = 200, 100
    s = solve_exit(law, R)
    exact = overshoot_law(law, s, x, 2 * R).conditional_exceed(R)
    est = mc.conditional_overshoot(law, x, R, 1.0, 2 * 10 ** 5, seed=6)
    assert est.within(exact)


def test_c3_overshoot_vanishes(laws):
    law = laws("c3")
    vals = []
    for R in (500, 1000, 2000):
        s = solve_exit(law, R)
        vals.append(overshoot_law(law, s, R // 2, R).conditional_exceed(0.5 * R))
    assert vals[0] > vals[1] > vals[2]
