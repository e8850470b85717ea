import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given

from ladderexit import montecarlo as mc
from ladderexit.errors import ConfigError
from ladderexit.increments import build_law
from ladderexit.ladder import (LadderLaw, first_passage_adaptive, first_passage_down,
                               first_passage_up, tv_distance, v0_entrance, v0_series,
                               wiener_hopf_iterate)

from strategies import centred_pmfs


def bounded(pmf):
    return build_law({"family": "bounded", "pmf": {str(k): v for k, v in pmf.items()}})


def test_srw_ladders(laws):
    lad = wiener_hopf_iterate(laws("srw"), 50)
    assert lad.z_pmf[1] == 1.0 and lad.zhat_pmf[1] == 1.0
    assert lad.z_pmf[2:].sum() == 0 and lad.zhat_pmf[2:].sum() == 0
    assert lad.v0 == 2.0
    assert lad.info["iterations"] <= 2
    assert lad.truncation_defect == (0.0, 0.0)
    for N in (0, 1, 2, 8):
        up = first_passage_up(laws("srw"), N, 5, closure=True)
        assert abs(up.pmf[1] - 1.0) <= 1e-15 and abs(up.defect) <= 1e-15


def test_skip_free_sides(laws):
    law = laws("skip_down")
    assert first_passage_up(law, 256, 20, closure=True).pmf[1] == pytest.approx(1.0, abs=1e-12)
    assert wiener_hopf_iterate(law, 50).z_pmf[1] == pytest.approx(1.0, abs=1e-12)
    law = laws("skip_up")
    assert first_passage_down(law, 256, 20, closure=True).pmf[1] == pytest.approx(1.0, abs=1e-12)
    assert wiener_hopf_iterate(law, 50).zhat_pmf[1] == pytest.approx(1.0, abs=1e-12)


@pytest.mark.filterwarnings("ignore:mean .* drifts:RuntimeWarning")
def test_drifting_skip_free_law_has_defective_ladder():
    # s = 1/2 + s^3 / 2 for the chance of ever reaching +1
    law = bounded({-2: 0.5, 1: 0.5})
    up = first_passage_up(law, 256, 20, closure=True)
    assert up.pmf[1] == pytest.approx((math.sqrt(5) - 1) / 2, abs=1e-14)
    assert up.pmf[2:].sum() == 0


def test_srw_v0_series_against_log2():
    mp.mp.dps = 30

    def gen(x):
        return 2 * mp.log(2 / (1 + mp.sqrt(1 - 4 * x)))

    # the generating function of C(2k, k) / k, checked where the series converges fast
    x = mp.mpf("0.2")
    direct = mp.nsum(lambda k: mp.binomial(2 * k, k) * x ** k / k, [1, mp.inf])
    assert abs(direct - gen(x)) < 1e-25
    # sum_k P[S_2k = 0] / 2k is half of it at x = 1/4
    s = gen(mp.mpf(1) / 4) / 2
    assert abs(s - mp.log(2)) < 1e-25
    est = v0_series(build_law("srw"), K=10 ** 4)
    assert est.value == pytest.approx(float(mp.exp(s)), abs=1e-6)
    assert v0_entrance(build_law("srw")).value == pytest.approx(2.0, abs=1e-12)


@pytest.mark.filterwarnings("ignore:mean .* drifts:RuntimeWarning")
def test_drifting_skip_free_v0_routes():
    law = bounded({-2: 0.5, 1: 0.5})
    a, b = v0_series(law).value, v0_entrance(law).value
    assert 1 < a < math.inf
    assert abs(a - b) <= 1e-4


def test_lazy_srw_v0(laws):
    law = laws("lazy_srw")
    assert abs(v0_series(law).value - v0_entrance(law).value) <= 1e-4


def test_period_three_returns_still_give_v0_at_least_one():
    law = bounded({-3: 1 / 3, 1: 1 / 3, 2: 1 / 3})
    assert v0_series(law).value >= 1.0


@pytest.mark.parametrize("name", ["case2", "c4"])
def test_wh_against_first_passage_heavy(laws, name):
    law = laws(name)
    lad = wiener_hopf_iterate(law, 200)
    up = first_passage_up(law, 2 ** 14, 200)
    dn = first_passage_down(law, 2 ** 14, 200)
    allow = 1e-6 + sum(lad.truncation_defect) + up.defect + dn.defect
    assert tv_distance(lad.z_pmf, up.pmf) <= allow
    assert tv_distance(lad.zhat_pmf, dn.pmf) <= allow


def test_first_passage_entries_increase_with_depth(laws):
    law = laws("case2")
    prev = first_passage_up(law, 64, 100).pmf
    for N in (128, 512, 2048):
        cur = first_passage_up(law, N, 100).pmf
        assert np.all(cur >= prev - 1e-15)
        prev = cur


def test_adaptive_depth_stops(laws):
    law = laws("three_point")
    res = first_passage_adaptive(law, 20, tol=1e-8)
    ref = first_passage_up(law, 2048, 20, closure=True)
    assert tv_distance(res.pmf, ref.pmf) <= 1e-8


@pytest.mark.parametrize("name", ["case2", "c4", "c3"])
def test_defects_shrink_with_horizon(laws, name):
    law = laws(name)
    a = wiener_hopf_iterate(law, 250)
    b = wiener_hopf_iterate(law, 500)
    for d1, d2 in zip(a.truncation_defect, b.truncation_defect):
        assert 0 <= d2 <= d1
    for lad in (a, b):
        assert np.all((lad.z_pmf >= 0) & (lad.z_pmf <= 1))
        assert lad.z_pmf.sum() == pytest.approx(1 - lad.truncation_defect[0], abs=1e-15)
        assert lad.v0 >= 1


def test_csv_round_trip(tmp_path, laws):
    lad = wiener_hopf_iterate(laws("case2"), 100)
    path = tmp_path / "ladder.csv"
    lad.to_csv(path)
    back = LadderLaw.from_csv(path)
    assert np.array_equal(back.z_pmf, lad.z_pmf)
    assert np.array_equal(back.zhat_pmf, lad.zhat_pmf)
    assert back.v0 == lad.v0 and back.truncation_defect == lad.truncation_defect


def test_bad_horizon():
    with pytest.raises(ConfigError):
        wiener_hopf_iterate(build_law("srw"), 0)


@given(centred_pmfs())
def test_bounded_wh_matches_first_passage(pmf):
    law = bounded(pmf)
    lad = wiener_hopf_iterate(law, 60)
    up = first_passage_up(law, 512, 60, closure=True)
    dn = first_passage_down(law, 512, 60, closure=True)
    assert tv_distance(lad.z_pmf, up.pmf) <= 1e-8
    assert tv_distance(lad.zhat_pmf, dn.pmf) <= 1e-8


@given(centred_pmfs())
def test_bounded_v0_routes_agree(pmf):
    law = bounded(pmf)
    a = v0_series(law).value
    b = v0_entrance(law).value
    assert a >= 1 and b >= 1
    assert abs(a - b) <= 1e-4


@pytest.mark.slow
def test_case2_ladder_against_simulation(laws):
    law = laws("case2")
    lad = wiener_hopf_iterate(law, 400)
    s = mc.estimate_ladder(law, 10 ** 6, seed=11, m_max=50)
    for which, exact, emp in (("z", lad.z_pmf, s.z_pmf), ("zhat", lad.zhat_pmf, s.zhat_pmf)):
        se = s.se(which)[1:51]
        assert np.all(np.abs(emp[1:51] - exact[1:51]) <= 3 * se)


@pytest.mark.slow
def test_c4_ladder_against_simulation(laws):
    law = laws("c4")
    lad = wiener_hopf_iterate(law, 400)
    s = mc.estimate_ladder(law, 5 * 10 ** 4, seed=12, m_max=50)
    for which, exact, emp in (("z", lad.z_pmf, s.z_pmf), ("zhat", lad.zhat_pmf, s.zhat_pmf)):
        se = s.se(which)[1:51]
        ok = se > 0
        assert np.all(np.abs(emp[1:51] - exact[1:51])[ok] <= 3 * se[ok])
