"""Acceptance suite: thirteen criteria, each a function returning a Result.

``scale="full"`` runs every criterion at its stated size; ``"quick"`` divides
every R >= 500 by four (so R <= 500 and two-point trends keep two distinct
points) and caps Monte Carlo sample sizes at 1e5.
"""
from __future__ import annotations

import json
import math
import os
import time
from dataclasses import asdict, dataclass

import numpy as np

from . import asymptotics as asy
from . import montecarlo as mc
from .exit_exact import bound_log, check_exit, check_upper_bound, martingale_functional, solve_exit
from .increments import PRESETS, build_law
from .ladder import (first_passage_up, first_passage_down, tv_distance, v0_entrance, v0_series,
                     wiener_hopf_iterate)
from .renewal import RenewalTable, build_tables, green_matrix, green_row_sum

SUITES = {
    "all": tuple(range(1, 14)),
    "exact": (1, 2, 3, 4, 5),
    "trends": (6, 7, 8, 11, 13),
    "rogozin": (8, 9),
    "identities": (9, 10),
    "mc": (12,),
}


@dataclass
class Result:
    id: int
    name: str
    passed: bool
    detail: dict
    seconds: float

    def line(self):
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.id:2d} {self.name} ({self.seconds:.1f}s)"


class Context:
    """Laws, ladders, tables and exit solutions shared between criteria."""

    def __init__(self, scale="full", tamper=None, cache=None):
        if scale not in ("quick", "full"):
            raise ValueError("scale must be 'quick' or 'full'")
        self.scale = scale
        self.tamper = tamper
        self.cache = cache
        self._laws, self._ladders, self._tables, self._sols = {}, {}, {}, {}
        self.solutions = []

    def R(self, r):
        if self.scale == "quick" and r >= 500:
            return min(r // 4, 500)
        return r

    def n(self, k):
        return min(k, 10 ** 5) if self.scale == "quick" else k

    def law(self, name):
        if name not in self._laws:
            self._laws[name] = build_law(PRESETS[name])
        return self._laws[name]

    def ladder(self, name, H):
        key = (name, H)
        if key not in self._ladders:
            self._ladders[key] = wiener_hopf_iterate(self.law(name), H)
        return self._ladders[key]

    def table(self, name, H):
        key = (name, H)
        if key not in self._tables:
            path = None
            if self.cache:
                path = os.path.join(self.cache, f"tables-{self.law(name).law_hash}-{H}.npz")
            if path and os.path.exists(path):
                tab = RenewalTable.load(path)
            else:
                tab = build_tables(self.ladder(name, H))
                if path:
                    tab.save(path)
            if self.tamper is not None:
                tab = self.tamper(name, tab)
            self._tables[key] = tab
        return self._tables[key]

    def sol(self, name, R):
        key = (name, R)
        if key not in self._sols:
            s = solve_exit(self.law(name), R)
            check_exit(s)
            self._sols[key] = s
            self.solutions.append((name, s))
        return self._sols[key]


def _horizon(ctx, R):
    return max(4096, 2 * R)


# --------------------------------------------------------------------------
# criteria


def c1_gamblers_ruin(ctx):
    worst = 0.0
    for R in (10, 100, 1000):
        s = ctx.sol("srw", R)
        x = np.arange(R + 1)
        worst = max(worst, float(np.max(np.abs(s.h - (x + 1) / (R + 2)))))
    return worst <= 1e-12, {"max_error": worst, "tol": 1e-12}


def c2_spitzer(ctx):
    rng = np.random.default_rng(20240601)
    worst = 0.0
    for name in ("three_point", "case2", "c4"):
        tab = ctx.table(name, 2000)
        G = green_matrix(tab, 2000)
        cs = np.cumsum(G, axis=1)
        for _ in range(100):
            R = int(rng.integers(1, 2001))
            x = int(rng.integers(0, R + 1))
            lhs = cs[x, R]
            rhs = green_row_sum(tab, x, R)
            worst = max(worst, abs(lhs - rhs) / abs(rhs))
    return worst <= 1e-10, {"max_rel_error": worst, "tol": 1e-10}


def c3_martingale(ctx):
    R0 = 100
    srw_tab = ctx.table("srw", 20 * R0)
    s = ctx.sol("srw", R0)
    srw_res = 0.0
    for x in range(0, R0 + 1, 10):
        mv = martingale_functional(ctx.law("srw"), s, x, srw_tab)
        exact = 2.0 * (x + 1)
        srw_res = max(srw_res, abs(mv.value - exact), abs(srw_tab.V_d[x] - exact))
    R = 500  # cheap at its stated size, so never scaled down
    tab = ctx.table("c4", 20 * R)
    sc = ctx.sol("c4", R)
    res = {}
    for x in (0, R // 5, R // 2):
        res[x] = martingale_functional(ctx.law("c4"), sc, x, tab).residual
    ok = srw_res <= 1e-12 and max(res.values()) <= 1e-3
    return ok, {"srw_abs_residual": srw_res, "c4_rel_residual": res, "R": R}


def c4_upper_bound(ctx):
    # make sure the suite has produced solutions even when run alone
    if not ctx.solutions:
        for name, R in (("srw", 100), ("c4", ctx.R(500)), ("case2", ctx.R(500))):
            ctx.sol(name, R)
    total = 0
    checked = []
    for name, s in ctx.solutions:
        H = max(_horizon(ctx, s.R), s.R)
        tab = ctx.table(name, H) if (name, H) not in ctx._tables else ctx._tables[(name, H)]
        rep = check_upper_bound(s, tab)
        total += rep.violations
        checked.append([name, s.R, rep.violations, float(rep.margin.min())])
    return total == 0, {"violations": total, "solutions": checked}


def c5_ladder(ctx):
    out = {}
    ok = True
    for name in ("srw", "lazy_srw", "skip_down", "skip_up", "three_point"):
        law = ctx.law(name)
        lad = ctx.ladder(name, 200)
        up = first_passage_up(law, 512, 200, closure=True)
        dn = first_passage_down(law, 512, 200, closure=True)
        tv = max(tv_distance(lad.z_pmf, up.pmf), tv_distance(lad.zhat_pmf, dn.pmf))
        out[name] = tv
        ok &= tv <= 1e-8
    for name in ("case2", "c4", "c3"):
        law = ctx.law(name)
        lad = ctx.ladder(name, 200)
        up = first_passage_up(law, 2 ** 14, 200)
        dn = first_passage_down(law, 2 ** 14, 200)
        tv = max(tv_distance(lad.z_pmf, up.pmf), tv_distance(lad.zhat_pmf, dn.pmf))
        allow = 1e-6 + sum(lad.truncation_defect) + up.defect + dn.defect
        out[name] = [tv, allow]
        ok &= tv <= allow
    v0 = {}
    for name in ("srw", "three_point", "case2", "c4", "c3"):
        law = ctx.law(name)
        a = v0_series(law).value
        b = v0_entrance(law).value
        v0[name] = [a, b]
        ok &= abs(a - b) <= 1e-4
    srw = v0["srw"][0]
    ok &= abs(srw - 2.0) <= 1e-6
    return ok, {"tv": out, "v0": v0}


def _ratio(ctx, name, R, frac):
    H = _horizon(ctx, R)
    V = ctx.table(name, H).V_d
    s = ctx.sol(name, R)
    x = np.arange(int(frac * R) + 1)
    return s.h[x] * V[R] / V[x]


def c6_case_c4(ctx):
    lo, hi = ctx.R(500), ctx.R(2000)
    a = float(_ratio(ctx, "c4", lo, 0.5).min())
    b = float(_ratio(ctx, "c4", hi, 0.5).min())
    return b > a and b >= 0.85, {"R": [lo, hi], "min_ratio": [a, b]}


def c7_case2_bracket(ctx):
    Rs = sorted({ctx.R(r) for r in (500, 1000, 2000)})
    br = []
    for R in Rs:
        r = _ratio(ctx, "case2", R, 0.75)
        br.append([float(r.min()), float(r.max())])
    lo = [b[0] for b in br]
    hi = [b[1] for b in br]
    ok = min(lo) >= 0.1 and max(hi) <= 0.99 and (max(lo) - min(lo) < 0.05) \
        and (max(hi) - min(hi) < 0.05)
    return ok, {"R": Rs, "brackets": br}


def c8_rogozin(ctx):
    lo, hi = ctx.R(500), ctx.R(2000)
    err = {}
    for R in (lo, hi):
        s = ctx.sol("case2", R)
        err[R] = {xi: abs(float(s.h[int(math.floor(xi * R))]) - asy.rogozin_Q(1.5, 0.5, xi))
                  for xi in (0.25, 0.5, 0.75)}
    half = asy.rogozin_Q(1.5, 0.5, 0.5)
    ok = half == 0.5 and all(err[hi][xi] <= 0.05 for xi in err[hi])
    ok &= max(err[hi].values()) < max(err[lo].values())
    return ok, {"abs_error": err, "Q_half": half}


def c9_beta(ctx):
    grid = asy.kder_grid()
    kres = max(asy.kder_residual(*g) for g in grid)
    q = {
        "Q(1/4) arcsine": abs(asy.rogozin_Q(1.0, 0.5, 0.25) - 1.0 / 3.0),
        "Q(0)": abs(asy.rogozin_Q(1.5, 0.4, 0.0)),
        "Q(1)": abs(asy.rogozin_Q(1.5, 0.4, 1.0) - 1.0),
        "Brownian": abs(asy.rogozin_Q(2.0, 0.5, 0.3) - 0.3),
    }
    ok = len(grid) == 27 and kres <= 1e-8 and max(q.values()) <= 1e-10
    return ok, {"kder_max_residual": kres, "beta_errors": q}


def c10_ibp_identity(ctx):
    res = {}
    for name, alpha in (("c3", 1.0), ("c4", 0.6)):
        lad = ctx.ladder(name, 2000)
        res[name] = {t: asy.lemma44_residual(ctx.law(name), lad, alpha, t) for t in (100, 300, 500)}
    worst = max(v for r in res.values() for v in r.values())
    return worst <= 1e-5, {"residual": res}


def c11_product_trend(ctx):
    law = ctx.law("c4")
    tab = ctx.table("c4", _horizon(ctx, 2000))
    target = math.sin(math.pi * 0.6) / (math.pi * 0.6)
    vals = {}
    for x in (100, 1000):
        vals[x] = float(tab.V_d[x] * tab.U_a[x] * law.upper(np.array([x + 1]))[0])
    d0 = abs(vals[100] - target)
    d1 = abs(vals[1000] - target)
    ok = d1 <= 0.25 * target and d1 < d0
    return ok, {"values": vals, "target": target}


def mc_matrix():
    return [(law, x, R) for law in ("case2", "c4", "c3")
            for x, R in ((0, 100), (50, 100), (0, 300), (150, 300))]


def c12_monte_carlo(ctx):
    n = ctx.n(10 ** 5)
    rows = []
    ok = True
    for k, (name, x, R) in enumerate(mc_matrix()):
        e = mc.estimate_exit(ctx.law(name), x, R, n, seed=1000 + k)
        h = float(ctx.sol(name, R).h[x])
        z = (e.estimate - h) / e.se
        rows.append([name, x, R, e.estimate, e.se, h, z])
        ok &= abs(z) <= 3.0
    lo, hi = ctx.R(500), ctx.R(2000)
    n_ov = ctx.n(400_000)
    law = ctx.law("c3")
    a = mc.conditional_overshoot(law, lo // 2, lo, 0.5, n_ov, seed=77)
    b = mc.conditional_overshoot(law, hi // 2, hi, 0.5, n_ov, seed=78)
    trend = b.estimate + 3 * b.se < a.estimate - 3 * a.se
    ok &= trend
    return ok, {"matrix": rows, "overshoot": {lo: [a.estimate, a.se], hi: [b.estimate, b.se]}}


def c13_trichotomy(ctx):
    lo, hi = ctx.R(500), ctx.R(2000)
    vals = {}
    for name in ("c4", "case2", "case3"):
        H = _horizon(ctx, hi)
        tab = ctx.table(name, H)
        V = tab.V_d
        vals[name] = [float(ctx.sol(name, R).h[0] * V[R] / tab.v0) for R in (lo, hi)]
    c1, c2, c3 = vals["c4"], vals["case2"], vals["case3"]
    ok = abs(c1[1] - 1) < abs(c1[0] - 1)
    ok &= all(0.05 < v < 0.95 for v in c2) and abs(c2[1] - c2[0]) < 0.05
    ok &= c3[1] < c3[0]
    return ok, {"R": [lo, hi], "values": vals}


CRITERIA = {
    1: ("gamblers_ruin_oracle", c1_gamblers_ruin),
    2: ("spitzer_row_sum", c2_spitzer),
    3: ("martingale_identity", c3_martingale),
    4: ("upper_bound", c4_upper_bound),
    5: ("ladder_cross_validation", c5_ladder),
    6: ("trend_c4", c6_case_c4),
    7: ("case2_bracket", c7_case2_bracket),
    8: ("rogozin_limit", c8_rogozin),
    9: ("beta_identities", c9_beta),
    10: ("integration_by_parts_identity", c10_ibp_identity),
    11: ("renewal_product_trend", c11_product_trend),
    12: ("monte_carlo_agreement", c12_monte_carlo),
    13: ("case_trichotomy", c13_trichotomy),
}


def run_criterion(cid, ctx):
    name, fn = CRITERIA[cid]
    t0 = time.perf_counter()
    try:
        ok, detail = fn(ctx)
    except Exception as exc:  # a crash is a failure of that criterion
        ok, detail = False, {"error": f"{type(exc).__name__}: {exc}"}
    return Result(cid, name, bool(ok), detail, time.perf_counter() - t0)


def run_suite(suite="all", scale="quick", ctx=None, echo=None):
    ids = SUITES[suite] if isinstance(suite, str) else tuple(suite)
    ctx = Context(scale) if ctx is None else ctx
    out = []
    # the bound criterion audits every solution, so it runs last
    for cid in sorted(ids, key=lambda c: (c == 4, c)):
        r = run_criterion(cid, ctx)
        out.append(r)
        if echo:
            echo(r.line())
    return sorted(out, key=lambda r: r.id)


def report_json(results, scale):
    return json.dumps({"scale": scale, "passed": all(r.passed for r in results),
                       "criteria": [asdict(r) for r in results]},
                      indent=2, default=_default)


def _default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def bound_audit():
    return bound_log()
