"""Path simulation estimators.

Shard i of a run draws from Philox seeded with SeedSequence([seed, i]); shard
results are integer counts and are combined in shard order, so the output
depends only on (seed, shards, n), never on how many workers ran them.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import CircuitBreakerError, ConfigError, InsufficientSampleError
from .kernels import ABOVE, BELOW, CENSORED, Sampler, draw_many, run_paths

log = logging.getLogger(__name__)

MAX_PATH_STEPS = 10 ** 8
SHARDS_ENV = "LADDEREXIT_SHARDS"
MIN_SUCCESSES = 100

_samplers = {}


def default_shards():
    v = os.environ.get(SHARDS_ENV, "4")
    try:
        k = int(v)
    except ValueError:
        raise ConfigError(f"{SHARDS_ENV}={v!r} is not an integer") from None
    if k < 1:
        raise ConfigError(f"{SHARDS_ENV} must be >= 1")
    return k


def sampler_for(law):
    key = law.law_hash
    if key not in _samplers:
        _samplers[key] = Sampler(law)
    return _samplers[key]


def shard_rng(seed, i):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(i)])))


def _split(n, shards):
    base, extra = divmod(int(n), int(shards))
    return [base + (1 if i < extra else 0) for i in range(shards)]


def _map_shards(fn, n, seed, shards, workers):
    sizes = _split(n, shards)
    jobs = [(i, sz) for i, sz in enumerate(sizes)]
    run = lambda job: fn(shard_rng(seed, job[0]), job[1])
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            return list(ex.map(run, jobs))
    return [run(j) for j in jobs]


@dataclass(frozen=True)
class McEstimate:
    name: str
    estimate: float
    se: float
    n: int
    seed: int
    shards: int
    params: dict = field(default_factory=dict)
    counts: dict = field(default_factory=dict)

    def within(self, value, k=3.0):
        return abs(self.estimate - value) <= k * self.se

    def row(self):
        return [self.name, json.dumps(self.params, sort_keys=True), repr(float(self.estimate)),
                repr(float(self.se)), self.n, self.seed]


def _indicator(name, k, n, seed, shards, params, counts):
    p = k / n
    se = math.sqrt(p * (1 - p) / (n - 1)) if n > 1 else math.inf
    return McEstimate(name, p, se, n, int(seed), shards, params, counts)


def _check(n, shards):
    n = int(n)
    shards = default_shards() if shards is None else int(shards)
    if n < 1:
        raise ConfigError("n must be >= 1")
    if shards < 1:
        raise ConfigError("shards must be >= 1")
    return n, min(shards, n)


# --------------------------------------------------------------------------


def sample_increment(law, rng):
    """One exact draw of X."""
    return int(draw_many(sampler_for(law), rng.random((1, 3)))[0])


def sample_increments(law, n, seed):
    rng = shard_rng(seed, 0)
    return draw_many(sampler_for(law), rng.random((int(n), 3)))


def _exit_paths(law, x, R, n, seed, shards, workers, max_steps):
    if not 0 <= x <= R:
        raise ConfigError(f"x={x} outside [0, R={R}]")
    smp = sampler_for(law)

    def shard(rng, m):
        pos, steps, status, _ = run_paths(smp, rng, x, m, 0, R, max_steps)
        if np.any(status == CENSORED):
            log.error("circuit breaker: %d paths reached %d steps (law %s, x=%d, R=%d)",
                      int(np.sum(status == CENSORED)), max_steps, law.law_hash, x, R)
            raise CircuitBreakerError(
                f"a path ran {max_steps} steps without leaving [0, {R}]; "
                "the law may not oscillate")
        return pos, status, int(steps.sum())

    return _map_shards(shard, n, seed, shards, workers)


def estimate_exit(law, x, R, n, seed, shards=None, workers=None, max_steps=MAX_PATH_STEPS):
    """P_x(exit [0, R] above R)."""
    n, shards = _check(n, shards)
    res = _exit_paths(law, int(x), int(R), n, seed, shards, workers, max_steps)
    k = sum(int(np.sum(st == ABOVE)) for _, st, _ in res)
    steps = sum(s for _, _, s in res)
    return _indicator("exit", k, n, seed, shards, {"x": int(x), "R": int(R), "law": law.law_hash},
                      {"above": k, "below": n - k, "steps": steps})


def conditional_overshoot(law, x, R, eps, n, seed, shards=None, workers=None,
                          max_steps=MAX_PATH_STEPS):
    """P_x[Z(R) > eps R | exit above R] over the successful paths."""
    n, shards = _check(n, shards)
    res = _exit_paths(law, int(x), int(R), n, seed, shards, workers, max_steps)
    succ = 0
    big = 0
    level = float(eps) * R
    for pos, st, _ in res:
        up = st == ABOVE
        succ += int(up.sum())
        big += int(np.sum(pos[up] - R > level))
    if succ < MIN_SUCCESSES:
        raise InsufficientSampleError(f"only {succ} successful paths (< {MIN_SUCCESSES})")
    est = _indicator("conditional_overshoot", big, succ, seed, shards,
                     {"x": int(x), "R": int(R), "eps": float(eps), "law": law.law_hash},
                     {"successes": succ, "exceed": big, "paths": n})
    return est


@dataclass(frozen=True)
class LadderSample:
    """Empirical ladder laws; index m holds P[Z = m] (resp. P[-Zhat = m])."""

    z_pmf: np.ndarray
    zhat_pmf: np.ndarray
    n: int
    censored: tuple  # paths still running at max_steps, (up, down)
    seed: int
    shards: int

    def se(self, which="z"):
        p = self.z_pmf if which == "z" else self.zhat_pmf
        return np.sqrt(p * (1 - p) / self.n)


def estimate_ladder(law, n, seed, m_max=200, shards=None, workers=None, max_steps=10 ** 5):
    """First entry into [1, inf) and into (-inf, -1] from 0.

    Ladder epochs of an oscillating walk have infinite mean, so paths are
    censored at ``max_steps``; censored paths fall in no bin and their count
    is reported.
    """
    n, shards = _check(n, shards)
    smp = sampler_for(law)

    def shard(rng, m):
        out = []
        for lo_b, hi_b, st_ok in ((-math.inf, 0, ABOVE), (0, math.inf, BELOW)):
            pos, _, status, _ = run_paths(smp, rng, 0, m, lo_b, hi_b, max_steps)
            ok = status == st_ok
            h = np.minimum(np.abs(pos[ok]), m_max + 1)
            out.append((np.bincount(h, minlength=m_max + 2), int(np.sum(~ok))))
        return out

    res = _map_shards(shard, n, seed, shards, workers)
    cz = sum(r[0][0] for r in res)
    czh = sum(r[1][0] for r in res)
    cens = (sum(r[0][1] for r in res), sum(r[1][1] for r in res))
    return LadderSample(cz[:m_max + 1] / n, czh[:m_max + 1] / n, n, cens, int(seed), shards)


def estimate_rho(law, n_paths, n_steps, seed, shards=None, workers=None):
    """P[S_n > 0] at n = n_steps; the n_steps // 2 value travels in ``counts``."""
    n, shards = _check(n_paths, shards)
    n_steps = int(n_steps)
    if n_steps < 2:
        raise ConfigError("n_steps must be >= 2")
    smp = sampler_for(law)
    half = n_steps // 2

    def shard(rng, m):
        pos, _, _, rec = run_paths(smp, rng, 0, m, -math.inf, math.inf, n_steps, fixed=True,
                                   rec_step=half)
        return int(np.sum(pos > 0)), int(np.sum(rec > 0))

    res = _map_shards(shard, n, seed, shards, workers)
    k = sum(r[0] for r in res)
    kh = sum(r[1] for r in res)
    est = _indicator("rho", k, n, seed, shards, {"n_steps": n_steps, "law": law.law_hash},
                     {"positive": k, "half_steps": half, "positive_half": kh,
                      "estimate_half": kh / n})
    return est


def write_csv(path, estimates):
    from .renewal import _atomic

    def write(fh):
        w = csv.writer(fh)
        w.writerow(["estimator", "params", "estimate", "se", "n", "seed"])
        for e in estimates:
            w.writerow(e.row())

    _atomic(path, write)
