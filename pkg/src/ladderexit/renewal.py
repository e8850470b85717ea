"""Renewal sequences of the ladder processes and the half-line Green function.

g(x, y) = sum_{k=0}^{x ^ y} v_d(x - k) u_a(y - k) for the walk killed on
(-inf, -1].  Ladder-law defect mass is left out, never renormalised, so the
tables undershoot slightly; ``defects`` travels with every table.
"""
from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .kernels import renewal
from .ladder import LadderLaw, PowerLogFit, wiener_hopf_iterate


def renewal_sequence(f, N, method="auto"):
    """u(0) = 1, u(n) = sum_{k=1}^n f(k) u(n - k)."""
    f = np.asarray(f, dtype=float)
    if np.any(f < 0) or f[1:].sum() > 1.0 + 1e-12:
        raise ConfigError("renewal_sequence: f must be a sub-pmf")
    return renewal(f, N, method)


@dataclass(frozen=True, eq=False)
class RenewalTable:
    u_a: np.ndarray
    v_d: np.ndarray
    u_d: np.ndarray
    v0: float
    law_hash: str = ""
    defects: tuple = (0.0, 0.0)
    meta: dict = field(default_factory=dict)

    @property
    def horizon(self):
        return len(self.u_a) - 1

    @property
    def U_a(self):
        return np.cumsum(self.u_a)

    @property
    def V_d(self):
        return np.cumsum(self.v_d)

    def V_d_ext(self, y):
        """V_d(y) for any y >= 0, past the horizon through a power-log fit of v_d."""
        y = np.atleast_1d(np.asarray(y, dtype=np.int64))
        V = self.V_d
        out = np.empty(y.shape)
        inside = y <= self.horizon
        out[inside] = V[y[inside]]
        if np.any(~inside):
            fit = self.v_d_fit
            N = self.horizon
            top = int(y.max())
            ext = np.cumsum(fit(np.arange(N + 1, top + 1))) + V[N]
            out[~inside] = ext[y[~inside] - N - 1]
        return out

    @property
    def v_d_fit(self):
        return PowerLogFit.fit(self.v_d)

    def _check(self, *idx):
        for i in idx:
            if np.any(np.asarray(i) < 0) or np.any(np.asarray(i) > self.horizon):
                raise IndexError(f"index outside the table horizon 0..{self.horizon}")

    def to_csv(self, path):
        n = np.arange(self.horizon + 1)
        cols = np.column_stack([n, self.u_a, self.v_d, self.U_a, self.V_d])
        hdr = (f"law_hash={self.law_hash} v0={float(self.v0)!r} "
               f"defect_z={float(self.defects[0])!r} defect_zhat={float(self.defects[1])!r}\nn,u_a,v_d,U_a,V_d")
        _atomic(path, lambda fh: np.savetxt(fh, cols, delimiter=",", header=hdr,
                                             fmt=["%d"] + ["%.17g"] * 4))

    def save(self, path):
        def write(fh):
            np.savez(fh, u_a=self.u_a, v_d=self.v_d, u_d=self.u_d,
                     meta=json.dumps({"v0": self.v0, "law_hash": self.law_hash,
                                      "defects": list(self.defects)}))
        _atomic(path, write, binary=True)

    @classmethod
    def load(cls, path):
        with np.load(path) as z:
            meta = json.loads(str(z["meta"]))
            return cls(z["u_a"].copy(), z["v_d"].copy(), z["u_d"].copy(), meta["v0"],
                       meta["law_hash"], tuple(meta["defects"]))


def _atomic(path, write, binary=False):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb" if binary else "w") as fh:
            write(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def build_tables(source, N=None, cache=None):
    """RenewalTable from a LadderLaw, or from an IncrementLaw (runs the
    Wiener-Hopf iteration at horizon N).  ``cache`` is a directory."""
    if isinstance(source, LadderLaw):
        lad = source
        N = lad.horizon if N is None else int(N)
        if N > lad.horizon:
            raise ConfigError(f"table horizon {N} exceeds ladder horizon {lad.horizon}")
    else:
        if N is None:
            raise ConfigError("build_tables: horizon N required")
        N = int(N)
        if cache:
            path = os.path.join(cache, f"tables-{source.law_hash}-{N}.npz")
            if os.path.exists(path):
                return RenewalTable.load(path)
        lad = wiener_hopf_iterate(source, N)
    u_a = renewal(lad.z_pmf[:N + 1], N)
    u_d = renewal(lad.zhat_pmf[:N + 1], N)
    tab = RenewalTable(u_a, lad.v0 * u_d, u_d, float(lad.v0), lad.law_hash,
                       tuple(lad.truncation_defect))
    if cache and not isinstance(source, LadderLaw):
        tab.save(os.path.join(cache, f"tables-{source.law_hash}-{N}.npz"))
    return tab


def spitzer_green(table, x, y):
    """g(x, y) for the walk killed on (-inf, -1]."""
    table._check(x, y)
    x, y = int(x), int(y)
    m = min(x, y)
    k = np.arange(m + 1)
    return float(np.dot(table.v_d[x - k], table.u_a[y - k]))


def green_matrix(table, R):
    """g(x, y) for 0 <= x, y <= R as a dense array."""
    table._check(R)
    g = np.zeros((R + 1, R + 1))
    va, ua = table.v_d[:R + 1], table.u_a[:R + 1]
    g[0, :] = va[0] * ua
    g[:, 0] = va * ua[0]
    for x in range(1, R + 1):
        g[x, 1:] = g[x - 1, :-1] + va[x] * ua[1:]
    return g


def green_row_sum(table, x, R):
    """sum_{k=0}^x v_d(k) U_a(R - x + k), equal to sum_{y<=R} g(x, y)."""
    table._check(x, R)
    if x > R:
        raise IndexError("green_row_sum needs x <= R")
    k = np.arange(x + 1)
    return float(np.dot(table.v_d[k], table.U_a[R - x + k]))


def hitting_before_ruin(table, x, R):
    """P_x[walk visits R before entering (-inf, -1]] = g(x, R) / g(R, R)."""
    return spitzer_green(table, x, R) / spitzer_green(table, R, R)


def ell_star_renewal_ratio(table, ladder, xs):
    """u_a(x) l*(x), which tends to 1 when Z is relatively stable."""
    xs = np.asarray(xs, dtype=np.int64)
    surv = ladder.z_survival(int(xs.max()) + 1)
    ls = np.concatenate([[0.0], np.cumsum(surv)])
    return table.u_a[xs] * ls[xs]

