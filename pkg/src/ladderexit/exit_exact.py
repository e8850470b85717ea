"""Two-sided exit from [0, R], solved exactly.

h(x) = P_x[walk jumps above R before going below 0] solves
(I - Q) h = r with Q(x, y) = p(y - x) on [0, R] and r(x) = P[X > R - x].
Absorbing masses come from the closed-form tails, so nothing is truncated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, linalg
from scipy.signal import fftconvolve

from .errors import ConfigError, InvariantViolation, NumericError, PrecisionError, ResourceError
from .renewal import hitting_before_ruin  # noqa: F401  (re-exported)

DENSE_MAX = 4000
MEMORY_BUDGET = 2 * 1024 ** 3  # bytes for the dense matrix and its factor
BOUND_SLACK = 1e-12


@dataclass(eq=False)
class ExitSolution:
    R: int
    h: np.ndarray
    failure: np.ndarray  # P_x[exit below 0], from its own right-hand side
    success_col: np.ndarray
    failure_col: np.ndarray
    law_hash: str
    residual: float
    _lu: tuple = field(default=None, repr=False)
    _toep: tuple = field(default=None, repr=False)
    _rows: dict = field(default_factory=dict, repr=False)

    def green_row(self, x):
        """g(x, .) of the walk killed outside [0, R]."""
        x = int(x)
        if not 0 <= x <= self.R:
            raise ConfigError(f"x={x} outside [0, {self.R}]")
        if x not in self._rows:
            e = np.zeros(self.R + 1)
            e[x] = 1.0
            if self._lu is not None:
                row = linalg.lu_solve(self._lu, e, trans=1, check_finite=False)
            else:
                c, r = self._toep
                row = linalg.solve_toeplitz((r, c), e, check_finite=False)
            self._rows[x] = row
        return self._rows[x]

    @property
    def green2(self):
        """Full (R+1) x (R+1) killed Green matrix."""
        if self._lu is not None:
            return linalg.lu_solve(self._lu, np.eye(self.R + 1), check_finite=False)
        c, r = self._toep
        return linalg.solve_toeplitz((c, r), np.eye(self.R + 1), check_finite=False)


def _system(law, R):
    k = np.arange(0, R + 1)
    c = -law.pmf(-k)  # column: A[i, j] = -p(j - i), i >= j
    r = -law.pmf(k)
    c[0] += 1.0
    r[0] = c[0]
    return c, r


def solve_exit(law, R, dense_max=DENSE_MAX, budget=MEMORY_BUDGET):
    """Exit probabilities on [0, R] for every starting point."""
    R = int(R)
    if R < 1:
        raise ConfigError("R must be >= 1")
    k = np.arange(0, R + 1)
    rcol = law.upper(R - k + 1)  # P[X > R - x]
    fcol = law.lower(-k - 1)  # P[X < -x]
    c, r = _system(law, R)
    rhs = np.column_stack([rcol, fcol])
    lu = toep = None
    if R + 1 <= dense_max:
        need = 2 * 8 * (R + 1) ** 2
        if need > budget:
            raise ResourceError(f"dense exit solve at R={R} needs {need / 2**30:.1f} GiB")
        A = linalg.toeplitz(c, r)
        lu = linalg.lu_factor(A, check_finite=False)
        sol = linalg.lu_solve(lu, rhs, check_finite=False)
        for _ in range(2):
            res = A @ sol - rhs
            if np.max(np.abs(res)) < 1e-14:
                break
            sol -= linalg.lu_solve(lu, res, check_finite=False)
        res = A @ sol - rhs
    else:
        # Levinson solve used as the preconditioner of a refinement loop
        toep = (c, r)
        sol = np.column_stack([linalg.solve_toeplitz(toep, rhs[:, j], check_finite=False)
                               for j in range(2)])
        for _ in range(5):
            res = linalg.matmul_toeplitz(toep, sol, check_finite=False) - rhs
            if np.max(np.abs(res)) <= 1e-13:
                break
            sol -= np.column_stack([linalg.solve_toeplitz(toep, res[:, j], check_finite=False)
                                    for j in range(2)])
        res = linalg.matmul_toeplitz(toep, sol, check_finite=False) - rhs
    resid = float(np.max(np.abs(res)))
    tol = 1e-10 if R + 1 <= dense_max else 1e-11
    if resid > tol:
        raise NumericError(f"exit solve residual {resid:.2e} above {tol:g}")
    return ExitSolution(R, sol[:, 0].copy(), sol[:, 1].copy(), rcol, fcol, law.law_hash,
                        resid, lu, toep)


def check_exit(sol, tol=1e-10):
    """Hard invariants: h in (0, 1), non-decreasing, h + failure = 1."""
    h = sol.h
    problems = []
    if np.any(h <= 0) or np.any(h >= 1):
        problems.append("h outside (0, 1)")
    if np.any(np.diff(h) < -1e-13):
        problems.append("h not monotone")
    dev = float(np.max(np.abs(h + sol.failure - 1.0)))
    if dev > tol:
        problems.append(f"success + failure deviates from 1 by {dev:.2e}")
    if problems:
        raise InvariantViolation("; ".join(problems))
    return dev


# --------------------------------------------------------------------------
# overshoot


@dataclass(frozen=True)
class Overshoot:
    pmf: np.ndarray  # index m = 0..m_max, P_x[Z(R) = m, Lambda_R]; pmf[0] = 0
    tail: float  # P_x[Z(R) > m_max, Lambda_R]
    h: float

    def conditional_exceed(self, level):
        """P_x[Z(R) > level | Lambda_R]."""
        level = int(math.floor(level))
        if level >= len(self.pmf) - 1:
            raise ConfigError("level beyond the tabulated overshoot range")
        return (self.tail + self.pmf[level + 1:].sum()) / self.h


def overshoot_law(law, sol, x, m_max=None):
    """P_x[Z(R) = m, Lambda_R] = sum_z g(x, z) p(R + m - z) for m = 1..m_max."""
    R = sol.R
    m_max = 2 * R if m_max is None else int(m_max)
    g = sol.green_row(x)
    pp = law.pmf(np.arange(0, R + m_max + 1))
    nz = np.flatnonzero(pp)
    if len(nz) <= 64:
        conv = np.zeros(len(g) + len(pp) - 1)
        for j in nz:
            conv[j:j + len(g)] += pp[j] * g
    else:
        conv = fftconvolve(g, pp)
    pmf = np.zeros(m_max + 1)
    pmf[1:] = conv[R + 1:R + m_max + 1]
    z = np.arange(R + 1)
    tail = float(np.dot(g, law.upper(R + m_max + 1 - z)))
    out = Overshoot(pmf, tail, float(sol.h[x]))
    dev = abs(pmf.sum() + tail - sol.h[x])
    if dev > 1e-9:
        raise NumericError(f"overshoot masses miss h(x) by {dev:.2e}")
    return out


# --------------------------------------------------------------------------
# martingale functional


@dataclass(frozen=True)
class MartingaleValue:
    value: float
    inside: float  # part computed from the table
    remainder: float  # extrapolated part past the table horizon
    bound: float  # crude size of what the extrapolation is uncertain about
    target: float  # V_d(x)

    @property
    def residual(self):
        return abs(self.value - self.target) / self.target


def martingale_functional(law, sol, x, table, rel_bound=1e-2):
    """E_x[V_d(S at exit above R); Lambda_R], which equals V_d(x).

    Overshoots up to the table horizon use V_d exactly; beyond it
    V_d(Y) P[Z(R) > H] + sum_{y > Y} vbar(y) P_x[R + Z(R) >= y] with vbar the
    power-log extrapolation of v_d, Y = R + H the table horizon.
    """
    R = sol.R
    N = table.horizon
    if N <= R:
        raise ConfigError(f"table horizon {N} must exceed R={R}")
    H = N - R
    ov = overshoot_law(law, sol, x, H)
    V = table.V_d
    m = np.arange(1, H + 1)
    inside = float(np.dot(V[R + m], ov.pmf[1:]))
    Y = N
    rem = V[Y] * ov.tail
    bound = 0.0
    side = law.right
    if ov.tail > 0 and side is not None:
        fit = table.v_d_fit
        g = sol.green_row(x)
        z = np.arange(R + 1, dtype=float)

        def f(t):
            y = math.exp(t)
            return float(fit(y) * y * np.dot(g, side.ge(y - z)))

        a = math.log(Y + 0.5)
        b = a + 60.0
        val, err = integrate.quad(f, a, b, epsrel=1e-10, epsabs=0.0, limit=400)
        # integrand left at the cut: a slowly decaying tail past b is not covered
        cut = f(b)
        rem += val
        bound = err + cut * 60.0 + abs(val) * 0.05
        if not math.isfinite(val) or cut * 60.0 > rel_bound * table.V_d[x]:
            raise PrecisionError(
                f"martingale tail past the horizon not summable at the requested accuracy "
                f"(integrand at cut {cut:.2e})", bound=bound)
    elif ov.tail > 0:
        bound = rem
    return MartingaleValue(inside + rem, inside, rem, bound, float(V[x]))


# --------------------------------------------------------------------------
# ratios and bounds


def ratio_profile(law, R, table, sol=None):
    """x -> h(x) V_d(R) / V_d(x); every entry is <= 1 by the upper bound."""
    sol = solve_exit(law, R) if sol is None else sol
    V = table.V_d
    if table.horizon < R:
        raise ConfigError("table horizon below R")
    return sol.h * V[R] / V[:R + 1]


@dataclass
class BoundReport:
    R: int
    law_hash: str
    margin: np.ndarray  # V_d(x)/V_d(R) - h(x)
    violations: int


_BOUND_LOG = []


def check_upper_bound(sol, table, raise_on_violation=False):
    """V_d(x)/V_d(R) - h(x) >= -slack for all x; every call is logged."""
    R = sol.R
    V = table.V_d
    margin = V[:R + 1] / V[R] - sol.h
    nv = int(np.sum(margin < -BOUND_SLACK))
    rep = BoundReport(R, sol.law_hash, margin, nv)
    _BOUND_LOG.append((sol.law_hash, R, nv, float(margin.min())))
    if nv and raise_on_violation:
        raise InvariantViolation(f"upper bound violated at {nv} points (R={R})")
    return rep


def bound_log():
    return list(_BOUND_LOG)


def exit_summary(law, sol, table):
    ratio = ratio_profile(law, sol.R, table, sol)
    rep = check_upper_bound(sol, table)
    return {"R": sol.R, "law_hash": law.law_hash, "min_ratio": float(ratio.min()),
            "max_ratio": float(ratio.max()), "bound_violations": rep.violations}


def write_exit_csv(path, sol, table):
    from .renewal import _atomic

    R = sol.R
    V = table.V_d
    x = np.arange(R + 1)
    ratio = sol.h * V[R] / V[:R + 1]
    margin = V[:R + 1] / V[R] - sol.h
    cols = np.column_stack([x, sol.h, ratio, margin])
    hdr = "x,h,ratio,bound_margin"
    _atomic(path, lambda fh: np.savetxt(fh, cols, delimiter=",", header=hdr, comments="",
                                         fmt=["%d", "%.17g", "%.17g", "%.17g"]))
