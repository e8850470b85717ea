"""Slowly varying functionals, limit constants, stable-law exit formulas and
the condition / case classifier.

Step functions of t (ladder survivals, increment tails) are constant on
[j, j + 1), so integrals over a cell are done in closed form or with a
fixed Gauss-Legendre rule on the smooth remainder.  Past the ladder horizon
P[Z > s] is replaced by A s^(-a) (ln s)^b with the declared index a fitted
on [M/8, M]; that extrapolation is the only non-exact ingredient.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import CapabilityError, ConfigError, InvariantViolation
from .increments import TailFunctionals

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


def _sinc_pi(t):
    """sin(pi t)/(pi t), equal to 1 at t = 0."""
    return 1.0 if t == 0 else math.sin(math.pi * t) / (math.pi * t)


# --------------------------------------------------------------------------
# ladder integrals


def _survival(ladder, n, hat=False):
    pmf = ladder.zhat_pmf if hat else ladder.z_pmf
    return np.clip(1.0 - np.cumsum(pmf)[:n], 0.0, None)


def _step_integral(surv, x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ConfigError("x must be >= 0")
    if np.any(x > len(surv) - 1):
        raise IndexError(f"x beyond the ladder horizon {len(surv) - 1}")
    cs = np.concatenate(([0.0], np.cumsum(surv)))
    fl = np.minimum(np.floor(x).astype(np.int64), len(surv) - 1)
    out = cs[fl] + (x - fl) * surv[fl]
    return out if out.ndim else float(out)


def ell_star(ladder, x):
    """int_0^x P[Z > t] dt."""
    return _step_integral(_survival(ladder, ladder.horizon + 1), x)


def ell_hat_star(ladder, v0, x):
    """(1/v0) int_0^x P[-Zhat > t] dt."""
    return _step_integral(_survival(ladder, ladder.horizon + 1, hat=True), x) / float(v0)


# --------------------------------------------------------------------------
# the slowly varying kit


@dataclass(frozen=True)
class SurvivalTail:
    """A s^(-a) (ln s)^b, used for P[Z > s] past the horizon."""

    logA: float
    a: float
    b: float

    @classmethod
    def fit(cls, surv, a):
        M = len(surv) - 1
        lo = max(M // 8, 2)
        y = np.arange(lo, M + 1) + 0.5
        seg = surv[lo:M + 1]
        if M < 16 or np.any(seg <= 0):
            raise CapabilityError("ladder survival vanishes before the horizon; no tail to fit")
        X = np.column_stack([np.ones_like(y), np.log(np.log(y))])
        (lA, b), *_ = np.linalg.lstsq(X, np.log(seg) + a * np.log(y), rcond=None)
        return cls(float(lA), float(a), float(b))

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        return np.exp(self.logA - self.a * np.log(s) + self.b * np.log(np.log(s)))


class SlowVaryingKit:
    """l*, l, l_sharp for a law and its ladder.

    ``convention`` picks l:
      "calibrated"  l = l* if a rho = 1, else P[Z > x] = sinc(a rho) x^(-a rho) l(x);
      "identity"    l(s) = alpha s^(alpha-1) l*(s), which makes the
                    integration-by-parts identity for l* l_sharp exact.
    """

    def __init__(self, law, ladder, alpha, rho=1.0, convention="calibrated"):
        if convention not in ("calibrated", "identity"):
            raise ConfigError(f"unknown convention {convention!r}")
        if not 0 < alpha <= 1:
            raise CapabilityError("l_sharp is defined for 0 < alpha <= 1")
        self.law = law
        self.ladder = ladder
        self.alpha = float(alpha)
        self.rho = float(rho)
        self.convention = convention
        self.M = ladder.horizon
        self.surv = _survival(ladder, self.M + 1)
        self.ls_int = np.concatenate(([0.0], np.cumsum(self.surv)))  # l* at integers
        self.ar = self.alpha * self.rho
        self.tail = SurvivalTail.fit(self.surv, self.ar)
        self._c = 1.0 / _sinc_pi(self.ar)
        self._sharp_M = None

    # -- pointwise evaluators ---------------------------------------------

    def _ell_star_ext(self, s):
        """l*(s) for s >= M through the fitted survival."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        M = self.M
        out = np.empty_like(s)
        for i, v in enumerate(s):
            val, _ = integrate.quad(lambda u: math.exp(u) * float(self.tail(math.exp(u))),
                                    math.log(M + 1), math.log(v), epsrel=1e-12, limit=200)
            out[i] = self.ls_int[M + 1] + val if v > M + 1 else \
                self.ls_int[M] + (v - M) * self.surv[M]
        return out

    def ell_star(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.empty_like(s)
        inside = s <= self.M + 1
        fl = np.minimum(np.floor(s[inside]).astype(np.int64), self.M)
        out[inside] = self.ls_int[fl] + (s[inside] - fl) * self.surv[fl]
        if np.any(~inside):
            out[~inside] = self._ell_star_ext(s[~inside])
        return out

    def z_tail(self, s):
        """P[Z > s], exact up to the horizon, fitted beyond."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.empty_like(s)
        inside = s < self.M + 1
        out[inside] = self.surv[np.floor(s[inside]).astype(np.int64)]
        out[~inside] = self.tail(s[~inside])
        return out

    def ell(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if self.convention == "identity":
            return self.alpha * s ** (self.alpha - 1.0) * self.ell_star(s)
        if self.ar == 1.0:
            return self.ell_star(s)
        return self._c * s ** self.ar * self.z_tail(s)

    def _density(self, s):
        """alpha s^(alpha-1) / l(s)."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if self.convention == "identity" or self.ar == 1.0:
            return 1.0 / self.ell_star(s)
        return self.alpha * s ** (self.alpha - 1.0) / self.ell(s)

    # -- l_sharp --------------------------------------------------------------

    def _left_step(self, j):
        """F(-s) on s in (j, j + 1): P[X <= -(j + 1)]."""
        return self.law.lower(-(np.asarray(j, dtype=np.int64) + 1))

    def _cells(self, j0, j1):
        """int over [j, j+1) of F(-s) alpha s^(a-1)/l(s) for j0 <= j < j1 (j >= 1)."""
        j = np.arange(j0, j1)
        if len(j) == 0:
            return np.zeros(0)
        F = self._left_step(j)
        nodes = j[:, None] + _GL_X[None, :]
        dens = self._density(nodes.ravel()).reshape(nodes.shape)
        return F * (dens @ _GL_W)

    def _cell_partial(self, lo, hi):
        """Integral over [lo, hi] inside a single cell, with lo possibly near 0."""
        if hi <= lo:
            return 0.0
        j = int(math.floor(lo))
        F = float(self._left_step(j))
        if F == 0.0:
            return 0.0
        if j == 0:
            f = lambda u: float(self._density(math.exp(u))[0]) * math.exp(u)
            val, _ = integrate.quad(f, math.log(lo), math.log(hi), epsrel=1e-13, limit=200)
        else:
            val, _ = integrate.quad(lambda s: float(self._density(s)[0]), lo, hi,
                                    epsrel=1e-13, limit=200)
        return F * val

    # Past the horizon the log integrands are returned as (slope, rest) with
    # value slope * u + rest, so the linear parts can cancel exactly for huge u.

    def _log_left(self, u):
        """ln F(-s) at s = e^u + 1/2, the cell midpoint form used past the horizon."""
        side = self.law.left
        if u < 700.0:
            return 0.0, math.log(float(side.ge(math.exp(u) + 0.5)))
        if side.kind == "log":
            return -side.alpha, math.log(side.weight) - side.gamma * math.log1p(u)
        # Hurwitz zeta tail: c k^(-a) / a to relative O(1/k)
        return -side.alpha, math.log(side.c / side.alpha)

    def _log_ell_star(self, u):
        """ln l*(e^u) past the horizon, where P[Z > s] = A s^(-a) (ln s)^b."""
        t = self.tail
        u1 = math.log(self.M + 1)
        L1 = self.ls_int[self.M + 1]
        k = 1.0 - t.a
        if k == 0.0:
            if abs(t.b + 1.0) < 1e-12:
                rest = math.log(u / u1)
            else:
                rest = (u ** (t.b + 1.0) - u1 ** (t.b + 1.0)) / (t.b + 1.0)
            return 0.0, math.log(L1 + math.exp(t.logA) * rest)
        if k * u < 600.0:
            rest, _ = integrate.quad(lambda v: math.exp(k * v + t.b * math.log(v)), u1, u,
                                     epsrel=1e-13, limit=200)
            return 0.0, math.log(L1 + math.exp(t.logA) * rest)
        # int^u e^(kv) v^b dv = e^(ku) u^b / k * sum_n (-1)^n b(b-1)..(b-n+1) / (ku)^n
        term, series = 1.0, 1.0
        for n in range(12):
            term *= -(t.b - n) / (k * u)
            series += term
        return k, t.logA + t.b * math.log(u) - math.log(k) + math.log(series)

    def _log_density(self, u):
        """ln of alpha s^(alpha-1) / l(s) at s = e^u past the horizon."""
        if self.convention == "calibrated" and self.ar != 1.0:
            t = self.tail
            return (self.alpha - 1.0,
                    math.log(self.alpha) - math.log(self._c) - t.logA - t.b * math.log(u))
        k, r = self._log_ell_star(u)
        return -k, -r

    def tail_closure(self):
        """int_{M+1}^inf F(-s) alpha s^(a-1)/l(s) ds and an error bound.

        F(-s) is the step function; past the horizon it is replaced by the
        left tail evaluated at the cell midpoint, a relative error O(s^-2).
        The integral is taken in w = ln ln s, in log space, up to s = exp(e^690).
        """
        if self._sharp_M is None:
            law = self.law
            if law.left is None:
                val = float(np.sum(self._cells(self.M + 1, int(-law.support_bounds[0]) + 1)))
                self._sharp_M = (val, 0.0)
                return self._sharp_M

            def g(w):
                u = math.exp(w)
                (s1, r1), (s2, r2) = self._log_left(u), self._log_density(u)
                slope = s1 + s2 + 1.0
                if abs(slope) < 1e-12:
                    slope = 0.0  # equal indices, only the logarithms remain
                return math.exp(slope * u + r1 + r2 + w)

            w0, w1 = math.log(math.log(self.M + 1)), 690.0
            pts = [w for w in (math.log(50.0), math.log(700.0)) if w0 < w < w1]
            val, err = integrate.quad(g, w0, w1, points=pts or None, epsrel=1e-12, epsabs=0.0,
                                      limit=500)
            # the remainder past w1, bounded by a geometric tail from the last unit of w
            g1, g0 = g(w1), g(w1 - 1.0)
            if g1 > 0:
                beta = math.log(g0 / g1) if g0 > g1 else 0.0
                rest = g1 / beta if beta > 0 else math.inf
                if not rest <= 1e-3 * val:
                    raise CapabilityError(
                        "l_sharp integrand is not summable with this tail extrapolation "
                        f"(decay exp(-{beta:.3g} w) in w = ln ln s)")
                val += rest
                err += rest
            self._sharp_M = (val, err + 1e-7 * val)
        return self._sharp_M

    def ell_sharp(self, t):
        """alpha int_t^inf s^(alpha-1) F(-s)/l(s) ds; returns (value, bound)."""
        t = float(t)
        if t <= 0:
            raise ConfigError("t must be > 0")
        M = self.M
        if t > M:
            raise IndexError(f"t={t} beyond the ladder horizon {M}")
        tail, bound = self.tail_closure()
        j = int(math.floor(t))
        first = self._cell_partial(t, j + 1)
        inside = float(np.sum(self._cells(j + 1, M + 1)))
        return first + inside + tail, bound

    def ell_sharp_curve(self, xs):
        """l_sharp at integer points xs, sharing one cell sweep."""
        xs = np.asarray(xs, dtype=np.int64)
        if np.any(xs < 1) or np.any(xs > self.M):
            raise IndexError("xs must lie in 1..horizon")
        cells = self._cells(1, self.M + 1)
        rev = np.cumsum(cells[::-1])[::-1]
        tail, _ = self.tail_closure()
        return rev[xs - 1] + tail


def ell_sharp(law, kit, alpha, t):
    """Value of l_sharp(t) using the evaluators in ``kit``."""
    if abs(kit.alpha - alpha) > 0:
        raise ConfigError("alpha differs from the kit's")
    if kit.law is not law:
        raise ConfigError("kit was built for a different law")
    return kit.ell_sharp(t)[0]


def lemma44_residual(law, ladder, alpha, t):
    """|LHS - RHS| / |LHS| (or / int_0^t F(-s) ds when LHS = 0) for
    l*(t) l_sharp(t) = -int_0^t F(-s) ds + int_0^t P[Z > s] l_sharp(s) ds,
    with l_sharp built on l(s) = alpha s^(alpha-1) l*(s).
    """
    kit = SlowVaryingKit(law, ladder, alpha, convention="identity")
    t = float(t)
    if not 0 < t <= kit.M:
        raise IndexError(f"t={t} outside (0, {kit.M}]")
    lhs = float(kit.ell_star(t)[0]) * kit.ell_sharp(t)[0]
    neg = float(TailFunctionals(law)._integral(lambda j: law.lower(-j), np.array([t]))[0])
    # right side: l_sharp at cell ends from the Gauss-Legendre sweep, inside
    # a cell in closed form (l* is linear there), outer integral per cell
    J = int(math.floor(t))
    ends = kit.ell_sharp_curve(np.arange(1, J + 2)) if J + 1 <= kit.M else \
        np.append(kit.ell_sharp_curve(np.arange(1, J + 1)), kit.tail_closure()[0])

    def sharp(j, s):
        F = kit._left_step(j)
        S, a, b = kit.surv[j], kit.ls_int[j], kit.ls_int[j + 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            inner = np.where(S > 0, np.log(b / (a + (s - j) * S)) / S, (j + 1 - s) / a)
        return ends[j] + F * inner

    total = 0.0
    if J >= 2:
        jj = np.arange(1, J)
        nodes = jj[:, None] + _GL_X[None, :]
        vals = sharp(jj[:, None], nodes)
        total += float(np.sum(kit.surv[jj] * (vals @ _GL_W)))
    pieces = [(0, 0.0, min(t, 1.0))] + ([(J, float(J), t)] if J >= 1 else [])
    for j, lo, hi in pieces:
        if hi > lo:
            v, _ = integrate.quad(lambda s: kit.surv[j] * float(sharp(np.int64(j), s)), lo, hi,
                                  epsabs=0.0, epsrel=1e-13, limit=200)
            total += v
    rhs = -neg + total
    # past a bounded left support l_sharp(t) = 0, and the two right terms set the scale
    return abs(lhs - rhs) / (abs(lhs) if lhs != 0 else neg)


# --------------------------------------------------------------------------
# constants and stable-law formulas


def kappa(alpha, rho, p=None, check=True):
    """Gamma(a)[sin pi a rho + sin pi a rho^] / (pi Gamma(a rho + 1) Gamma(a rho^ + 1)).

    When 0 < p < 1 the one-sided expression with p is evaluated too and must
    agree; a mismatch means (rho, p) are not a consistent pair.
    """
    alpha, rho = float(alpha), float(rho)
    if not (0 < alpha <= 2 and 0 <= rho <= 1):
        raise ConfigError("kappa needs 0 < alpha <= 2 and 0 <= rho <= 1")
    rh = 1.0 - rho
    den = math.pi * math.gamma(alpha * rho + 1) * math.gamma(alpha * rh + 1)
    s1 = math.sin(math.pi * alpha * rho)
    s2 = math.sin(math.pi * alpha * rh)
    val = math.gamma(alpha) * (s1 + s2) / den
    if abs(val) < 1e-15:
        val = 0.0
    if check and p is not None and 0 < p < 1:
        first = math.gamma(alpha) * s1 / (p * den)
        if abs(first - val) > 1e-12 * max(1.0, abs(val)):
            raise InvariantViolation(
                f"kappa: one-sided form {first:.15g} differs from symmetric form {val:.15g}; "
                "p/q must equal sin(pi a rho)/sin(pi a rho^)")
    return val


def _betacf(a, b, x, tol=1e-15, max_iter=2000):
    """Continued fraction of I_x(a, b) (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = tiny if abs(d) < tiny else d
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        de = d * c
        h *= de
        if abs(de - 1.0) < tol:
            return h
    raise CapabilityError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc_reg(a, b, x):
    """Regularised incomplete beta I_x(a, b), a, b > 0."""
    if a <= 0 or b <= 0:
        raise ConfigError("betainc_reg needs a, b > 0")
    if x <= 0:
        return 0.0
    if x >= 1:
        return 1.0
    lfront = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
              + a * math.log(x) + b * math.log1p(-x))
    if a == b and x == 0.5:
        return 0.5
    front = math.exp(lfront)
    if x <= a / (a + b):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def _stable_regime(alpha, rho):
    alpha, rho = float(alpha), float(rho)
    if not 0 < alpha <= 2:
        raise ConfigError("alpha must lie in (0, 2]")
    if alpha == 1 and rho * (1 - rho) == 0:
        raise CapabilityError("excluded case alpha = 1 with rho*(1-rho) = 0 (not strictly stable)")
    if not 0 < rho < 1:
        raise CapabilityError(f"rho={rho} outside (0, 1): a*rho and a*rho^ must both be > 0")
    return alpha * (1.0 - rho), alpha * rho


def rogozin_Q(alpha, rho, xi):
    """Limit of P_{xi R}(exit above R): I_xi(a rho^, a rho)."""
    a, b = _stable_regime(alpha, rho)
    xi = float(xi)
    if not 0 <= xi <= 1:
        raise ConfigError("xi must lie in [0, 1]")
    return betainc_reg(a, b, xi)


def rogozin_overshoot(alpha, rho, xi, eta):
    """Limit law of the scaled overshoot: mass of {Z(R)/R > eta} on the exit event,
    started from xi R."""
    xi, eta = float(xi), float(eta)
    if not 0 < xi < 1:
        raise ConfigError("xi must lie in (0, 1)")
    if eta <= 0:
        raise ConfigError("eta must be > 0")
    ar = alpha * rho
    if not 0 < ar <= 1:
        raise CapabilityError(f"a*rho={ar} outside (0, 1]")
    if ar == 1.0:
        return 0.0
    arh = alpha * (1.0 - rho)
    if arh <= 0:
        raise CapabilityError("a*rho^ must be > 0")

    def f(u):
        t = math.exp(u)
        return t * t ** (-ar) * (t + 1.0) ** (-arh) / (t + 1.0 - xi)

    T = max(eta, 1.0) * 1e8
    val, err = integrate.quad(f, math.log(eta), math.log(T), epsabs=1e-14, epsrel=1e-13,
                              limit=400)
    # t^-a-1 (1 + 1/t)^-arh (1 + (1-xi)/t)^-1 expanded to second order past T
    k1 = arh + 1.0 - xi
    k2 = arh * (arh + 1) / 2 + arh * (1 - xi) + (1 - xi) ** 2
    tail = (T ** -alpha / alpha - k1 * T ** (-alpha - 1) / (alpha + 1)
            + k2 * T ** (-alpha - 2) / (alpha + 2))
    pref = math.sin(math.pi * ar) / math.pi * (1 - xi) ** ar * xi ** arh
    return pref * (val + tail)


def kder_sides(alpha, rho, c):
    """(LHS, RHS) of the exit identity at level 1 + c from 1."""
    arh, ar = _stable_regime(alpha, rho)
    c = float(c)
    if c < 0:
        raise ConfigError("c must be >= 0")
    if ar >= 1:
        raise CapabilityError("the integral form needs a*rho < 1")
    rhs = betainc_reg(arh, ar, 1.0 / (1.0 + c))
    pref = math.sin(math.pi * ar) / math.pi
    if c == 0:
        # s^(a rho - 1)/(1 + s) on (0, 1) and, with s = 1/w, w^(-a rho)/(1 + w)
        i1, _ = integrate.quad(lambda s: 1.0 / (1.0 + s), 0, 1, weight="alg",
                               wvar=(ar - 1.0, 0.0), epsabs=1e-15, epsrel=1e-12)
        i2, _ = integrate.quad(lambda w: 1.0 / (1.0 + w), 0, 1, weight="alg",
                               wvar=(-ar, 0.0), epsabs=1e-15, epsrel=1e-12)
    else:
        i1, _ = integrate.quad(lambda s: (s + (1 + s) * c) ** (-arh) / (1.0 + s), 0, 1,
                               weight="alg", wvar=(alpha - 1.0, 0.0), epsabs=1e-15,
                               epsrel=1e-12, limit=200)
        i2, _ = integrate.quad(lambda w: (1 + c + c * w) ** (-arh) / (1.0 + w), 0, 1,
                               weight="alg", wvar=(-ar, 0.0), epsabs=1e-15, epsrel=1e-12,
                               limit=200)
    return pref * (i1 + i2), rhs


def kder_residual(alpha, rho, c):
    lhs, rhs = kder_sides(alpha, rho, c)
    return abs(lhs - rhs)


def kder_grid():
    """27 (alpha, rho, c) points with 0 < rho < 1 and alpha rho < 1."""
    rhos = {0.7: (0.2, 0.5, 0.8), 1.0: (0.25, 0.5, 0.75), 1.5: (0.4, 0.5, 0.6)}
    return [(a, r, c) for a in (0.7, 1.0, 1.5) for r in rhos[a] for c in (0.25, 1.0, 4.0)]


# --------------------------------------------------------------------------
# classification


@dataclass
class LimitProfile:
    alpha: float
    rho: float
    rho_ci: tuple
    rho_source: str
    p: float
    q: float
    condition_flags: dict = field(default_factory=dict)
    case_tag: str = "undetermined"

    @property
    def rho_hat(self):
        return 1.0 - self.rho

    def to_json(self):
        rep = {"alpha": self.alpha,
               "rho": {"est": self.rho, "ci": list(self.rho_ci), "source": self.rho_source},
               "p": self.p,
               "flags": {k: {"verdict": v["verdict"], "evidence": v["evidence"]}
                         for k, v in self.condition_flags.items()},
               "case": self.case_tag}
        return json.dumps(rep, indent=2, default=_json_default)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(type(o))


def _decreasing(v):
    return bool(np.all(np.diff(v) <= 1e-12))


def _increasing(v):
    return bool(np.all(np.diff(v) >= -1e-12))


def case_from(alpha, rho, rho_ci=None, p=None, tol=1e-9):
    """Case I, II or III from (alpha, rho), with the dictionary by p where it decides."""
    a1 = max(alpha, 1.0)
    if p is not None and math.isfinite(p):
        if alpha < 1 and p == 1.0:
            return "I"
        if alpha < 1 and p == 0.0:
            return "III"
        if alpha < 1:
            return "II"
        if 1 < alpha < 2:
            return "I" if p == 0.0 else "II"
        if alpha == 2:
            return "I"
    lo, hi = rho_ci if rho_ci is not None else (rho - tol, rho + tol)
    one = lo * a1 <= 1.0 <= hi * a1 + tol
    zero = lo <= tol
    if one and not zero:
        return "I"
    if zero and not one:
        return "III"
    if not one and not zero:
        return "II"
    return "undetermined"


def classify(law, rho=None, rho_ci=None, rho_source="declared", xs=None, table=None):
    """Condition flags (C1)-(C4) with finite-x evidence, and the case tag."""
    xs = np.unique(np.round(np.logspace(1, 4, 13)).astype(np.int64)) if xs is None \
        else np.asarray(xs, dtype=np.int64)
    alpha = float(law.alpha)
    p, q = law.tail_balance
    if rho is None:
        raise ConfigError("classify needs rho (Monte Carlo estimate or declared)")
    rho = float(rho)
    rho_ci = (rho, rho) if rho_ci is None else tuple(float(v) for v in rho_ci)
    prof = LimitProfile(alpha, rho, rho_ci, rho_source, float(p), float(q))
    if law.variance_finite:
        prof.case_tag = "finite_variance"
        for k in ("C1", "C2", "C3", "C4"):
            prof.condition_flags[k] = {"verdict": False, "evidence": [],
                                       "note": "finite variance"}
        return prof
    tf = TailFunctionals(law)
    x = xs.astype(float)
    flags = prof.condition_flags
    mean_ok = math.isfinite(law.positive_mean) and math.isfinite(law.negative_mean)
    if mean_ok:
        mp, mm = tf.m_plus(x), tf.m_minus(x)
        r1 = mp / (mp + mm)
        flags["C1"] = {"verdict": bool(_decreasing(r1) and r1[-1] < 0.05),
                       "evidence": np.column_stack([xs, r1]).tolist()}
        m2 = tf.m(2 * x) / tf.m(x)
        flags["C2"] = {"verdict": bool(alpha == 2.0 and _decreasing(m2)),
                       "evidence": np.column_stack([xs, m2]).tolist()}
    else:
        flags["C1"] = {"verdict": False, "evidence": [], "note": "E|X| infinite"}
        flags["C2"] = {"verdict": False, "evidence": [], "note": "E|X| infinite"}
    A = tf.A(x)
    H = tf.H(xs)
    r3 = A / (x * H)
    c3 = {"verdict": bool(alpha == 1.0 and abs(rho - 1.0) < 1e-9 and _increasing(r3)),
          "evidence": np.column_stack([xs, r3]).tolist()}
    if table is not None:
        ok = xs[2 * xs <= table.horizon]
        V = table.V_d
        c3["vd_slow_variation"] = np.column_stack([ok, V[2 * ok] / V[ok]]).tolist()
    flags["C3"] = c3
    up = law.upper(xs + 1)
    lowx = law.lower(-xs)
    r4 = lowx / up
    flags["C4"] = {"verdict": bool(alpha < 1 and p == 1.0 and _decreasing(r4)),
                   "evidence": np.column_stack([xs, r4]).tolist(), "declared_index": alpha}
    prof.case_tag = case_from(alpha, rho, rho_ci, p)
    return prof
