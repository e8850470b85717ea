"""Integer-lattice increment laws with exact pmfs and tails.

A law is a finite "core" (an explicit pmf on a few sites, e.g. the simple
random walk, or the centering masses on {-1, 0, 1}) plus up to two heavy
sides.  Each side describes the jump magnitude J >= 1 of the right or left
tail:

* ``zeta``: P[J = k] = c k^(-1-alpha); P[J >= k] = c zeta(1+alpha, k).
* ``log``: P[J >= k] = w k^(-alpha) (1 + ln k)^(-gamma)  (gamma may be 0).

Everything is evaluated from closed forms, so there is no truncation
anywhere; the ``window`` only controls what gets tabulated.
"""
from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field, asdict
from functools import cached_property, reduce

import numpy as np
from scipy import integrate, special

from .errors import CapabilityError, ConfigError, ConstructionError, IrreducibilityError

FAMILIES = ("bounded", "srw", "pareto_two_sided", "pareto_log_corrected", "custom")
MASS_TOL = 1e-12
MEAN_TOL = 1e-10


# --------------------------------------------------------------------------
# tail sums


def tail_sum(g, K, g_log=None, direct=256):
    """Sum_{k >= K} g(k) for a smooth, decreasing, summable g.

    Sums ``direct`` terms explicitly and closes with Euler-Maclaurin
    (integral + g/2 - g'/12) at M = K + direct.  ``g_log(u)`` must equal
    g(e^u) e^u; it is used for the integral when given (avoids overflow).
    """
    K = int(K)
    ks = np.arange(K, K + direct, dtype=float)
    head = float(np.sum(g(ks)))
    M = float(K + direct)
    if g_log is None:
        def g_log(u):
            return g(np.exp(u)) * np.exp(u)
    val, err = integrate.quad(g_log, math.log(M), np.inf,
                              epsabs=0.0, epsrel=1e-13, limit=400)
    h = 1e-3 * M
    gp = (g(M + h) - g(M - h)) / (2 * h)
    return head + val + 0.5 * g(M) - gp / 12.0


class ZetaSide:
    """Jump magnitude with P[J = k] = c k^(-1-alpha), k >= 1."""

    kind = "zeta"

    def __init__(self, alpha, weight):
        self.alpha = float(alpha)
        self.gamma = 0.0
        self.weight = float(weight)
        self.c = self.weight / special.zeta(1.0 + self.alpha)

    def pmf(self, k):
        k = np.asarray(k, dtype=float)
        return self.c * k ** (-1.0 - self.alpha)

    def ge(self, k):
        """P[J >= k] for integer k >= 1."""
        k = np.asarray(k, dtype=float)
        return self.c * special.zeta(1.0 + self.alpha, k)

    @property
    def mean_finite(self):
        return self.alpha > 1.0

    def mean(self):
        if not self.mean_finite:
            return math.inf
        return self.c * special.zeta(self.alpha)

    def sum_ge(self, K):
        """Sum_{k >= K} P[J >= k]."""
        if not self.mean_finite:
            return np.full(np.shape(K), math.inf)
        K = np.asarray(K, dtype=float)
        s = 1.0 + self.alpha
        return self.c * (special.zeta(s - 1.0, K) - (K - 1.0) * special.zeta(s, K))

    def describe(self):
        return {"kind": self.kind, "alpha": self.alpha, "weight": self.weight}


class LogSide:
    """Jump magnitude with P[J >= k] = w k^(-alpha) (1 + ln k)^(-gamma)."""

    kind = "log"

    def __init__(self, alpha, weight, gamma):
        self.alpha = float(alpha)
        self.gamma = float(gamma)
        self.weight = float(weight)
        self._mean = None

    def _g(self, x):
        x = np.asarray(x, dtype=float)
        return x ** (-self.alpha) * (1.0 + np.log(x)) ** (-self.gamma)

    def _g_log(self, u):
        return math.exp((1.0 - self.alpha) * u) * (1.0 + u) ** (-self.gamma)

    def ge(self, k):
        return self.weight * self._g(k)

    def pmf(self, k):
        k = np.asarray(k, dtype=float)
        # ge(k+1)/ge(k) written with log1p so large k keeps full precision
        lk = 1.0 + np.log(k)
        step = np.log1p(1.0 / k)
        lratio = -self.alpha * step - self.gamma * np.log1p(step / lk)
        return -self.ge(k) * np.expm1(lratio)

    @property
    def mean_finite(self):
        return self.alpha > 1.0 or (self.alpha == 1.0 and self.gamma > 1.0)

    def mean(self):
        if not self.mean_finite:
            return math.inf
        if self._mean is None:
            self._mean = self.weight * tail_sum(self._g, 1, self._g_log)
        return self._mean

    def sum_ge(self, K):
        if not self.mean_finite:
            return np.full(np.shape(K), math.inf)
        K = np.atleast_1d(np.asarray(K, dtype=np.int64))
        out = np.array([self.weight * tail_sum(self._g, k, self._g_log) for k in K.ravel()])
        return out.reshape(K.shape)

    def describe(self):
        return {"kind": self.kind, "alpha": self.alpha, "gamma": self.gamma,
                "weight": self.weight}


# --------------------------------------------------------------------------
# specs


@dataclass(frozen=True)
class FamilySpec:
    """Declarative description of a law; the JSON form is its ``to_dict``.

    ``p`` is the share of ``tail_mass`` placed on the right side.  For the
    pure two-sided Pareto family it is also the tail-balance constant; for
    log-corrected sides with unequal damping the tail balance is derived
    (see ``IncrementLaw.tail_balance``).
    """

    family: str
    alpha: float | None = None
    p: float = 0.5
    window: tuple = (-1000, 1000)
    centering: str = "zero_mean"
    log_correction: bool = False
    alpha_left: float | None = None
    log_power: tuple = (1.0, 1.0)  # (left, right) damping exponents
    tail_mass: float = 0.5
    pmf: tuple | None = None  # ((x, mass), ...) for bounded / custom

    def to_dict(self):
        d = asdict(self)
        d["window"] = list(self.window)
        d["log_power"] = list(self.log_power)
        if self.pmf is not None:
            d["pmf"] = {str(int(x)): float(m) for x, m in self.pmf}
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @property
    def content_hash(self):
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, d, where="law"):
        if not isinstance(d, dict):
            raise ConfigError(f"{where}: expected an object")
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"{where}.{sorted(extra)[0]}: unknown field")
        fam = d.get("family")
        if fam == "pareto":
            fam = "pareto_two_sided"
        if fam not in FAMILIES:
            raise ConfigError(f"{where}.family: must be one of {FAMILIES}, got {fam!r}")
        kw = {"family": fam}
        for key in ("alpha", "alpha_left"):
            if d.get(key) is not None:
                v = d[key]
                if not isinstance(v, (int, float)) or isinstance(v, bool) or not v > 0:
                    raise ConfigError(f"{where}.{key}: must be a number > 0")
                kw[key] = float(v)
        if "p" in d:
            v = d["p"]
            if not isinstance(v, (int, float)) or not 0.0 <= v <= 1.0:
                raise ConfigError(f"{where}.p: must be in [0, 1]")
            kw["p"] = float(v)
        if "tail_mass" in d:
            v = d["tail_mass"]
            if not isinstance(v, (int, float)) or not 0.0 < v <= 1.0:
                raise ConfigError(f"{where}.tail_mass: must be in (0, 1]")
            kw["tail_mass"] = float(v)
        if "window" in d:
            w = d["window"]
            if (not isinstance(w, (list, tuple)) or len(w) != 2
                    or not all(isinstance(a, int) for a in w) or not w[0] < 0 < w[1]):
                raise ConfigError(f"{where}.window: must be [lo, hi] integers with lo < 0 < hi")
            kw["window"] = (int(w[0]), int(w[1]))
        if "centering" in d:
            if d["centering"] not in ("zero_mean", "none"):
                raise ConfigError(f"{where}.centering: must be 'zero_mean' or 'none'")
            kw["centering"] = d["centering"]
        if "log_correction" in d:
            if not isinstance(d["log_correction"], bool):
                raise ConfigError(f"{where}.log_correction: must be a boolean")
            kw["log_correction"] = d["log_correction"]
        if "log_power" in d:
            lp = d["log_power"]
            if isinstance(lp, (int, float)):
                lp = [lp, lp]
            if not isinstance(lp, (list, tuple)) or len(lp) != 2 or min(lp) < 0:
                raise ConfigError(f"{where}.log_power: must be [left, right] with entries >= 0")
            kw["log_power"] = (float(lp[0]), float(lp[1]))
        if d.get("pmf") is not None:
            pm = d["pmf"]
            try:
                items = tuple(sorted((int(x), float(m)) for x, m in pm.items()))
            except (AttributeError, TypeError, ValueError):
                raise ConfigError(f"{where}.pmf: must map integer sites to masses") from None
            if any(m < 0 for _, m in items):
                raise ConfigError(f"{where}.pmf: masses must be >= 0")
            kw["pmf"] = items
        if fam in ("pareto_two_sided", "pareto_log_corrected") and "alpha" not in kw:
            raise ConfigError(f"{where}.alpha: required for family {fam}")
        if fam in ("bounded", "custom") and "pmf" not in kw:
            raise ConfigError(f"{where}.pmf: required for family {fam}")
        return cls(**kw)

    @classmethod
    def from_json(cls, text):
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"law: invalid JSON ({exc})") from None
        return cls.from_dict(d)


def _bounded(pmf, **kw):
    return FamilySpec(family="bounded", pmf=tuple(sorted(pmf.items())), **kw)


# Families used throughout tests and the acceptance suite.
PRESETS = {
    "srw": FamilySpec(family="srw"),
    "lazy_srw": _bounded({-1: 0.25, 0: 0.5, 1: 0.25}),
    "skip_down": _bounded({-2: 1 / 3, 1: 2 / 3}),
    "skip_up": _bounded({-1: 2 / 3, 2: 1 / 3}),
    "three_point": _bounded({-3: 1 / 3, 1: 1 / 3, 2: 1 / 3}),
    # Case II, alpha = 1.5, balanced tails
    "case2": FamilySpec(family="pareto_two_sided", alpha=1.5, p=0.5),
    # alpha = 1.5 with only a right tail: rho = 1 - 1/alpha
    "case2_right": FamilySpec(family="pareto_two_sided", alpha=1.5, p=1.0, tail_mass=0.25),
    # (C4): alpha = 0.6 right tail, left tail of the same index damped by a log
    "c4": FamilySpec(family="pareto_log_corrected", alpha=0.6, p=0.5,
                     log_correction=True, log_power=(1.0, 0.0), centering="none"),
    # Case III: mirror image of c4
    "case3": FamilySpec(family="pareto_log_corrected", alpha=0.6, p=0.5,
                        log_correction=True, log_power=(0.0, 1.0), centering="none"),
    # (C3): alpha = 1, p < 1/2, EX = 0
    "c3": FamilySpec(family="pareto_log_corrected", alpha=1.0, p=0.3,
                     log_correction=True, log_power=(1.5, 1.5), tail_mass=0.3),
}


# --------------------------------------------------------------------------
# the law


@dataclass(frozen=True, eq=False)
class IncrementLaw:
    spec: FamilySpec
    core_sites: np.ndarray
    core_mass: np.ndarray
    right: object = None
    left: object = None
    window: tuple = (-1000, 1000)
    warnings: tuple = field(default=())
    mirrored: bool = False

    # -- exact pointwise functions (integer arguments) --------------------

    def pmf(self, k):
        """P[X = k] for an integer array ``k``."""
        k = np.asarray(k, dtype=np.int64)
        out = np.zeros(k.shape)
        for s, m in zip(self.core_sites, self.core_mass):
            out[k == s] += m
        if self.right is not None:
            pos = k >= 1
            out[pos] += self.right.pmf(k[pos])
        if self.left is not None:
            neg = k <= -1
            out[neg] += self.left.pmf(-k[neg])
        return out

    def _core_ge(self, k):
        """Core mass on sites >= k."""
        cs = np.concatenate(([0.0], np.cumsum(self.core_mass[::-1])))[::-1]
        idx = np.searchsorted(self.core_sites, k, side="left")
        return cs[idx]

    def _upper_pos(self, k):
        return self._side_ge(self.right, k) + self._core_ge(k)

    def _lower_neg(self, k):
        return self._side_ge(self.left, -k) + (np.sum(self.core_mass) - self._core_ge(k + 1))

    def upper(self, k):
        """P[X >= k] for integer ``k`` (any sign)."""
        k = np.asarray(k, dtype=np.int64)
        return np.where(k >= 1, self._upper_pos(np.maximum(k, 1)),
                        1.0 - self._lower_neg(np.minimum(k - 1, -1)))

    def lower(self, k):
        """P[X <= k] for integer ``k`` (any sign)."""
        k = np.asarray(k, dtype=np.int64)
        return np.where(k <= -1, self._lower_neg(np.minimum(k, -1)),
                        1.0 - self._upper_pos(np.maximum(k + 1, 1)))

    @staticmethod
    def _side_ge(side, k):
        if side is None:
            return np.zeros(np.shape(k))
        return side.ge(k)

    # -- real-argument tails ------------------------------------------------

    def right_tail(self, x):
        """P[X > x] for real x >= 0."""
        x = np.asarray(x, dtype=float)
        return self.upper(np.floor(x).astype(np.int64) + 1)

    def left_tail(self, x):
        """P[X < -x] for real x >= 0."""
        x = np.asarray(x, dtype=float)
        return self.lower(-np.floor(x).astype(np.int64) - 1)

    # -- tabulation ----------------------------------------------------------

    @cached_property
    def pmf_window(self):
        lo, hi = self.window
        return self.pmf(np.arange(lo, hi + 1))

    @property
    def total_mass(self):
        lo, hi = self.window
        return float(np.sum(self.pmf_window) + self.upper(np.array([hi + 1]))[0]
                     + self.lower(np.array([lo - 1]))[0])

    @property
    def support_bounds(self):
        """(min, max) of the support; infinite on heavy sides."""
        lo = -math.inf if self.left is not None else int(self.core_sites[self.core_mass > 0].min())
        hi = math.inf if self.right is not None else int(self.core_sites[self.core_mass > 0].max())
        return lo, hi

    @property
    def bounded(self):
        return self.left is None and self.right is None

    @property
    def law_hash(self):
        return self.spec.content_hash + ("-neg" if self.mirrored else "")

    def mirror(self):
        """The law of -X."""
        lo, hi = self.window
        return IncrementLaw(spec=self.spec, core_sites=-self.core_sites[::-1].copy(),
                            core_mass=self.core_mass[::-1].copy(), right=self.left,
                            left=self.right, window=(-hi, -lo), warnings=self.warnings,
                            mirrored=not self.mirrored)

    @property
    def family(self):
        return self.spec.family

    # -- moments and tail descriptors ---------------------------------------

    @property
    def positive_mean(self):
        """E[X; X > 0]."""
        m = float(np.sum(np.clip(self.core_sites, 0, None) * self.core_mass))
        if self.right is not None:
            m += self.right.mean()
        return m

    @property
    def negative_mean(self):
        """E[|X|; X < 0]."""
        m = float(np.sum(np.clip(-self.core_sites, 0, None) * self.core_mass))
        if self.left is not None:
            m += self.left.mean()
        return m

    @property
    def mean_finite(self):
        return math.isfinite(self.positive_mean) and math.isfinite(self.negative_mean)

    @property
    def mean(self):
        if not self.mean_finite:
            raise CapabilityError("E|X| = inf: the mean does not exist")
        return self.positive_mean - self.negative_mean

    @property
    def variance_finite(self):
        return all(s is None or s.alpha > 2.0 for s in (self.left, self.right))

    @property
    def alpha(self):
        """Tail index of the heavier side (2 for finite variance)."""
        idx = [s.alpha for s in (self.left, self.right) if s is not None]
        return min(min(idx), 2.0) if idx else 2.0

    @property
    def tail_balance(self):
        """(p, q) = lim (P[X>x], P[X<-x]) / H(x)."""
        r, l = self.right, self.left
        if r is None and l is None:
            return (math.nan, math.nan)
        if l is None:
            return (1.0, 0.0)
        if r is None:
            return (0.0, 1.0)
        if r.alpha != l.alpha:
            return (1.0, 0.0) if r.alpha < l.alpha else (0.0, 1.0)
        if r.gamma != l.gamma:
            return (1.0, 0.0) if r.gamma < l.gamma else (0.0, 1.0)
        if r.kind != l.kind:
            # zeta side: P[J >= k] ~ c k^-alpha / alpha; log side: w k^-alpha
            cr = r.c / r.alpha if r.kind == "zeta" else r.weight
            cl = l.c / l.alpha if l.kind == "zeta" else l.weight
        else:
            cr, cl = (r.c, l.c) if r.kind == "zeta" else (r.weight, l.weight)
        return (cr / (cr + cl), cl / (cr + cl))

    def tails(self, x):
        """(P[X > x], P[X < -x], H(x)) for real x >= 0."""
        if np.any(np.asarray(x) < 0):
            raise ConfigError("tails: x must be >= 0")
        r = self.right_tail(x)
        l = self.left_tail(x)
        return r, l, r + l

    def describe(self):
        return {
            "family": self.family,
            "law_hash": self.law_hash,
            "core": {int(s): float(m) for s, m in zip(self.core_sites, self.core_mass)},
            "right": None if self.right is None else self.right.describe(),
            "left": None if self.left is None else self.left.describe(),
            "total_mass": self.total_mass,
            "alpha": self.alpha,
            "tail_balance": list(self.tail_balance),
            "mean": self.mean if self.mean_finite else None,
            "warnings": list(self.warnings),
        }


# --------------------------------------------------------------------------
# construction


def _make_side(spec, alpha, weight, gamma):
    if weight <= 0:
        return None
    if spec.family == "pareto_log_corrected" and spec.log_correction:
        return LogSide(alpha, weight, gamma)
    if spec.family == "pareto_log_corrected":
        return LogSide(alpha, weight, 0.0)
    return ZetaSide(alpha, weight)


def build_law(spec):
    """Construct an ``IncrementLaw`` from a ``FamilySpec`` (or preset name,
    or a dict in the JSON schema)."""
    if isinstance(spec, str):
        if spec not in PRESETS:
            raise ConfigError(f"law: unknown preset {spec!r}")
        spec = PRESETS[spec]
    elif isinstance(spec, dict):
        spec = FamilySpec.from_dict(spec)
    notes = []
    right = left = None
    if spec.family == "srw":
        sites, mass = np.array([-1, 1]), np.array([0.5, 0.5])
    elif spec.family in ("bounded", "custom"):
        if not spec.pmf:
            raise ConfigError("law.pmf: required for bounded/custom families")
        sites = np.array([x for x, _ in spec.pmf], dtype=np.int64)
        mass = np.array([m for _, m in spec.pmf], dtype=float)
        keep = mass > 0
        sites, mass = sites[keep], mass[keep]
    else:
        a_r = spec.alpha
        a_l = spec.alpha_left if spec.alpha_left is not None else spec.alpha
        W = spec.tail_mass
        gl, gr = spec.log_power
        right = _make_side(spec, a_r, spec.p * W, gr)
        left = _make_side(spec, a_l, (1.0 - spec.p) * W, gl)
        core = 1.0 - W
        if spec.centering == "zero_mean":
            mr = right.mean() if right is not None else 0.0
            ml = left.mean() if left is not None else 0.0
            if not (math.isfinite(mr) and math.isfinite(ml)):
                raise ConstructionError("law.centering: zero_mean requested but E|X| = inf")
            mu = mr - ml
            if abs(mu) > core:
                raise ConstructionError(
                    f"law.tail_mass: centering needs |tail mean| = {abs(mu):.4g} <= "
                    f"core mass {core:.4g}; lower tail_mass")
            a_plus, a_minus = (core - mu) / 2.0, (core + mu) / 2.0
        else:
            a_plus = a_minus = core / 2.0
        sites = np.array([-1, 1], dtype=np.int64)
        mass = np.array([a_minus, a_plus])
        keep = mass > 0
        sites, mass = sites[keep], mass[keep]

    order = np.argsort(sites)
    law = IncrementLaw(spec=spec, core_sites=sites[order], core_mass=mass[order],
                       right=right, left=left, window=tuple(spec.window))

    defect = abs(1.0 - law.total_mass)
    if defect > MASS_TOL:
        raise ConstructionError(f"law: total mass defect {defect:.3e} exceeds {MASS_TOL:g}")

    pos = law.right is not None or np.any(law.core_sites > 0)
    neg = law.left is not None or np.any(law.core_sites < 0)
    g = 1 if (law.right or law.left) else reduce(math.gcd, (abs(int(s)) for s in law.core_sites))
    if not (pos and neg) or g != 1:
        raise IrreducibilityError(
            f"law: support does not generate Z (gcd={g}, positive={pos}, negative={neg})")

    if law.mean_finite and abs(law.mean) > MEAN_TOL:
        notes.append(f"mean {law.mean:.3g} != 0: the walk drifts and does not oscillate")
    for n in notes:
        warnings.warn(n, RuntimeWarning, stacklevel=2)
    object.__setattr__(law, "warnings", tuple(notes))
    return law


# --------------------------------------------------------------------------
# tail functionals


class TailFunctionals:
    """H, A, eta_+-, m_+- of a law, exact on the lattice.

    All tails are step functions of t constant on [k, k+1), so integrals
    reduce to partial sums of ``upper``/``lower`` plus a linear piece.
    """

    def __init__(self, law):
        self.law = law

    def _r(self, j):
        return self.law.upper(j)  # P[X > t] on t in [j-1, j)

    def _l(self, j):
        return self.law.lower(-j)  # P[X < -t] on t in [j-1, j)

    def H(self, x):
        return self.law.tails(x)[2]

    def _integral(self, cell, x):
        """int_0^x cell(floor(t)+1) dt."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        n = int(np.floor(x.max())) + 1
        vals = cell(np.arange(1, n + 1))
        cs = np.concatenate(([0.0], np.cumsum(vals)))
        fl = np.floor(x).astype(np.int64)
        return cs[fl] + (x - fl) * vals[fl]

    def A(self, x):
        """int_0^x [P[X > t] - P[X < -t]] dt."""
        return self._integral(lambda j: self._r(j) - self._l(j), x)

    def _side_sum(self, side, K):
        """Sum_{j >= K} P[X > j-1] restricted to one side's heavy part."""
        if side is None:
            return np.zeros(np.shape(K))
        return side.sum_ge(K)

    def _need(self, which):
        law = self.law
        if which == "+" and not math.isfinite(law.positive_mean):
            raise CapabilityError("eta_+/m_+ need E[X; X > 0] < inf, which diverges for this law")
        if which == "-" and not math.isfinite(law.negative_mean):
            raise CapabilityError("eta_-/m_- need E[|X|; X < 0] < inf, which diverges for this law")

    def _eta(self, x, sign):
        self._need(sign)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        fl = np.floor(x).astype(np.int64)
        cell = self._r if sign == "+" else self._l
        side = self.law.right if sign == "+" else self.law.left
        # cells j >= 2 carry no core mass, only the heavy side
        rest = self._side_sum(side, fl + 2)
        return (fl + 1 - x) * cell(fl + 1) + rest

    def eta_plus(self, x):
        """int_x^inf P[X > t] dt."""
        return self._eta(x, "+")

    def eta_minus(self, x):
        """int_x^inf P[X < -t] dt."""
        return self._eta(x, "-")

    def eta(self, x):
        return self.eta_plus(x) + self.eta_minus(x)

    def _m(self, x, sign):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        n = int(np.floor(x.max())) + 1
        j = np.arange(0, n + 1, dtype=float)
        eta_int = self._eta(j, sign)  # eta at integer points
        cell = self._r if sign == "+" else self._l
        # on [k, k+1): eta(t) = eta(k+1) + (k+1-t) P-cell(k+1)
        c = cell(np.arange(1, n + 2))
        per_cell = eta_int[1:] + 0.5 * c[:n]
        cs = np.concatenate(([0.0], np.cumsum(per_cell)))
        fl = np.floor(x).astype(np.int64)
        th = x - fl
        part = th * eta_int[fl + 1] + c[fl] * (th - 0.5 * th * th)
        return cs[fl] + part

    def m_plus(self, x):
        return self._m(x, "+")

    def m_minus(self, x):
        return self._m(x, "-")

    def m(self, x):
        return self.m_plus(x) + self.m_minus(x)


def tail_functionals(law):
    return TailFunctionals(law)


def tails(law, x):
    return law.tails(x)


def oscillation_diagnostic(law, xs):
    """Partial sums of the growth integrals that decide oscillation.

    Returns ``(J_minus, J_plus)`` evaluated at each cutoff in ``xs``, where
    J_minus(x) = sum_{1<=k<=x} k / A_+(k) P[X = -k] with A_+(k) the integral of
    P[X > s] over [0, k], and J_plus the mirror image.  Divergence of both
    (unbounded growth along ``xs``) is what oscillation requires; this is
    evidence only.
    """
    xs = np.asarray(xs, dtype=np.int64)
    n = int(xs.max())
    k = np.arange(1, n + 1)
    tf = TailFunctionals(law)
    a_plus = tf._integral(lambda j: law.upper(j), k.astype(float))
    a_minus = tf._integral(lambda j: law.lower(-j), k.astype(float))
    jm = np.cumsum(k / a_plus * law.pmf(-k))
    jp = np.cumsum(k / a_minus * law.pmf(k))
    return jm[xs - 1], jp[xs - 1]
