"""Ladder height laws and the constant v0.

Two routes to each object:

* first passage: the Green function of the walk started at 0 and killed on
  [1, inf) (and below -N) solves a Toeplitz system; P[Z = m] is its
  correlation with the pmf.  Entries are lower bounds, increasing in N.
* Wiener-Hopf: alternate P[Z = x] = sum_y v_d(y) p(x + y) and
  P[-Zhat = x] = v0 sum_y u_a(y) p(-x - y), rebuilding the renewal
  sequences in between.

v0 = exp(sum_k P[S_k = 0] / k) is computed from the characteristic
function of the law folded onto a cycle of length L.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, linalg, special
from scipy.signal import fftconvolve

from .errors import ConfigError, ConvergenceError, NumericError
from .kernels import renewal

DENSE_LIMIT = 2000


# --------------------------------------------------------------------------
# helpers


def correlate(v, p, n_out):
    """c[x] = sum_y v[y] p[x + y] for x = 0..n_out-1 (needs len(p) >= n_out + len(v) - 1)."""
    v = np.asarray(v, dtype=float)
    p = np.asarray(p, dtype=float)
    L = len(v)
    nz = np.flatnonzero(p[:n_out + L - 1])
    if len(nz) <= 64:
        # short support: exact sum over the nonzero p entries
        c = np.zeros(n_out)
        for j in nz:
            x = np.arange(max(0, j - L + 1), min(n_out, j + 1))
            c[x] += p[j] * v[j - x]
        return c
    if L * n_out <= 1 << 22:
        return np.array([np.dot(v, p[x:x + L]) for x in range(n_out)])
    r = fftconvolve(p[:n_out + L - 1], v[::-1])
    return r[L - 1:L - 1 + n_out]


@dataclass(frozen=True)
class PowerLogFit:
    """log u(y) ~ a + s log(y/M) + c (M/y - 1) fitted on [M/8, M]."""

    a: float
    s: float
    c: float
    M: int

    @classmethod
    def fit(cls, u, M=None):
        u = np.asarray(u, dtype=float)
        M = len(u) - 1 if M is None else int(M)
        lo = max(M // 8, 1)
        y = np.arange(lo, M + 1, dtype=float)
        seg = u[lo:M + 1]
        if M < 16 or np.any(seg <= 0):
            return cls(-math.inf, 0.0, 0.0, M)
        X = np.column_stack([np.ones_like(y), np.log(y / M), M / y - 1.0])
        a, s, c = np.linalg.lstsq(X, np.log(seg), rcond=None)[0]
        return cls(float(a), float(min(max(s, -1.0), 1.0)), float(c), M)

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        if not math.isfinite(self.a):
            return np.zeros_like(y)
        return np.exp(self.a + self.s * np.log(y / self.M) + self.c * (self.M / y - 1.0))


def _side(law, sign):
    return law.right if sign > 0 else law.left


def closed_correlation(law, u, sign, n_out, ext=3):
    """c[x] = sum_{y >= 0} u(y) p(sign (x + y)) for x = 0..n_out-1 with ``u``
    extended past its end by a ``PowerLogFit``.

    Returns (c, total) where total = sum_y u(y) P[sign X > y], the mass of the
    corresponding ladder law before the factor v0 (or 1).
    """
    M = len(u) - 1
    fb = PowerLogFit.fit(u)
    E = ext * M
    ue = np.concatenate([u, fb(np.arange(M + 1, E + 1))])
    k = np.arange(0, E + n_out + 1)
    p = law.pmf(sign * k)
    p[0] = 0.0
    c = correlate(ue, p, n_out)
    tail_idx = np.arange(1, E + 2)
    G = law.upper(tail_idx) if sign > 0 else law.lower(-tail_idx)
    total = float(np.dot(ue, G))
    hs = _side(law, sign)
    if hs is not None and math.isfinite(fb.a):
        xs = np.arange(n_out, dtype=float)
        a, b = math.log(E + 0.5), math.log(E + 0.5) + 50.0

        def fc(t):
            y = math.exp(t)
            return fb(y) * y * hs.pmf(xs + y)

        def fm(t):
            y = math.exp(t)
            return float(fb(y) * y * hs.ge(y + 0.5))

        c = c + integrate.quad_vec(fc, a, b, epsrel=1e-10, epsabs=0.0)[0]
        total += integrate.quad(fm, a, b, epsrel=1e-12, epsabs=0.0, limit=200)[0]
    return c, total


# --------------------------------------------------------------------------
# the ladder law object


@dataclass(frozen=True)
class LadderLaw:
    """Strict ladder height laws on 1..M (index 0 unused) and v0."""

    z_pmf: np.ndarray
    zhat_pmf: np.ndarray
    v0: float
    truncation_defect: tuple
    law_hash: str = ""
    method: str = ""
    info: dict = field(default_factory=dict, compare=False)

    @property
    def horizon(self):
        return len(self.z_pmf) - 1

    def z_survival(self, n):
        """P[Z > t] for t in [j, j+1), j = 0..n-1 (returned as an array)."""
        cs = np.cumsum(self.z_pmf)
        return np.clip(1.0 - cs[:n], 0.0, None)

    def to_csv(self, path):
        m = np.arange(1, self.horizon + 1)
        hdr = (f"law_hash={self.law_hash} v0={float(self.v0)!r} "
               f"defect_z={float(self.truncation_defect[0])!r} "
               f"defect_zhat={float(self.truncation_defect[1])!r} method={self.method}")
        with open(path, "w") as fh:
            fh.write("# " + hdr + "\n")
            fh.write("m,z_mass,zhat_mass\n")
            for i, a, b in zip(m, self.z_pmf[1:], self.zhat_pmf[1:]):
                fh.write(f"{i},{float(a)!r},{float(b)!r}\n")

    @classmethod
    def from_csv(cls, path):
        with open(path) as fh:
            head = fh.readline()[2:].split()
        meta = dict(kv.split("=", 1) for kv in head)
        data = np.loadtxt(path, delimiter=",", skiprows=2, ndmin=2)
        z = np.concatenate([[0.0], data[:, 1]])
        zh = np.concatenate([[0.0], data[:, 2]])
        return cls(z, zh, float(meta["v0"]),
                   (float(meta["defect_z"]), float(meta["defect_zhat"])),
                   meta.get("law_hash", ""), meta.get("method", ""))


@dataclass(frozen=True)
class PassageLaw:
    """Output of ``first_passage_up``/``first_passage_down``."""

    pmf: np.ndarray  # index m = 0..M, pmf[0] = 0
    defect: float  # 1 - sum(pmf)
    lost: float  # mass killed below -N
    depth: int
    green: np.ndarray  # G(0, -y), y = 0..N


# --------------------------------------------------------------------------
# first passage


def _toeplitz_solve(c, r, b, rtol=1e-12):
    n = len(b)
    if n <= DENSE_LIMIT:
        A = linalg.toeplitz(c, r)
        x = linalg.lu_solve(linalg.lu_factor(A, check_finite=False), b, check_finite=False)
        res = A @ x - b
    else:
        x = linalg.solve_toeplitz((c, r), b, check_finite=False)
        for _ in range(3):
            res = linalg.matmul_toeplitz((c, r), x, check_finite=False) - b
            if np.max(np.abs(res)) <= rtol * np.max(np.abs(b)):
                break
            x = x - linalg.solve_toeplitz((c, r), res, check_finite=False)
        res = linalg.matmul_toeplitz((c, r), x, check_finite=False) - b
    rel = float(np.max(np.abs(res)) / np.max(np.abs(b)))
    if rel > rtol:
        raise NumericError(f"Toeplitz solve residual {rel:.2e} above {rtol:g}")
    return x


def halfline_green(law, N, closure=False):
    """G(0, -y), y = 0..N, for the walk from 0 killed on [1, inf) and below -N.

    Solves v(y) = 1{y=0} + sum_{y'=0..N} v(y') p(y' - y).  With ``closure``
    (bounded laws only) the walk is not killed below -N; instead v is held
    at v(N) past the edge, which is exact up to the geometric convergence
    of the renewal sequence.
    """
    N = int(N)
    if N < 0:
        raise ConfigError("depth N must be >= 0")
    k = np.arange(0, N + 1)
    c = -law.pmf(-k)
    r = -law.pmf(k)
    c[0] += 1.0
    r[0] = c[0]
    b = np.zeros(N + 1)
    b[0] = 1.0
    if not closure:
        return _toeplitz_solve(c, r, b)
    if not law.bounded:
        raise ConfigError("closure needs a law with bounded support")
    # A' = T - w e_N^T, w(y) = P[X >= N - y + 1]
    w = law.upper(N - k + 1)
    if N + 1 <= DENSE_LIMIT:
        A = linalg.toeplitz(c, r)
        A[:, N] -= w
        x = linalg.lu_solve(linalg.lu_factor(A, check_finite=False), b, check_finite=False)
        res = float(np.max(np.abs(A @ x - b)))
        if res > 1e-12:
            raise NumericError(f"closure solve residual {res:.2e}")
        return x
    xb = _toeplitz_solve(c, r, b)
    xw = _toeplitz_solve(c, r, w) if np.any(w) else np.zeros_like(w)
    return xb + xw * xb[N] / (1.0 - xw[N])


def _first_passage(law, N, M, closure=False):
    if M < 1:
        raise ConfigError("horizon M must be >= 1")
    v = halfline_green(law, N, closure)
    k = np.arange(0, M + N + 1)
    p = law.pmf(k)
    z = np.zeros(M + 1)
    z[1:] = correlate(v, p[1:], M)
    y = np.arange(0, N + 1)
    total = float(np.dot(v, law.upper(y + 1)))
    if closure:
        # beyond -N the constant v(N) meets P[X >= y + 1] = 0 past the support
        ext = np.arange(N + 1, N + 1 + max(int(law.support_bounds[1]), 0))
        total += float(v[N] * law.upper(ext + 1).sum())
    return PassageLaw(z, float(1.0 - z.sum()), float(1.0 - total), int(N), v)


def first_passage_up(law, N, M, closure=False):
    """Law of Z on 1..M from the depth-N killed system."""
    return _first_passage(law, N, M, closure)


def first_passage_down(law, N, M, closure=False):
    """Law of -Zhat on 1..M (mirror image of ``first_passage_up``)."""
    return _first_passage(law.mirror(), N, M, closure)


def first_passage_adaptive(law, M, tol=1e-8, N0=256, N_max=2 ** 15, down=False):
    """Double N until no entry of the pmf moves by more than tol/10.

    Bounded laws use the closed system, which converges geometrically in N.
    """
    fn = first_passage_down if down else first_passage_up
    closure = law.bounded
    prev = fn(law, N0, M, closure)
    N = N0
    while N < N_max:
        N *= 2
        cur = fn(law, N, M, closure)
        change = float(np.max(np.abs(cur.pmf - prev.pmf)))
        if change < tol / 10:
            return cur
        prev = cur
    raise ConvergenceError(f"first passage: entries still moving by {change:.2e} at N={N}",
                           last=change)


# --------------------------------------------------------------------------
# v0


@dataclass(frozen=True)
class V0Estimate:
    value: float
    route: str
    partial: float = math.nan  # exp of the K-term partial sum
    last_terms: float = math.nan  # sum of the last ten series terms
    remainder: float = math.nan  # log v0 minus the K-term partial sum
    error: float = math.nan  # convergence indicator of the route
    lower: float = math.nan  # a guaranteed lower bound, when the route has one
    warning: str = ""

    def __float__(self):
        return float(self.value)


def _side_fold(side, a, L):
    """sum_{m >= 0} P[J = a + m L] for a >= L/2."""
    if side is None:
        return np.zeros_like(a)
    if side.kind == "zeta":
        return side.c * float(L) ** (-1.0 - side.alpha) * special.zeta(1.0 + side.alpha, a / L)
    out = np.zeros_like(a)
    for m in range(4):
        out += side.pmf(a + m * L)
    b = a + 4.0 * L
    # Euler-Maclaurin in m: int_b^inf pmf(x) dx / L = int_b^{b+1} ge / L
    xg, wg = np.polynomial.legendre.leggauss(12)
    integ = sum(w * 0.5 * side.ge(b + 0.5 * (x + 1.0)) for x, w in zip(xg, wg))
    h = 1e-3 * b
    fp = (side.pmf(b + h) - side.pmf(b - h)) / (2 * h)
    return out + integ / L + 0.5 * side.pmf(b) - L * fp / 12.0


def folded_pmf(law, L):
    """P[X = j mod L], j = 0..L-1."""
    L = int(L)
    r = np.arange(-(L // 2), L - L // 2)
    q = law.pmf(r)
    lo, hi = law.support_bounds
    if (math.isfinite(lo) and lo < r[0]) or (math.isfinite(hi) and hi > r[-1]):
        raise ConfigError("cycle length L too small for the bounded support")
    q = q + _side_fold(law.right, (r + L).astype(float), L) * (r + L > r[-1])
    q = q + _side_fold(law.left, (L - r).astype(float), L) * (L - r > -r[0])
    out = np.zeros(L)
    out[r % L] = q
    return out


def log_v0_cycle(law, L):
    """log v0 from the cycle of length L, with the j -> 0 singularity of
    log(1 - phi) removed analytically."""
    q = folded_pmf(law, L)
    phi = np.fft.fft(q)
    with np.errstate(divide="ignore"):
        lg = np.log(1.0 - phi)
    j = np.arange(1, 3)
    th = 2 * np.pi * j / L
    lp, lm = lg[j], lg[L - j]
    a_eff = float(np.real(lp[1] - lp[0]) / math.log(2.0))
    sl = np.log(np.abs(2 * np.sin(th / 2)))
    Rp, Rm = lp - a_eff * sl, lm - a_eff * sl
    R0 = 0.5 * ((2 * Rp[0] - Rp[1]) + (2 * Rm[0] - Rm[1]))
    # sum_{j=1}^{L-1} log|2 sin(pi j / L)| = log L
    s = (lg[1:].sum() - a_eff * math.log(L) + R0) / L
    return float(-np.real(s)), phi


def v0_series(law, K=10_000, L=2 ** 20, tol=1e-7):
    """v0 = exp(sum_{k >= 1} P[S_k = 0] / k).

    The first K terms are summed explicitly, P[S_k = 0] being the k-fold
    circular self-convolution of the folded pmf (powers of its DFT).  The
    remainder past K comes from the closed-form log(1 - phi) sum, so the
    value is the full series; ``last_terms`` reports the size of the final
    ten explicit terms and ``error`` the change from halving L.
    """
    if K < 1:
        raise ConfigError("v0_series: K must be >= 1")
    total, phi = log_v0_cycle(law, L)
    half, _ = log_v0_cycle(law, L // 2)
    err = abs(total - half)
    # explicit partial sum; frequencies with |phi|^K negligible contribute
    # their full -log(1 - phi)
    ph = phi[1:]
    with np.errstate(divide="ignore"):
        live = K * np.log(np.maximum(np.abs(ph), 1e-300)) > -45.0
    dead = -np.log(1.0 - ph[~live])
    ph = ph[live]
    acc = np.zeros_like(ph)
    pw = np.ones_like(ph)
    last = 0.0
    h0 = 0.0
    for k in range(1, K + 1):
        pw = pw * ph
        acc += pw / k
        h0 += 1.0 / k
        if k > K - 10:
            last += (1.0 + float(np.real(pw.sum()))) / (k * L)
    partial = float((h0 + np.real(acc.sum()) + np.real(dead.sum())) / L)
    msg = ""
    if err > tol:
        msg = f"v0 series: cycle-length change {err:.2e} above tol {tol:g}"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return V0Estimate(math.exp(total), "series", partial=math.exp(partial),
                      last_terms=float(last), remainder=total - partial,
                      error=math.exp(total) * err, warning=msg)


def v0_entrance(law, N=2 ** 14):
    """v0 = 1 / P[S at first entrance to [0, inf) is > 0] = G(0, 0) for the
    walk killed on [1, inf).

    The depth-N value is a lower bound; the reported value is its Aitken
    extrapolation from depths N/4, N/2, N (or the closed system for bounded
    laws).
    """
    if N < 4:
        raise ConfigError("v0_entrance: N must be >= 4")
    if law.bounded:
        lower = halfline_green(law, N)[0]
        val = halfline_green(law, N, closure=True)[0]
        return V0Estimate(float(val), "entrance", lower=float(lower),
                          error=float(abs(val - halfline_green(law, N // 2, closure=True)[0])))
    g = [halfline_green(law, n)[0] for n in (N // 4, N // 2, N)]
    a, b, c = g
    d1, d2 = c - b, b - a
    if abs(d1) < 1e-15 or abs(d2 - d1) < 1e-300 or d1 * d2 <= 0:
        val = c
    else:
        val = c - d1 * d1 / (d1 - d2)
    return V0Estimate(float(val), "entrance", lower=float(c), error=float(abs(val - c)))


def v0_value(law, L=2 ** 20):
    """Series-route v0 without the explicit partial sum (used internally)."""
    return math.exp(log_v0_cycle(law, L)[0])


# --------------------------------------------------------------------------
# Wiener-Hopf iteration


def wiener_hopf_iterate(law, M, tol=1e-12, v0=None, max_iter=200, ext=3):
    """Alternate the two ladder-pmf identities from v_d = v0 delta_0.

    v0 is held fixed: the closed first-entrance system for bounded laws
    (exact to rounding), the series route otherwise, unless given.  Sums beyond the horizon M
    use a power-log extrapolation of the renewal sequence.
    """
    M = int(M)
    if tol <= 0:
        raise ConfigError("tol must be > 0")
    if M < 1:
        raise ConfigError("horizon M must be >= 1")
    pin = v0 is None and law.bounded and -law.support_bounds[0] <= M
    if v0 is None:
        v0 = v0_entrance(law, 512).value if law.bounded else v0_value(law)
    v0 = float(v0)
    ud = np.zeros(M + 1)
    ud[0] = 1.0
    prev = None
    tv = math.inf

    def sweep(v0, ud):
        fz, mz = closed_correlation(law, v0 * ud, +1, M + 1, ext)
        fz[0] = 0.0
        ua = renewal(fz, M)
        hc, mh = closed_correlation(law, ua, -1, M + 1, ext)
        fzh = v0 * hc
        fzh[0] = 0.0
        return fz, mz, ua, hc, mh, fzh, renewal(fzh, M)

    for it in range(1, max_iter + 1):
        fz, mz, ua, hc, mh, fzh, ud = sweep(v0, ud)
        if prev is not None:
            tv = float(np.abs(fz - prev).sum())
            if tv < tol:
                break
        prev = fz
    else:
        raise ConvergenceError(f"Wiener-Hopf iteration: TV {tv:.3e} after {max_iter} sweeps",
                               last=tv)
    if pin:
        # the descending ladder law is proper and lies inside the horizon, so
        # its mass fixes v0 to the last bit; one more sweep carries it through
        v_new = 1.0 / math.fsum(hc[1:])
        if abs(v_new - v0) <= 1e-9 * v0:
            v0 = v_new
            fz, mz, ua, hc, mh, fzh, ud = sweep(v0, ud)
    info = {"iterations": it, "tv": tv, "ua": ua, "ud": ud,
            "mass_z": mz, "mass_zhat": v0 * mh,
            "ud_fit": PowerLogFit.fit(ud), "ua_fit": PowerLogFit.fit(ua)}
    return LadderLaw(fz, fzh, v0, (float(1.0 - fz.sum()), float(1.0 - fzh.sum())),
                     law.law_hash, "wiener_hopf", info)


def ladder_from_first_passage(law, N, M, v0=None):
    up = first_passage_up(law, N, M)
    down = first_passage_down(law, N, M)
    v0 = v0_entrance(law, N).value if v0 is None else float(v0)
    return LadderLaw(up.pmf, down.pmf, v0, (up.defect, down.defect), law.law_hash,
                     "first_passage", {"lost": (up.lost, down.lost), "depth": N})


def tv_distance(a, b):
    n = max(len(a), len(b))
    x = np.zeros(n)
    y = np.zeros(n)
    x[:len(a)] = a
    y[:len(b)] = b
    return float(np.abs(x - y).sum())
