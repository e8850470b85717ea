"""Hot loops: renewal recursion and lattice path simulation.

Every kernel has an ``@njit`` body and a numpy body with the same
arithmetic; the public wrappers pick one via ``_jit.USE_NUMBA``.
"""
import math

import numpy as np
from scipy.signal import fftconvolve

from . import _jit
from ._jit import njit

FFT_THRESHOLD = 2 ** 16
_BLOCK = 256
MAX_JUMP = float(2 ** 56)

# path status codes
ACTIVE, ABOVE, BELOW, CENSORED, DONE = 0, 1, 2, 3, 4


# --------------------------------------------------------------------------
# renewal recursion  u(0) = 1,  u(n) = sum_{k=1}^n f(k) u(n-k)


@njit
def _renewal_nb(f, N):
    K = f.shape[0] - 1
    u = np.zeros(N + 1)
    u[0] = 1.0
    for n in range(1, N + 1):
        top = n if n < K else K
        s = 0.0
        for k in range(1, top + 1):
            s += f[k] * u[n - k]
        u[n] = s
    return u


def _renewal_np(f, N):
    K = f.shape[0] - 1
    u = np.zeros(N + 1)
    u[0] = 1.0
    fr = f[1:][::-1]  # fr[-k] = f[k]
    for n in range(1, N + 1):
        top = min(n, K)
        u[n] = np.dot(fr[K - top:], u[n - top:n])
    return u


def _renewal_fft(f, N):
    """Online convolution by divide and conquer, O(N log^2 N)."""
    K = f.shape[0] - 1
    fz = np.zeros(N + 1)
    fz[1:min(K, N) + 1] = f[1:min(K, N) + 1]
    u = np.zeros(N + 1)
    u[0] = 1.0

    def leaf(lo, hi):
        # u[lo:hi] already holds contributions from indices < lo
        for n in range(max(lo, 1), hi):
            u[n] += np.dot(fz[1:n - lo + 1][::-1], u[lo:n])

    def solve(lo, hi):
        if hi - lo <= _BLOCK:
            leaf(lo, hi)
            return
        mid = (lo + hi) // 2
        solve(lo, mid)
        # add u[lo:mid] * f to u[mid:hi]
        seg = fftconvolve(u[lo:mid], fz[:hi - lo])
        u[mid:hi] += seg[mid - lo:hi - lo]
        solve(mid, hi)

    solve(0, N + 1)
    return u


def renewal(f, N, method="auto"):
    """Renewal sequence of the sub-pmf ``f`` (f[0] ignored) on 0..N."""
    f = np.ascontiguousarray(f, dtype=float)
    if f.shape[0] == 0:
        f = np.zeros(1)
    f = f.copy()
    f[0] = 0.0
    # trailing zeros only cost time
    nz = np.flatnonzero(f)
    f = f[:nz[-1] + 1] if nz.size else f[:1]
    N = int(N)
    if method == "auto":
        method = "fft" if N > FFT_THRESHOLD and f.shape[0] > 64 else "direct"
    if method == "fft":
        return _renewal_fft(f, N)
    if _jit.USE_NUMBA:
        return _renewal_nb(f, N)
    return _renewal_np(f, N)


# --------------------------------------------------------------------------
# exterior tails evaluated inside kernels

_BERN = np.array([1.0 / 6, -1.0 / 30, 1.0 / 42, -1.0 / 30, 5.0 / 66,
                  -691.0 / 2730, 7.0 / 6])
_FACT = np.array([math.factorial(2 * j) for j in range(1, 8)], dtype=float)
_EM = _BERN / _FACT


@njit
def _hzeta_nb(s, q):
    """Hurwitz zeta(s, q) for s > 1, q >= 1 by Euler-Maclaurin."""
    acc = 0.0
    while q < 12.0:
        acc += q ** (-s)
        q += 1.0
    acc += q ** (1.0 - s) / (s - 1.0) + 0.5 * q ** (-s)
    poch = s
    qp = q ** (-s - 1.0)
    for j in range(7):
        acc += _EM[j] * poch * qp
        poch *= (s + 2 * j + 1) * (s + 2 * j + 2)
        qp /= q * q
    return acc


def _hzeta_np(s, q):
    q = np.array(q, dtype=float, copy=True)
    acc = np.zeros_like(q)
    small = q < 12.0
    while np.any(small):
        acc[small] += q[small] ** (-s)
        q[small] += 1.0
        small = q < 12.0
    acc += q ** (1.0 - s) / (s - 1.0) + 0.5 * q ** (-s)
    poch = s
    qp = q ** (-s - 1.0)
    for j in range(7):
        acc += _EM[j] * poch * qp
        poch *= (s + 2 * j + 1) * (s + 2 * j + 2)
        qp = qp / (q * q)
    return acc


@njit
def _side_ge_nb(kind, alpha, gamma, coef, k):
    if kind == 1:
        return coef * _hzeta_nb(1.0 + alpha, k)
    return coef * k ** (-alpha) * (1.0 + math.log(k)) ** (-gamma)


@njit
def _side_guess_nb(kind, alpha, gamma, coef, t):
    if kind == 1:
        return 0.5 + (coef / (alpha * t)) ** (1.0 / alpha)
    # w k^-a (1 + ln k)^-g = t, Newton in y = ln k
    rhs = math.log(coef) - math.log(t)
    y = max(rhs / alpha, 0.0)
    for _ in range(40):
        fy = alpha * y + gamma * math.log(1.0 + y) - rhs
        step = fy / (alpha + gamma / (1.0 + y))
        y -= step
        if y < 0.0:
            y = 0.0
        if abs(step) < 1e-13 * (1.0 + y):
            break
    return math.exp(y)


@njit
def _side_invert_nb(kind, alpha, gamma, coef, kstart, sstart, u):
    """Largest integer k >= kstart with P[J >= k] >= u * P[J >= kstart]."""
    t = u * sstart
    g = _side_guess_nb(kind, alpha, gamma, coef, t)
    if g > MAX_JUMP:
        return MAX_JUMP
    lo = math.floor(g * (1.0 - 1e-7)) - 2.0
    if lo < kstart or _side_ge_nb(kind, alpha, gamma, coef, lo) < t:
        lo = kstart
    hi = math.ceil(g * (1.0 + 1e-7)) + 2.0
    if hi <= lo:
        hi = lo + 1.0
    while _side_ge_nb(kind, alpha, gamma, coef, hi) >= t:
        hi = 2.0 * hi
        if hi > MAX_JUMP:
            return MAX_JUMP
    while hi - lo > 1.0:
        mid = math.floor(0.5 * (lo + hi))
        if _side_ge_nb(kind, alpha, gamma, coef, mid) >= t:
            lo = mid
        else:
            hi = mid
    return lo


def _side_ge_np(kind, alpha, gamma, coef, k):
    if kind == 1:
        return coef * _hzeta_np(1.0 + alpha, k)
    return coef * k ** (-alpha) * (1.0 + np.log(k)) ** (-gamma)


def _side_invert_np(kind, alpha, gamma, coef, kstart, sstart, u):
    t = u * sstart
    if kind == 1:
        g = 0.5 + (coef / (alpha * t)) ** (1.0 / alpha)
    else:
        rhs = math.log(coef) - np.log(t)
        y = np.maximum(rhs / alpha, 0.0)
        # same iteration count as the jitted loop would take at most
        for _ in range(40):
            fy = alpha * y + gamma * np.log(1.0 + y) - rhs
            step = fy / (alpha + gamma / (1.0 + y))
            y = np.maximum(y - step, 0.0)
            if np.all(np.abs(step) < 1e-13 * (1.0 + y)):
                break
        g = np.exp(y)
    out = np.empty_like(t)
    big = g > MAX_JUMP
    out[big] = MAX_JUMP
    idx = np.flatnonzero(~big)
    g, t = g[idx], t[idx]
    lo = np.floor(g * (1.0 - 1e-7)) - 2.0
    bad = (lo < kstart)
    lo[bad] = kstart
    bad = _side_ge_np(kind, alpha, gamma, coef, lo) < t
    lo[bad] = kstart
    hi = np.ceil(g * (1.0 + 1e-7)) + 2.0
    hi = np.where(hi <= lo, lo + 1.0, hi)
    capped = np.zeros(len(idx), dtype=bool)
    while True:
        grow = (~capped) & (_side_ge_np(kind, alpha, gamma, coef, hi) >= t)
        if not np.any(grow):
            break
        hi[grow] *= 2.0
        capped |= hi > MAX_JUMP
    while np.any(hi - lo > 1.0):
        open_ = (hi - lo > 1.0) & ~capped
        if not np.any(open_):
            break
        mid = np.floor(0.5 * (lo + hi))
        ok = _side_ge_np(kind, alpha, gamma, coef, mid) >= t
        lo = np.where(open_ & ok, mid, lo)
        hi = np.where(open_ & ~ok, mid, hi)
    lo[capped] = MAX_JUMP
    out[idx] = lo
    return out


# --------------------------------------------------------------------------
# sampler tables


class Sampler:
    """Alias table over the window plus exact inversion on the two exteriors.

    Category ``j < W`` is the window site ``lo + j``; ``W`` is the right
    exterior (X > hi) and ``W + 1`` the left exterior (X < lo).
    """

    def __init__(self, law):
        lo, hi = law.window
        pw = np.asarray(law.pmf_window, dtype=float)
        rmass = float(law.upper(np.array([hi + 1]))[0])
        lmass = float(law.lower(np.array([lo - 1]))[0])
        w = np.concatenate([pw, [rmass, lmass]])
        w = w / w.sum()
        self.prob, self.alias = _build_alias(w)
        self.lo = int(lo)
        self.W = len(pw)
        self.right = _side_params(law.right, hi + 1)
        self.left = _side_params(law.left, -lo + 1)

    def args(self):
        return (self.prob, self.alias, self.lo, self.W) + self.right + self.left


def _side_params(side, kstart):
    if side is None:
        return (0, 1.0, 0.0, 1.0, float(kstart), 0.0)
    kind = 1 if side.kind == "zeta" else 2
    coef = side.c if kind == 1 else side.weight
    s0 = float(side.ge(float(kstart)))
    return (kind, side.alpha, side.gamma, float(coef), float(kstart), s0)


def _build_alias(w):
    """Vose alias table for weights ``w`` summing to 1."""
    n = len(w)
    prob = np.zeros(n)
    alias = np.arange(n, dtype=np.int64)
    scaled = w * n
    small = [i for i in range(n) if scaled[i] < 1.0]
    large = [i for i in range(n) if scaled[i] >= 1.0]
    while small and large:
        s = small.pop()
        l = large.pop()
        prob[s] = scaled[s]
        alias[s] = l
        scaled[l] = scaled[l] + scaled[s] - 1.0
        (small if scaled[l] < 1.0 else large).append(l)
    for i in large + small:
        prob[i] = 1.0
    return prob, alias


@njit
def _draw_nb(u1, u2, u3, prob, alias, lo, W,
             rk, ra, rg, rc, rs, rS, lk, la, lg, lc, ls, lS):
    n = prob.shape[0]
    j = int(u1 * n)
    if j >= n:
        j = n - 1
    if u2 >= prob[j]:
        j = alias[j]
    if j < W:
        return lo + j
    # u3 in (0, 1]
    if j == W:
        return int(_side_invert_nb(rk, ra, rg, rc, rs, rS, u3))
    return -int(_side_invert_nb(lk, la, lg, lc, ls, lS, u3))


def _draw_np(u, prob, alias, lo, W, rk, ra, rg, rc, rs, rS, lk, la, lg, lc, ls, lS):
    n = prob.shape[0]
    j = np.minimum((u[:, 0] * n).astype(np.int64), n - 1)
    j = np.where(u[:, 1] >= prob[j], alias[j], j)
    out = (lo + j).astype(np.int64)
    r = np.flatnonzero(j == W)
    if r.size:
        out[r] = _side_invert_np(rk, ra, rg, rc, rs, rS, u[r, 2]).astype(np.int64)
    l = np.flatnonzero(j == W + 1)
    if l.size:
        out[l] = -_side_invert_np(lk, la, lg, lc, ls, lS, u[l, 2]).astype(np.int64)
    return out


@njit
def _draw_many_nb(U, prob, alias, lo, W, rk, ra, rg, rc, rs, rS, lk, la, lg, lc, ls, lS):
    n = U.shape[0]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        out[i] = _draw_nb(U[i, 0], U[i, 1], 1.0 - U[i, 2], prob, alias, lo, W,
                          rk, ra, rg, rc, rs, rS, lk, la, lg, lc, ls, lS)
    return out


def draw_many(sampler, U):
    """Increments from an (n, 3) array of uniforms in [0, 1)."""
    U = np.ascontiguousarray(U, dtype=float)
    if _jit.USE_NUMBA:
        return _draw_many_nb(U, *sampler.args())
    V = U.copy()
    V[:, 2] = 1.0 - V[:, 2]
    return _draw_np(V, *sampler.args())


# --------------------------------------------------------------------------
# lockstep path advance
#
# All active paths take one step per round, in index order, each consuming
# three uniforms.  Both backends follow this order, so a given stream gives
# the same paths whichever backend runs.


@njit
def _advance_nb(pos, steps, status, rec, active, n_active, U, lo_b, hi_b,
                max_steps, fixed, rec_step,
                prob, alias, lo, W, rk, ra, rg, rc, rs, rS, lk, la, lg, lc, ls, lS):
    c = 0
    nU = U.shape[0]
    while n_active > 0 and c + 3 * n_active <= nU:
        m = 0
        for a in range(n_active):
            i = active[a]
            x = _draw_nb(U[c], U[c + 1], 1.0 - U[c + 2], prob, alias, lo, W,
                         rk, ra, rg, rc, rs, rS, lk, la, lg, lc, ls, lS)
            c += 3
            p = pos[i] + x
            pos[i] = p
            steps[i] += 1
            if steps[i] == rec_step:
                rec[i] = p
            if p > hi_b:
                status[i] = ABOVE
            elif p < lo_b:
                status[i] = BELOW
            elif steps[i] >= max_steps:
                status[i] = DONE if fixed else CENSORED
            else:
                active[m] = i
                m += 1
        n_active = m
    return n_active, c


def _advance_np(pos, steps, status, rec, active, n_active, U, lo_b, hi_b,
                max_steps, fixed, rec_step, *sargs):
    c = 0
    nU = U.shape[0]
    while n_active > 0 and c + 3 * n_active <= nU:
        idx = active[:n_active]
        u = U[c:c + 3 * n_active].reshape(n_active, 3).copy()
        u[:, 2] = 1.0 - u[:, 2]
        c += 3 * n_active
        p = pos[idx] + _draw_np(u, *sargs)
        pos[idx] = p
        st = steps[idx] + 1
        steps[idx] = st
        hit = st == rec_step
        rec[idx[hit]] = p[hit]
        s = np.zeros(n_active, dtype=np.int8)
        s[st >= max_steps] = DONE if fixed else CENSORED
        s[p < lo_b] = BELOW
        s[p > hi_b] = ABOVE
        status[idx] = s
        keep = idx[s == ACTIVE]
        m = keep.shape[0]
        active[:m] = keep
        n_active = m
    return n_active, c


def run_paths(sampler, rng, start, n, lo_b, hi_b, max_steps, fixed=False,
              rec_step=-1, block=1 << 20):
    """Run ``n`` paths from ``start`` until they leave [lo_b, hi_b] or take
    ``max_steps`` steps.

    Returns (final positions, steps, status, recorded positions).  ``rng`` is
    a numpy Generator; uniforms are consumed as one contiguous stream, so the
    output does not depend on ``block``.
    """
    pos = np.full(n, int(start), dtype=np.int64)
    steps = np.zeros(n, dtype=np.int64)
    status = np.zeros(n, dtype=np.int8)
    rec = np.zeros(n, dtype=np.int64)
    active = np.arange(n, dtype=np.int64)
    n_active = n
    lo_b, hi_b = float(lo_b), float(hi_b)
    kern = _advance_nb if _jit.USE_NUMBA else _advance_np
    sargs = sampler.args()
    buf = np.empty(0)
    while n_active > 0:
        need = max(block, 3 * n_active)
        if buf.shape[0] < need:
            buf = np.concatenate([buf, rng.random(need - buf.shape[0])])
        n_active, used = kern(pos, steps, status, rec, active, n_active, buf,
                              lo_b, hi_b, int(max_steps), bool(fixed), int(rec_step),
                              *sargs)
        buf = buf[used:]
    return pos, steps, status, rec
