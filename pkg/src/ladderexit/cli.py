"""Command line front end.

Every command writes its outputs plus ``manifest.json`` (resolved arguments,
law hash, package versions) into ``--out``.  Exit codes: 0 ok, 2 config,
3 numeric, 4 invariant violation, 5 resource.
"""
from __future__ import annotations

import argparse
import json
import os
import platform
import sys
from importlib import metadata

import numpy as np

from . import _jit
from . import asymptotics as asy
from . import montecarlo as mc
from . import verify as vf
from .errors import ConfigError, InvariantViolation, LadderExitError
from .exit_exact import (check_exit, check_upper_bound, overshoot_law, solve_exit,
                         write_exit_csv)
from .increments import PRESETS, FamilySpec, TailFunctionals, build_law
from .ladder import LadderLaw, wiener_hopf_iterate
from .renewal import RenewalTable, _atomic, build_tables

CACHE_ENV = "LADDEREXIT_CACHE"


# --------------------------------------------------------------------------
# helpers


def _resolve_spec(args):
    if getattr(args, "law", None):
        src = args.law
        if src in PRESETS:
            return PRESETS[src]
        if os.path.exists(src):
            with open(src) as fh:
                return FamilySpec.from_json(fh.read())
        if src.lstrip().startswith("{"):
            return FamilySpec.from_json(src)
        raise ConfigError(f"law: {src!r} is neither a preset, a file nor inline JSON")
    fam = getattr(args, "family", None)
    if fam is None:
        raise ConfigError("law: give --law or --family")
    if fam in PRESETS and args.alpha is None:
        return PRESETS[fam]
    d = {"family": fam}
    for key, val in (("alpha", args.alpha), ("p", args.p), ("tail_mass", args.tail_mass),
                     ("alpha_left", args.alpha_left)):
        if val is not None:
            d[key] = val
    if args.log_power is not None:
        d["log_correction"] = True
        d["log_power"] = list(args.log_power)
    if args.centering is not None:
        d["centering"] = args.centering
    return FamilySpec.from_dict(d)


def _law(args):
    spec = _resolve_spec(args)
    return spec, build_law(spec)


def _versions():
    out = {"python": platform.python_version(), "numpy": np.__version__,
           "backend": _jit.backend()}
    for pkg in ("scipy", "numba", "artifact"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = None
    return out


def _write_text(path, text):
    _atomic(path, lambda fh: fh.write(text))


def _write_csv(path, header, rows, fmt=None, gnuplot=False):
    rows = [list(r) for r in rows]

    def fmt_row(r):
        return ",".join(_fmt(v) for v in r)

    body = ",".join(header) + "\n" + "".join(fmt_row(r) + "\n" for r in rows)
    _write_text(path, body)
    if gnuplot:
        dat = "# " + " ".join(header) + "\n" + "".join(
            " ".join(_fmt(v) for v in r) + "\n" for r in rows)
        _write_text(os.path.splitext(path)[0] + ".dat", dat)


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _manifest(args, out, law_hash=None, extra=None):
    conf = {k: v for k, v in vars(args).items() if k not in ("func",)}
    man = {"command": args.command, "args": conf, "law_hash": law_hash,
           "versions": _versions()}
    if extra:
        man.update(extra)
    _write_text(os.path.join(out, "manifest.json"), json.dumps(man, indent=2, sort_keys=True,
                                                               default=vf._default))


def _cache_dir(args):
    c = args.cache or os.environ.get(CACHE_ENV)
    if c:
        os.makedirs(c, exist_ok=True)
    return c


def _ladder(args, law, H):
    cache = _cache_dir(args)
    if cache:
        path = os.path.join(cache, f"ladder-{law.law_hash}-{H}.csv")
        if os.path.exists(path):
            return LadderLaw.from_csv(path)
    lad = wiener_hopf_iterate(law, H, tol=args.tol or 1e-12)
    if cache:
        tmp = path + f".tmp{os.getpid()}"
        lad.to_csv(tmp)
        os.replace(tmp, path)
    return lad


def _tables(args, law, H):
    cache = _cache_dir(args)
    if cache:
        path = os.path.join(cache, f"tables-{law.law_hash}-{H}.npz")
        if os.path.exists(path):
            return RenewalTable.load(path)
    tab = build_tables(_ladder(args, law, H))
    if cache:
        tab.save(os.path.join(cache, f"tables-{law.law_hash}-{H}.npz"))
    return tab


def _out(args):
    os.makedirs(args.out, exist_ok=True)
    return args.out


# --------------------------------------------------------------------------
# commands


def cmd_law(args):
    spec, law = _law(args)
    out = _out(args)
    tf = TailFunctionals(law)
    xs = np.unique(np.round(np.logspace(0, 4, 41)).astype(np.int64))
    up = law.upper(xs + 1)
    lo = law.lower(-xs - 1)
    H = up + lo
    A = tf.A(xs.astype(float))
    cols = {"x": xs, "right_tail": up, "left_tail": lo, "H": H, "A": A}
    for name, fn in (("eta_plus", tf.eta_plus), ("eta_minus", tf.eta_minus),
                     ("m_plus", tf.m_plus), ("m_minus", tf.m_minus)):
        try:
            cols[name] = fn(xs.astype(float))
        except LadderExitError:
            cols[name] = np.full(len(xs), np.nan)
    _write_csv(os.path.join(out, "functionals.csv"), list(cols),
               zip(*cols.values()), gnuplot=args.gnuplot)
    # law.json is a loadable law file; the summary goes beside it
    _write_text(os.path.join(out, "law.json"),
                json.dumps(spec.to_dict(), indent=2, sort_keys=True, default=vf._default))
    summary = {"law_hash": law.law_hash, "mass": law.total_mass,
               "describe": law.describe(), "warnings": list(law.warnings)}
    _write_text(os.path.join(out, "summary.json"),
                json.dumps(summary, indent=2, sort_keys=True, default=vf._default))
    print(f"law {law.law_hash}: mass={law.total_mass!r}")
    _manifest(args, out, law.law_hash)
    return 0


def cmd_ladder(args):
    _, law = _law(args)
    out = _out(args)
    H = args.horizon or 1000
    lad = _ladder(args, law, H)
    lad.to_csv(os.path.join(out, "ladder.csv"))
    summ = {"law_hash": law.law_hash, "horizon": H, "v0": lad.v0,
            "defect_z": lad.truncation_defect[0], "defect_zhat": lad.truncation_defect[1],
            "iterations": lad.info.get("iterations")}
    _write_text(os.path.join(out, "ladder.json"), json.dumps(summ, indent=2))
    print(f"v0={float(lad.v0)!r} defects={tuple(float(d) for d in lad.truncation_defect)}")
    _manifest(args, out, law.law_hash)
    return 0


def cmd_renewal(args):
    _, law = _law(args)
    out = _out(args)
    H = args.horizon or 1000
    tab = _tables(args, law, H)
    tab.to_csv(os.path.join(out, "renewal.csv"))
    if args.gnuplot:
        n = np.arange(H + 1)
        _write_csv(os.path.join(out, "renewal_plot.csv"), ["n", "U_a", "V_d"],
                   zip(n, tab.U_a, tab.V_d), gnuplot=True)
    print(f"V_d({H})={float(tab.V_d[-1])!r}")
    _manifest(args, out, law.law_hash)
    return 0


def _exit_setup(args):
    _, law = _law(args)
    if args.R is None:
        raise ConfigError("--R is required")
    R = int(args.R)
    H = args.horizon or max(2 * R, 1000)
    if H < R:
        raise ConfigError(f"--horizon {H} below R={R}")
    if args.x is not None and not 0 <= args.x <= R:
        raise ConfigError(f"--x {args.x} outside [0, {R}]")
    tab = _tables(args, law, H)
    sol = solve_exit(law, R)
    check_exit(sol)
    return law, R, tab, sol


def cmd_exit(args):
    law, R, tab, sol = _exit_setup(args)
    out = _out(args)
    rep = check_upper_bound(sol, tab)
    write_exit_csv(os.path.join(out, "exit.csv"), sol, tab)
    if args.gnuplot:
        x = np.arange(R + 1)
        _write_csv(os.path.join(out, "exit_plot.csv"), ["x", "h", "ratio"],
                   zip(x, sol.h, sol.h * tab.V_d[R] / tab.V_d[:R + 1]), gnuplot=True)
    summ = {"R": R, "law_hash": law.law_hash, "residual": sol.residual,
            "bound_violations": rep.violations, "min_margin": float(rep.margin.min())}
    _write_text(os.path.join(out, "exit.json"), json.dumps(summ, indent=2))
    _manifest(args, out, law.law_hash)
    if rep.violations:
        raise InvariantViolation(f"upper bound violated at {rep.violations} points")
    print(f"h({args.x or 0})={float(sol.h[args.x or 0])!r}")
    return 0


def cmd_overshoot(args):
    law, R, tab, sol = _exit_setup(args)
    out = _out(args)
    x = int(args.x or 0)
    ov = overshoot_law(law, sol, x, args.m_max)
    m = np.arange(1, len(ov.pmf))
    cum = ov.tail + np.cumsum(ov.pmf[::-1])[::-1]  # P[Z(R) >= m, exit above]
    _write_csv(os.path.join(out, "overshoot.csv"), ["m", "mass", "exceed_conditional"],
               zip(m, ov.pmf[1:], np.append(cum[2:], ov.tail) / ov.h), gnuplot=args.gnuplot)
    check_upper_bound(sol, tab, raise_on_violation=True)
    _manifest(args, out, law.law_hash)
    return 0


def cmd_classify(args):
    _, law = _law(args)
    out = _out(args)
    if args.rho is not None:
        rho, ci, source = args.rho, None, "declared"
    else:
        n_steps = args.steps
        est = mc.estimate_rho(law, args.n or 20000, n_steps, args.seed, args.shards)
        half = est.counts["estimate_half"]
        rho, ci, source = est.estimate, (est.estimate - 3 * est.se, est.estimate + 3 * est.se), \
            f"monte_carlo(n_steps={n_steps}, half={half!r})"
    tab = None
    if args.horizon:
        tab = _tables(args, law, args.horizon)
    prof = asy.classify(law, rho=rho, rho_ci=ci, rho_source=source, table=tab)
    _write_text(os.path.join(out, "classify.json"), prof.to_json())
    flags = ",".join(k for k, v in prof.condition_flags.items() if v["verdict"])
    print(f"case {prof.case_tag}; conditions: {flags or 'none'}")
    _manifest(args, out, law.law_hash)
    return 0


def cmd_rogozin(args):
    out = _out(args)
    res = {"alpha": args.alpha, "rho": args.rho}
    if args.xi is not None:
        res["Q"] = asy.rogozin_Q(args.alpha, args.rho, args.xi)
        if args.eta is not None:
            res["overshoot"] = asy.rogozin_overshoot(args.alpha, args.rho, args.xi, args.eta)
    if args.c is not None:
        lhs, rhs = asy.kder_sides(args.alpha, args.rho, args.c)
        res.update(kder_lhs=lhs, kder_rhs=rhs, kder_residual=abs(lhs - rhs))
    _write_text(os.path.join(out, "rogozin.json"), json.dumps(res, indent=2))
    if "Q" in res:
        print(repr(res["Q"]))
    _manifest(args, out)
    return 0


def cmd_mc(args):
    _, law = _law(args)
    out = _out(args)
    n = args.n or 10 ** 5
    est = args.estimator
    rows = []
    if est == "exit":
        rows.append(mc.estimate_exit(law, args.x or 0, args.R, n, args.seed, args.shards))
    elif est == "overshoot":
        rows.append(mc.conditional_overshoot(law, args.x or 0, args.R, args.eps, n, args.seed,
                                             args.shards))
    elif est == "rho":
        rows.append(mc.estimate_rho(law, n, args.steps, args.seed, args.shards))
    elif est == "ladder":
        ls = mc.estimate_ladder(law, n, args.seed, shards=args.shards)
        m = np.arange(1, len(ls.z_pmf))
        _write_csv(os.path.join(out, "mc_ladder.csv"),
                   ["m", "z_mass", "z_se", "zhat_mass", "zhat_se"],
                   zip(m, ls.z_pmf[1:], ls.se("z")[1:], ls.zhat_pmf[1:], ls.se("zhat")[1:]),
                   gnuplot=args.gnuplot)
        _manifest(args, out, law.law_hash, {"censored": list(ls.censored)})
        return 0
    mc.write_csv(os.path.join(out, "mc.csv"), rows)
    for r in rows:
        print(f"{r.name}: {float(r.estimate)!r} +- {float(r.se)!r} (n={r.n})")
    _manifest(args, out, law.law_hash)
    return 0


def cmd_verify(args):
    out = _out(args)
    ctx = vf.Context(args.scale, cache=_cache_dir(args))
    results = vf.run_suite(args.suite, args.scale, ctx=ctx, echo=print)
    _write_text(os.path.join(out, "verify.json"), vf.report_json(results, args.scale))
    _manifest(args, out)
    failed = [r.id for r in results if not r.passed]
    if failed:
        print(f"error: failed criteria {failed}", file=sys.stderr)
        return InvariantViolation.exit_code
    return 0


# --------------------------------------------------------------------------
# parser


def _common(p):
    p.add_argument("--law", help="preset name, JSON file or inline JSON")
    p.add_argument("--family", help="family name (with --alpha, --p, ...)")
    p.add_argument("--alpha", type=float)
    p.add_argument("--alpha-left", type=float, dest="alpha_left")
    p.add_argument("--p", type=float)
    p.add_argument("--tail-mass", type=float, dest="tail_mass")
    p.add_argument("--log-power", type=float, nargs=2, dest="log_power")
    p.add_argument("--centering", choices=["zero_mean", "none"])
    p.add_argument("--R", type=int)
    p.add_argument("--x", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shards", type=int, default=None)
    p.add_argument("--tol", type=float)
    p.add_argument("--out", default="out")
    p.add_argument("--cache", default=None)
    p.add_argument("--gnuplot", action="store_true")


def build_parser():
    ap = argparse.ArgumentParser(prog="ladderexit")
    ap.add_argument("--from-manifest", dest="manifest", help="rerun a manifest.json")
    sub = ap.add_subparsers(dest="command")
    for name, fn in (("law", cmd_law), ("ladder", cmd_ladder), ("renewal", cmd_renewal),
                     ("exit", cmd_exit), ("overshoot", cmd_overshoot),
                     ("classify", cmd_classify), ("rogozin", cmd_rogozin), ("mc", cmd_mc),
                     ("verify", cmd_verify)):
        p = sub.add_parser(name)
        _common(p)
        p.set_defaults(func=fn)
        if name == "overshoot":
            p.add_argument("--m-max", type=int, dest="m_max")
        if name == "classify":
            p.add_argument("--rho", type=float)
            p.add_argument("--n", type=int)
            p.add_argument("--steps", type=int, default=2000)
        if name == "rogozin":
            p.add_argument("--rho", type=float, required=True)
            p.add_argument("--xi", type=float)
            p.add_argument("--eta", type=float)
            p.add_argument("--c", type=float)
        if name == "mc":
            p.add_argument("--estimator", choices=["exit", "overshoot", "rho", "ladder"],
                           default="exit")
            p.add_argument("--n", type=int)
            p.add_argument("--eps", type=float, default=0.5)
            p.add_argument("--steps", type=int, default=1000)
        if name == "verify":
            p.add_argument("--suite", choices=sorted(vf.SUITES), default="all")
            p.add_argument("--scale", choices=["quick", "full"], default="quick")
    return ap


def _from_manifest(path, ap):
    with open(path) as fh:
        man = json.load(fh)
    cmd = man["command"]
    ns = ap.parse_args([cmd])
    for k, v in man["args"].items():
        setattr(ns, k, v)
    return ns


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        if args.manifest:
            args = _from_manifest(args.manifest, ap)
        if not getattr(args, "command", None):
            ap.print_help()
            return 2
        if args.command == "rogozin" and args.alpha is None:
            raise ConfigError("rogozin: --alpha is required")
        return args.func(args)
    except LadderExitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (IndexError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
