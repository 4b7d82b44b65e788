"""Command line front end: ``mvopoly build | transform | verify | toda``.

Exit codes:
  0  success
  2  malformed input (JSON, schema, node off the variety, divisor on a node)
  3  singular leading minor or singular block
  4  a tolerance or check failed
  5  no poised set for a transform level
"""

from __future__ import annotations

import argparse
import datetime as _dt
import sys

import numpy as np

from . import checks as ck
from . import jsonio
from . import toda as td
from . import transforms as tr
from .errors import (DivisorNearZero, NoPoisedSet, NodeOffVariety, NonConvergentSeries, PoleOnSupport,
                     RepeatedRoots, SingularBlock, SingularMinor, SingularSystem, SpecError)
from .factorization import block_json, dump_csv
from .functional import Diagonal
from .mvopr import OpFamily

EXIT_OK, EXIT_INPUT, EXIT_SINGULAR, EXIT_TOLERANCE, EXIT_POISED = 0, 2, 3, 4, 5

ALL_VERIFY = ["biorthogonality", "quasidet", "cd", "transform", "uvarov", "fredholm", "toda", "bilinear"]
ALL_TODA = ["lax", "zs", "toda2d", "kp", "spectral", "wave", "hankel", "cgu", "bilinear"]


class CheckFailed(Exception):
    pass


def _split(text):
    if text is None:
        return None
    return [c.strip() for c in text.split(",") if c.strip()]


def _tols(pairs, base=None):
    tols = dict(ck.DEFAULT_TOLS)
    tols.update(base or {})
    for item in pairs or []:
        try:
            key, val = item.split("=")
            tols[key.strip()] = float(val)
        except ValueError:
            raise SpecError(f"--tol expects key=value, got {item!r}") from None
    return tols


def _load_config(args):
    cfg = jsonio.load(args.config) if args.config else {}
    if getattr(args, "n_max", None) is not None:
        cfg["n_max"] = args.n_max
    n_max = cfg.get("n_max")
    if not isinstance(n_max, int) or n_max < 1:
        raise SpecError("config needs an integer n_max >= 1")
    return cfg


def _family(cfg):
    if "generator" in cfg:
        g = jsonio.generator_from_json(cfg["generator"])
    elif "functional" in cfg:
        g = Diagonal(jsonio.functional_from_json(cfg["functional"]))
    else:
        raise SpecError("config needs a 'functional' or a 'generator'")
    return OpFamily.from_generator(g, cfg["n_max"], mode=cfg.get("mode", "auto"))


def _family_json(fam):
    return {
        "D": fam.idx.D,
        "n_max": fam.idx.n_max,
        "mode": fam.fact.mode,
        "S1": block_json(fam.s1, fam.idx),
        "S2": block_json(fam.s2, fam.idx),
        "H": [jsonio.complex_json(h) for h in fam.h_blocks],
        "H_block_sizes": [int(h.shape[0]) for h in fam.h_blocks],
        "polynomials": fam.to_json(1),
    }


def _level_json(lv):
    return {"level": lv.k, "p_hat": jsonio.complex_json(lv.p_hat), "h_hat": jsonio.complex_json(lv.h_hat),
            "condition_estimate": lv.selection.condition_estimate,
            "beta_set": [list(b) for b in lv.selection.beta_set],
            "node_set": jsonio.complex_json(lv.selection.node_set)}


def _require(results):
    if any(not r.get("pass", True) for r in results):
        raise CheckFailed(", ".join(r["check"] for r in results if not r.get("pass", True)))


# -- subcommands -----------------------------------------------------------

def cmd_build(args, report):
    cfg = _load_config(args)
    tols = _tols(args.tol, cfg.get("tol"))
    fam = _family(cfg)
    report.update(_family_json(fam))
    res = ck.biorthogonality(fam, tols)
    report["checks"] = res
    if args.csv:
        with open(args.csv, "w") as fh:
            dump_csv(fam.s1, fam.idx, fh)
    _require(res)


def cmd_transform(args, report):
    cfg = _load_config(args)
    tols = _tols(args.tol, cfg.get("tol"))
    fam = _family(cfg)
    if "transform" not in cfg:
        raise SpecError("config needs a 'transform'")
    spec = jsonio.transform_from_json(cfg["transform"], D=fam.idx.D)
    tr.check_masses(spec, fam.idx)
    levels = tr.transform_all(fam, spec)
    hat = tr.oracle_transform(fam, spec)
    report["levels"] = [_level_json(lv) for lv in levels]
    deltas = []
    for lv in levels:
        deltas.append({"level": lv.k, "delta": tr.compare_with_oracle([lv], hat)})
    report["oracle_deltas"] = deltas
    if fam.idx.D == 1 and spec.m1 + spec.m2 > 0:
        report["cauchy_path"] = []
        for lv in levels:
            if lv.k < spec.m2:
                continue
            c = tr.reduce_1d_cauchy(fam, spec, lv.k)
            report["cauchy_path"].append({"level": lv.k, "p_hat": jsonio.complex_json(c.p_hat),
                                          "h_hat": [c.h_hat.real, c.h_hat.imag]})
    res = [ck.record("transform_oracle", max(d["delta"] for d in deltas), tols["transform"])]
    report["checks"] = res
    _require(res)


def cmd_verify(args, report):
    names = _split(args.checks)
    if names is not None and not names:
        report["checks"] = []
        return
    cfg = _load_config(args)
    tols = _tols(args.tol, cfg.get("tol"))
    fam = _family(cfg)
    spec = jsonio.transform_from_json(cfg["transform"], D=fam.idx.D) if "transform" in cfg else None
    explicit = names is not None
    names = names or cfg.get("checks") or ALL_VERIFY
    out = []
    for name in names:
        if name == "biorthogonality":
            out += ck.biorthogonality(fam, tols)
        elif name == "quasidet":
            out += ck.quasidet(fam, tols)
        elif name == "cd":
            out += ck.christoffel_darboux(fam, tols)
        elif name in ("transform", "resolvent"):
            if spec is None:
                if explicit:
                    raise SpecError(f"check {name!r} needs a 'transform' in the config")
                continue
            out += ck.transform_suite(fam, spec, tols)
        elif name == "uvarov":
            if "multipoles" not in cfg:
                if explicit:
                    raise SpecError("check 'uvarov' needs 'multipoles' in the config")
                continue
            out += ck.uvarov_suite(fam, jsonio.multipoles_from_json(cfg["multipoles"]), tols)
        elif name == "fredholm":
            if "curve" not in cfg:
                if explicit:
                    raise SpecError("check 'fredholm' needs a 'curve' in the config")
                continue
            out += ck.fredholm_suite(fam, jsonio.curve_from_json(cfg["curve"]), tols)
        elif name in ("toda", "bilinear"):
            D = fam.idx.D
            state = td.TodaState(fam.source, cfg.get("toda_n_max", fam.idx.n_max),
                                 td.parse_times(cfg.get("t1"), D), td.parse_times(cfg.get("t2"), D))
            which = ["bilinear"] if name == "bilinear" else ["lax", "zs", "spectral"]
            out += ck.toda_suite(state, which, tols, args.h, spec)
        else:
            raise SpecError(f"unknown check {name!r}")
    report["checks"] = out
    _require(out)


def cmd_toda(args, report):
    g = jsonio.generator_from_json(args.generator)
    D = g.D
    t1 = td.parse_times(args.t1, D)
    t2 = td.parse_times(args.t2, D)
    tols = _tols(args.tol)
    spec = jsonio.transform_from_json(args.transform, D=D) if args.transform else None
    names = _split(args.checks)
    if names is None:
        names = [n for n in ALL_TODA if n != "cgu" or spec is not None]
    state = td.TodaState(g, args.n_max, t1, t2)
    report.update({"D": D, "n_max": args.n_max, "t1": t1.to_json() if not t1.is_zero() else {"terms": []},
                   "t2": t2.to_json() if not t2.is_zero() else {"terms": []}})
    z = np.asarray([float(v) for v in args.z.split(",")]) if args.z else None
    res = ck.toda_suite(state, names, tols, args.h, spec, z)
    report["checks"] = res
    _require(res)


# -- entry point -----------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="mvopoly", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", required=True, help="run configuration (JSON)")
            sp.add_argument("--n-max", type=int, dest="n_max", help="override n_max")
        sp.add_argument("--out", "--report", dest="out", help="report path (default: stdout)")
        sp.add_argument("--tol", action="append", metavar="KEY=VAL", help="tolerance override")
        sp.add_argument("--no-timestamp", action="store_true", help="omit the timestamp for byte-stable reports")

    b = sub.add_parser("build", help="factorize and export a family")
    common(b)
    b.add_argument("--csv", help="also dump S1 in the block CSV format")
    t = sub.add_parser("transform", help="apply a Geronimus / linear spectral transformation")
    common(t)
    v = sub.add_parser("verify", help="run invariant suites")
    common(v)
    v.add_argument("--checks", help="comma separated suites: " + ",".join(ALL_VERIFY))
    v.add_argument("--h", type=float, help="finite-difference step")
    o = sub.add_parser("toda", help="evolve a generator and check the Toda hierarchy")
    common(o, config=False)
    o.add_argument("--generator", required=True, help="generator JSON")
    o.add_argument("--n-max", type=int, dest="n_max", default=6)
    o.add_argument("--t1", help="times for the first flow, e.g. '1=0.1;2=0.05' or polynomial JSON")
    o.add_argument("--t2", help="times for the second flow")
    o.add_argument("--checks", help="comma separated: " + ",".join(ALL_TODA))
    o.add_argument("--h", type=float, help="finite-difference step (default 1e-3)")
    o.add_argument("--transform", help="transform JSON for the cgu, reduction and bilinear checks")
    o.add_argument("--z", help="spectral point, comma separated")
    return p


HANDLERS = {"build": cmd_build, "transform": cmd_transform, "verify": cmd_verify, "toda": cmd_toda}


def _exit_code(exc):
    if isinstance(exc, (SpecError, NodeOffVariety, DivisorNearZero, PoleOnSupport, RepeatedRoots)):
        return EXIT_INPUT
    if isinstance(exc, (SingularMinor, SingularBlock, SingularSystem)):
        return EXIT_SINGULAR
    if isinstance(exc, NoPoisedSet):
        return EXIT_POISED
    if isinstance(exc, (CheckFailed, NonConvergentSeries)):
        return EXIT_TOLERANCE
    return None


def main(argv=None):
    args = build_parser().parse_args(argv)
    report = {"command": args.command}
    if not args.no_timestamp:
        report["generated_at"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    code = EXIT_OK
    try:
        HANDLERS[args.command](args, report)
        report["status"] = "ok"
    except Exception as exc:
        code = _exit_code(exc)
        if code is None:
            raise
        report["status"] = "error" if code != EXIT_TOLERANCE else "failed"
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
        print(f"mvopoly {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
    text = jsonio.dumps(report) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
