"""Command line interface: ``cmtrace {forms,series,trace,classnum,verify}``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from datetime import datetime, timezone
from fractions import Fraction

import mpmath

from . import __version__
from .cache import TraceCache, default_cache_path
from .classnum import hurwitz
from .errors import CMTraceError, PrecisionError
from .etafun import PrecisionPolicy
from .funcdsl import parse
from .qforms import check_level, class_reps_p, cm_point
from .traces import (NORMALIZATIONS, GeneratingSeries, TraceRecord, generating_series, positive_traces,
                     trace_negative, trace_zero)
from .verify import SUITES, run_suite

SCHEMA_VERSION = 1
EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_PRECISION = 0, 1, 2, 3


class UsageError(CMTraceError):
    pass


# ---------------------------------------------------------------------------
# formatting helpers
# ---------------------------------------------------------------------------

def _rational(x: Fraction) -> dict:
    x = Fraction(x)
    return {"num": x.numerator, "den": x.denominator}


def _index(n: Fraction):
    return int(n) if n.denominator == 1 else str(n)


def _decimal(x, bits: int) -> str:
    """Enough significant digits to show ``2^-bits`` absolute accuracy."""
    frac = math.ceil(bits * math.log10(2))
    whole = 1 if not x else max(1, int(mpmath.floor(mpmath.log10(abs(x)))) + 1)
    return mpmath.nstr(x, whole + frac, strip_zeros=False)


def _coefficient(rec: TraceRecord, bits: int) -> dict:
    if rec.value_exact is not None:
        return {"provenance": "exact", **_rational(rec.value_exact)}
    return {"provenance": "rounded", "value": _decimal(rec.value_numeric, bits),
            "err": mpmath.nstr(rec.error, 3), "rounded": _rational(rec.rounded), "certified": rec.certified}


def _document(kind: str, body: dict) -> dict:
    return {"schema": f"cmtrace.{kind}/{SCHEMA_VERSION}", "version": __version__,
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"), **body}


def _emit_json(doc: dict, out) -> None:
    out.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def _emit_csv(header: list[str], rows: list[list], out) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    out.write(buf.getvalue())


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------

def _policy(args) -> PrecisionPolicy:
    return PrecisionPolicy(base_bits=args.precision_bits)


def _spec(args):
    check_level(args.level)
    return parse(args.function, args.level)


def _cache(args) -> TraceCache | None:
    if args.no_cache:
        return None
    return TraceCache(args.cache or default_cache_path(), __version__)


def _positive(spec, args, Ds) -> list[TraceRecord]:
    """Positive traces, served from the cache where possible."""
    policy = _policy(args)
    cache = _cache(args)
    found: dict[int, TraceRecord] = {}
    missing = []
    for D in Ds:
        hit = cache.get(spec.level, spec.digest(), D, args.normalization, policy.base_bits) if cache else None
        if hit is None:
            missing.append(D)
        else:
            found[D] = hit
    for rec in positive_traces(spec, spec.level, missing, policy, args.normalization, args.jobs):
        found[int(rec.index)] = rec
        if cache is not None:
            cache.put(spec.level, spec.digest(), args.normalization, policy.base_bits, rec)
    return [found[D] for D in Ds]


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_forms(args, out) -> int:
    if args.disc <= 0:
        raise UsageError("--disc must be positive")
    check_level(args.level)
    reps = class_reps_p(args.disc, args.level, fricke=args.fricke)
    rows = []
    for r in reps:
        q = r.form
        z = cm_point(q).value(mpmath.mp)
        rows.append({"a": q.a, "b": q.b, "c": q.c, "stabilizer": r.stabilizer_order,
                     "fricke_fixed": r.fricke_fixed,
                     "cm_point": f"({-q.b} + sqrt(-{q.D}))/{2 * q.a}",
                     "re": mpmath.nstr(mpmath.re(z), 15), "im": mpmath.nstr(mpmath.im(z), 15)})
    if args.format == "csv":
        header = ["a", "b", "c", "stabilizer", "fricke_fixed", "cm_point", "re", "im"]
        _emit_csv(header, [[row[h] for h in header] for row in rows], out)
    else:
        group = "SL2Z" if args.level == 1 else ("Gamma0pStar" if args.fricke else "Gamma0p")
        _emit_json(_document("forms", {"disc": -args.disc, "level": args.level, "group": group,
                                       "classes": rows}), out)
    return EXIT_OK


def _nonholo_json(gs: GeneratingSeries, vs: list[str]) -> list[dict]:
    out = []
    for t in gs.nonholo:
        entry = {"index": t.index, "kind": t.kind, "m": t.m, "scalar": _rational(t.scalar),
                 "per_sign": _rational(t.per_sign), "prefactor": "1/(pi*sqrt(v))",
                 "shape": "1" if t.kind == "inverse_sqrt_v" else f"beta(4*pi*v*{t.m * t.m})"}
        if vs:
            with mpmath.workdps(30):
                entry["values"] = [{"v": v, "value": mpmath.nstr(t.evaluate(mpmath.mpf(v)), 20)} for v in vs]
        out.append(entry)
    return out


def cmd_series(args, out) -> int:
    if args.dmax < 1:
        raise UsageError("--dmax must be at least 1")
    for v in args.v:
        if not mpmath.mpf(v) > 0:
            raise UsageError("--v values must be positive")
    spec = _spec(args)
    policy = _policy(args)
    positive = _positive(spec, args, list(range(1, args.dmax + 1)))
    gs = generating_series(spec, spec.level, args.dmax, args.normalization, policy, args.jobs, positive)
    bits = policy.base_bits
    if args.format == "csv":
        uncertified = any(not r.certified for r in gs.table.values())
        header = ["index", "kind", "value"] + (["uncertified"] if uncertified else [])
        rows = []
        for n, rec in sorted(gs.table.items()):
            row = [_index(n), rec.kind, str(rec.value)]
            if uncertified:
                row.append("" if rec.certified else "1")
            rows.append(row)
        _emit_csv(header, rows, out)
        return EXIT_OK
    body = {
        "function": spec.canonical(), "digest": spec.digest(), "level": spec.level,
        "normalization": args.normalization, "dmax": args.dmax, "precision_bits": bits,
        "coefficients": [{"index": _index(n), "kind": rec.kind, "coefficient": _coefficient(rec, bits)}
                         for n, rec in sorted(gs.table.items())],
        "nonholomorphic": _nonholo_json(gs, args.v),
        "plus_space": {"pass": not gs.violations, "violations": [_index(n) for n in gs.violations]},
    }
    _emit_json(_document("series", body), out)
    return EXIT_OK


def cmd_trace(args, out) -> int:
    spec = _spec(args)
    policy = _policy(args)
    n = args.disc
    if n > 0:
        rec = _positive(spec, args, [n])[0]
    elif n == 0:
        rec = trace_zero(spec, spec.level, args.normalization)
    else:
        m = math.isqrt(-n)
        if m * m != -n:
            rec = TraceRecord(Fraction(n), "negative", value_exact=Fraction(0))
        else:
            rec = trace_negative(spec, spec.level, m, args.normalization)
    if args.format == "csv":
        _emit_csv(["index", "kind", "value", "certified"],
                  [[_index(rec.index), rec.kind, str(rec.value), int(rec.certified)]], out)
        return EXIT_OK
    _emit_json(_document("trace", {"function": spec.canonical(), "level": spec.level,
                                   "normalization": args.normalization, "index": _index(rec.index),
                                   "kind": rec.kind, "precision_bits": policy.base_bits,
                                   "coefficient": _coefficient(rec, policy.base_bits)}), out)
    return EXIT_OK


def cmd_classnum(args, out) -> int:
    if args.disc is not None:
        Ds = [args.disc]
    else:
        Ds = list(range(0, args.dmax + 1))
    if any(D < 0 for D in Ds):
        raise UsageError("discriminant values must be non-negative")
    table = [(D, hurwitz(D)) for D in Ds]
    if args.format == "csv":
        _emit_csv(["D", "H"], [[D, str(h)] for D, h in table], out)
    else:
        _emit_json(_document("classnum", {"hurwitz": [{"D": D, "H": _rational(h)} for D, h in table]}), out)
    return EXIT_OK


def cmd_verify(args, out) -> int:
    kwargs = {"policy": _policy(args), "jobs": args.jobs}
    if args.suite == "plus-space":
        kwargs["spec"] = _spec(args)
        kwargs["normalization"] = args.normalization
    if args.dmax is not None:
        kwargs["dmax"] = args.dmax
    checks = run_suite(args.suite, **kwargs)
    ok = all(c.passed for c in checks)
    if args.format == "csv":
        _emit_csv(["check", "pass", "delta"], [[c.name, int(c.passed), c.delta] for c in checks], out)
    else:
        _emit_json(_document("verify", {"suite": args.suite, "pass": ok,
                                        "checks": [c.to_json() for c in checks]}), out)
    return EXIT_OK if ok else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cmtrace", description=__doc__)
    parser.add_argument("--version", action="version", version=f"cmtrace {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")

    numeric = argparse.ArgumentParser(add_help=False)
    numeric.add_argument("--precision-bits", type=int, default=64)
    numeric.add_argument("--jobs", type=int, default=1)

    function = argparse.ArgumentParser(add_help=False)
    function.add_argument("--function", default="J", help="function in the eta/j expression language")
    function.add_argument("--level", type=int, default=1)
    function.add_argument("--normalization", choices=NORMALIZATIONS, default="G")
    function.add_argument("--cache", help="cache file (default: $CMTRACE_CACHE or ~/.cache/cmtrace)")
    function.add_argument("--no-cache", action="store_true")

    p = sub.add_parser("forms", parents=[common], help="class representatives and CM points")
    p.add_argument("--disc", type=int, required=True, help="D, for discriminant -D")
    p.add_argument("--level", type=int, default=1)
    p.add_argument("--fricke", action="store_true", help="fold classes under the Fricke involution")
    p.set_defaults(handler=cmd_forms)

    p = sub.add_parser("series", parents=[common, numeric, function], help="weight 3/2 generating series")
    p.add_argument("--dmax", type=int, required=True)
    p.add_argument("--v", action="append", default=[], help="evaluate non-holomorphic terms at this v")
    p.set_defaults(handler=cmd_series)

    p = sub.add_parser("trace", parents=[common, numeric, function], help="a single trace coefficient")
    p.add_argument("--disc", type=int, required=True, help="index: D > 0, 0, or -m^2")
    p.set_defaults(handler=cmd_trace)

    p = sub.add_parser("classnum", parents=[common], help="Hurwitz class numbers")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--disc", type=int)
    g.add_argument("--dmax", type=int)
    p.set_defaults(handler=cmd_classnum)

    p = sub.add_parser("verify", parents=[common, numeric, function], help="run a self-check suite")
    p.add_argument("--suite", choices=sorted(SUITES), required=True)
    p.add_argument("--dmax", type=int)
    p.set_defaults(handler=cmd_verify)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "jobs", 1) < 1:
        print("cmtrace: error: --jobs must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.handler(args, out)
    except PrecisionError as exc:
        print(f"cmtrace: precision exhausted: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except (CMTraceError, ValueError) as exc:
        print(f"cmtrace: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
