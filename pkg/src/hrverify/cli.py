"""Command-line driver: ``hr check|suite|sharpness|constants|euclid``.

Exit codes: 0 when every verdict passes, 1 when any fails, 2 for usage,
configuration or quadrature errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from . import constants as K
from . import identities as I
from .constants import ParamPoint
from .euclidean_modes import IDENTITIES, ModeSpec, check_identity
from .quadrature import QuadratureError
from .radial_jets import parse_profile
from .sharpness import DEFAULT_EPS, run_trace, write_csv

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
ALL_IDS = I.EQUALITY_IDS + I.INEQUALITY_IDS + I.UNCERTAINTY_IDS


class UsageError(Exception):
    pass


# ------------------------------------------------------------ serialization

def _num(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == int(x) and abs(x) < 2**53:
        return str(int(x)) + ".0"
    return format(x, ".17g")


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        s = _num(obj)
        return json.dumps(s) if s in ("nan", "inf", "-inf") else s
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(obj[k], indent, level + 1)}" for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if hasattr(obj, "to_dict"):
        return _encode(obj.to_dict(), indent, level)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent=2) -> str:
    """Deterministic JSON: sorted keys, 17 significant digits, non-finite floats as strings."""
    return _encode(obj, indent, 0) + "\n"


def envelope(command, payload, verdict):
    return {"engine": "hrverify", "version": __version__, "catalogue_hash": I.catalogue_hash(),
            "command": command, "verdict": verdict, "result": payload}


def _emit_json(path, command, payload, verdict):
    if path:
        Path(path).write_text(dumps(envelope(command, payload, verdict)))


def _say(args, *msg):
    if not getattr(args, "quiet", False):
        print(*msg)


# ------------------------------------------------------------ suite config

@dataclass
class SuiteEntry:
    id: str
    Q: tuple | None = None
    p: tuple | None = None
    alpha: tuple | None = None
    k: tuple | None = None
    R: tuple | None = None
    profiles: tuple = I.GRID_PROFILES
    tol: float | None = None
    mutate: float | None = None


@dataclass
class SuiteConfig:
    entries: list
    seed: int = 0
    output: str | None = None
    meta: dict = field(default_factory=dict)


def _tuple_of(item, key, cast=float):
    v = item.get(key)
    if v is None:
        return None
    if isinstance(v, dict):
        lo, hi, n = float(v["min"]), float(v["max"]), int(v.get("num", 5))
        if n < 1:
            raise UsageError(f"{item.get('id')}: empty range for {key}")
        return tuple(np.linspace(lo, hi, n).tolist())
    if not isinstance(v, list):
        v = [v]
    if not v:
        raise UsageError(f"{item.get('id')}: empty grid for {key}")
    return tuple(tuple(int(x) for x in e) if isinstance(e, list) else cast(e) for e in v)


def parse_suite(obj) -> SuiteConfig:
    if not isinstance(obj, dict) or not isinstance(obj.get("entries"), list):
        raise UsageError("suite config must be an object with an 'entries' list")
    if not obj["entries"]:
        raise UsageError("suite config has no entries")
    entries = []
    for item in obj["entries"]:
        if isinstance(item, str):
            item = {"id": item}
        eid = item.get("id")
        if eid not in ALL_IDS:
            raise UsageError(f"unknown catalogue id {eid!r}")
        profiles = item.get("profiles", list(I.GRID_PROFILES))
        if not profiles:
            raise UsageError(f"{eid}: empty profile list")
        for pr in profiles:
            parse_profile(pr)
        alpha = item.get("alpha")
        entries.append(SuiteEntry(
            eid, _tuple_of(item, "Q"), _tuple_of(item, "p"),
            None if alpha in (None, "grid") else _tuple_of(item, "alpha"),
            _tuple_of(item, "k", int), _tuple_of(item, "R"), tuple(profiles),
            None if item.get("tol") is None else float(item["tol"]),
            None if item.get("mutate") is None else float(item["mutate"])))
    return SuiteConfig(entries, int(obj.get("seed", 0)), obj.get("output"),
                       {k: v for k, v in obj.items() if k not in ("entries", "seed", "output")})


def load_suite(path) -> SuiteConfig:
    text = _read_suite_text(path)
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed suite config: {exc}") from exc
    return parse_suite(obj)


def _read_suite_text(path):
    p = Path(path)
    if p.is_file():
        return p.read_text()
    shipped = resources.files("hrverify") / "suites" / (p.name if p.suffix else p.name + ".json")
    if shipped.is_file():
        return shipped.read_text()
    raise UsageError(f"cannot read suite config {path!r}")


def _kl(entry: SuiteEntry, default):
    if entry.k is None:
        return [kl if isinstance(kl, tuple) else (kl, 0) for kl in default]
    return [tuple(kl) if isinstance(kl, tuple) else (kl, 0) for kl in entry.k]


def _equality_tasks(entry: SuiteEntry):
    e = I.CATALOGUE[entry.id]
    Qs = entry.Q or I.GRID_Q
    ps = (entry.p or I.GRID_P) if e.lp else (2.0,)
    for k, l in _kl(entry, e.ks or ((1, 0),)):
        for Q in Qs:
            for p in ps:
                base = ParamPoint(Q=Q, p=p, k=k, l=l)
                for prof in entry.profiles:
                    if e.critical:
                        Rs = entry.R or I.radius_grid(parse_profile(prof))
                        yield [base.replace(R=R) for R in Rs], prof
                    else:
                        alphas = entry.alpha or I.alpha_grid(e, base)
                        yield [base.replace(alpha=a) for a in alphas], prof


def _inequality_tasks(entry: SuiteEntry):
    eid = entry.id
    if entry.alpha is None and entry.R is None and entry.k is None:
        for _, P_, prof in I.inequality_grid([eid], entry.Q or I.GRID_Q, entry.p or I.GRID_P, entry.profiles):
            yield P_, prof
        return
    crit = eid in I.CRITICAL_INEQ or eid.startswith("UNC-crit")
    ps = (2.0,) if eid in I.L2_ONLY else (entry.p or I.GRID_P)
    for k, l in _kl(entry, I.INEQ_KS.get(eid, (1,))):
        for Q in entry.Q or I.GRID_Q:
            for p in ps:
                base = ParamPoint(Q=Q, p=p, k=k, l=l)
                info = K.sharp_info(eid, base)
                for prof in entry.profiles:
                    if crit:
                        for R in entry.R or I.sup_grid(parse_profile(prof)):
                            yield base.replace(R=R), prof
                    else:
                        for a in entry.alpha or [x for x in info.derived.interior() if info.derived.contains(x)]:
                            yield base.replace(alpha=a), prof


def _inequality_valid(eid, P_):
    if eid in ("UNC-crit-1", "UNC-crit-2") and not P_.p > 2:
        return False
    info = K.sharp_info(eid, P_)
    return bool(info.preconditions and info.derived.contains(P_.alpha))


def run_entry(entry: SuiteEntry):
    """All reports for one suite entry; raises UsageError if its grid is empty."""
    reports = []
    if entry.id.startswith("ID-"):
        tol = 1e-8 if entry.tol is None else entry.tol
        for plist, prof in _equality_tasks(entry):
            reports += I.evaluate_identity_batch(entry.id, plist, prof, tol, mutate=entry.mutate)
    else:
        if entry.mutate is not None:
            raise UsageError(f"{entry.id}: mutation applies to equality entries only")
        for P_, prof in _inequality_tasks(entry):
            if _inequality_valid(entry.id, P_):
                reports.append(I.evaluate_any(entry.id, P_, prof, entry.tol))
    if not reports:
        raise UsageError(f"{entry.id}: no admissible parameter points in the grid")
    return reports


def run_suite(config: SuiteConfig, progress=None):
    """Evaluate every entry; the result is sorted by id and then by parameters."""
    reports = []
    for entry in config.entries:
        reps = run_entry(entry)
        reports += reps
        if progress:
            progress(entry.id, reps)
    reports.sort(key=lambda r: (r.id, r.profile, sorted(r.params.items())))
    return reports


def suite_summary(reports):
    by_id = {}
    for r in reports:
        s = by_id.setdefault(r.id, {"evaluations": 0, "failures": 0, "errata": 0})
        s["evaluations"] += 1
        s["failures"] += r.verdict != "pass"
        s["errata"] += r.status == "erratum"
    return by_id


# ------------------------------------------------------------ commands

def _params_from_args(args):
    return ParamPoint(Q=args.q, p=args.p, alpha=args.alpha, k=args.k, l=args.l, R=args.R)


def _format_report(rep):
    lines = [f"{rep.id}  {rep.profile}  {rep.params}"]
    for t in rep.terms:
        lines.append(f"  {t.side:>3}  {t.name:<48} {t.value: .17g}")
    lines.append(f"  residual {rep.residual:.3e}  error bound {rep.error_bound:.3e}  scale {rep.scale:.3e}  tol {rep.tol:.1e}  "
                 f"status {rep.status}  verdict {rep.verdict}")
    for k in sorted(rep.extras):
        lines.append(f"  {k}: {rep.extras[k]}")
    return "\n".join(lines)


def cmd_check(args):
    if args.id not in ALL_IDS:
        raise UsageError(f"unknown catalogue id {args.id!r}")
    P_ = _params_from_args(args)
    if args.id.startswith("ID-") and I.CATALOGUE[args.id].critical and P_.R is None:
        raise UsageError(f"{args.id} needs --R")
    rep = I.evaluate_any(args.id, P_, args.profile, args.tol)
    _say(args, _format_report(rep))
    _emit_json(args.json, "check", rep.to_dict(), rep.verdict)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("name", "side", "value", "err"))
            for t in rep.terms:
                w.writerow((t.name, t.side, _num(t.value), _num(t.err)))
    return EXIT_PASS if rep.verdict == "pass" else EXIT_FAIL


def cmd_suite(args):
    cfg = load_suite(args.config)
    if args.tol is not None:
        for e in cfg.entries:
            e.tol = args.tol

    def progress(eid, reps):
        bad = sum(r.verdict != "pass" for r in reps)
        _say(args, f"{eid:<22} {len(reps):>5} evaluations  {bad} failed")

    reports = run_suite(cfg, progress)
    verdict = "pass" if all(r.verdict == "pass" for r in reports) else "fail"
    out = args.json or cfg.output
    payload = {"seed": cfg.seed, "summary": suite_summary(reports), "reports": [r.to_dict() for r in reports]}
    _emit_json(out, "suite", payload, verdict)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("id", "profile", "params", "residual", "scale", "status", "verdict"))
            for r in reports:
                w.writerow((r.id, r.profile, json.dumps(r.params, sort_keys=True), _num(r.residual),
                            _num(r.scale), r.status, r.verdict))
    _say(args, f"{len(reports)} evaluations, verdict {verdict}")
    return EXIT_PASS if verdict == "pass" else EXIT_FAIL


def _float_list(text):
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def cmd_sharpness(args):
    eid = args.id.replace("ID-", "INEQ-", 1)
    if eid not in I.INEQUALITY_IDS:
        raise UsageError(f"no sharpness family for {args.id!r}")
    try:
        trace = run_trace(eid, _params_from_args(args), grid=args.eps, R=args.R if args.R is not None else 3.0)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    _say(args, f"{trace.entry_id}  family {trace.family}  constant {trace.constant:.17g}")
    for x, lhs, rhs, q, gap in trace.rows():
        _say(args, f"  {x:<10.3g} lhs {lhs: .10e}  rhs {rhs: .10e}  quotient {q:.12g}  gap {gap:.4e}")
    _say(args, f"  slope ratio {trace.slope_ratio:.12g}  checks {trace.checks}  verdict {trace.verdict}")
    if args.csv:
        write_csv(trace, args.csv)
    _emit_json(args.json, "sharpness", trace.to_dict(), trace.verdict)
    return EXIT_PASS if trace.verdict == "pass" else EXIT_FAIL


def cmd_constants(args):
    table = K.constants_table(_params_from_args(args))
    rows = [{"name": c.name, "value": c.value, "valid": c.valid} for c in table]
    for c in table:
        _say(args, f"  {c.name:<48} {_num(c.value):>26}  {'valid' if c.valid else 'outside window'}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("name", "value", "valid"))
            for c in table:
                w.writerow((c.name, _num(c.value), c.valid))
    _emit_json(args.json, "constants", {"params": _params_from_args(args).as_dict(), "constants": rows}, "pass")
    return EXIT_PASS


def cmd_euclid(args):
    if args.n < 2 or args.ell < 0:
        raise UsageError("need n >= 2 and ell >= 0")
    tol = 1e-8 if args.tol is None else args.tol
    rep = check_identity(args.identity, ModeSpec(args.n, args.ell), args.profile, tol,
                         int(args.oracle_samples), args.seed)
    if not rep.extras.get("dimension_ok", True):
        _say(args, f"note: the {args.identity} identity is stated for n >= 7 (energy) or n >= 5 (mow)")
    d = rep.to_dict()
    if not args.quiet:
        print(dumps(d), end="")
    _emit_json(args.json, "euclid", d, rep.verdict)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("name", "side", "value", "err", "oracle", "oracle_se", "z"))
            for t in rep.terms:
                w.writerow((t["name"], t["side"], _num(t["value"]), _num(t["err"]),
                            _num(t.get("oracle", math.nan)), _num(t.get("oracle_se", math.nan)),
                            _num(t.get("z", math.nan))))
    return EXIT_PASS if rep.verdict == "pass" else EXIT_FAIL


# ------------------------------------------------------------ parser

def _count(text):
    v = float(text)
    if v < 0 or v != int(v):
        raise argparse.ArgumentTypeError("sample count must be a nonnegative integer")
    return int(v)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=None, help="verdict tolerance override")
    common.add_argument("--json", metavar="PATH", default=None, help="write a JSON report")
    common.add_argument("--csv", metavar="PATH", default=None, help="write a CSV table")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--quiet", action="store_true")

    params = argparse.ArgumentParser(add_help=False)
    params.add_argument("--q", type=float, default=5.0, help="homogeneous dimension Q")
    params.add_argument("--p", type=float, default=2.0)
    params.add_argument("--alpha", type=float, default=0.0)
    params.add_argument("--k", type=int, default=1)
    params.add_argument("--l", type=int, default=0)
    params.add_argument("--R", type=float, default=None, help="radius for critical entries")

    ap = argparse.ArgumentParser(prog="hr", description="Verify radial Hardy-Rellich identities and inequalities.")
    ap.add_argument("--version", action="version", version=f"hrverify {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common, params], help="evaluate one catalogue entry")
    p.add_argument("--id", required=True)
    p.add_argument("--profile", default="bump:1,2")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("suite", parents=[common], help="run a suite config")
    p.add_argument("config", help="config path, or the name of a shipped suite (full, mutated)")
    p.set_defaults(func=cmd_suite)

    p = sub.add_parser("sharpness", parents=[common, params], help="quotient trace along an extremizing family")
    p.add_argument("--id", required=True)
    p.add_argument("--eps", type=_float_list, default=list(DEFAULT_EPS), help="comma list of family parameters")
    p.set_defaults(func=cmd_sharpness)

    p = sub.add_parser("constants", parents=[common, params], help="table of sharp constants")
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("euclid", parents=[common], help="Euclidean spherical-mode identity check")
    p.add_argument("--identity", choices=IDENTITIES, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--ell", type=int, default=0)
    p.add_argument("--profile", default="pow:2*bump:1,2")
    p.add_argument("--oracle-samples", type=_count, default=0)
    p.set_defaults(func=cmd_euclid)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    try:
        return args.func(args)
    except (UsageError, QuadratureError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
