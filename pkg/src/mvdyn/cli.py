"""Command-line front end.

Exit codes: 0 success, 1 a check failed, 2 bad input.
"""

from __future__ import annotations

import argparse
import difflib
import json
import sys
from pathlib import Path
from typing import Optional

from . import corealg as ca
from . import fockrep as fr
from .covering import build_tail_graph, separation_test
from .dynsys import (
    BUILTINS,
    DEFAULT_GUARD,
    FiniteDynSys,
    InvalidSystem,
    bi_invariant_sets,
    invariant_sets,
    is_surjective,
    range_deficiency,
    resolve_system,
)
from .suites import SuiteConfig, all_suites
from .verdict import enumeration_scan, simplicity_verdict


class InputError(Exception):
    pass


def _load(spec: str) -> FiniteDynSys:
    try:
        return resolve_system(spec)
    except InvalidSystem as exc:
        where = f" (at {exc.where})" if exc.where is not None else ""
        raise InputError(f"invalid system {spec}: {exc}{where}") from None
    except KeyError as exc:
        raise InputError(f"{spec}: not a file and {exc.args[0]}") from None
    except OSError as exc:
        raise InputError(f"cannot read {spec}: {exc}") from None


def _guard(sys: FiniteDynSys, args):
    if sys.m > args.max_points:
        raise InputError(f"system has {sys.m} points, above --max-points {args.max_points}")


def _emit(payload: dict, args, text_lines: Optional[list] = None) -> str:
    if args.format == "json" or text_lines is None:
        out = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    else:
        out = "\n".join(text_lines) + "\n"
    sys.stdout.write(out)
    return out


def _config(args) -> SuiteConfig:
    return SuiteConfig(depth=args.depth, fock_depth=args.fock_depth, tail_window=args.tail_window,
                       tail_k=args.tail_k, seed=args.seed, max_dim=args.max_dim)


# -- commands ---------------------------------------------------------------


def cmd_analyze(args) -> int:
    s = _load(args.system)
    _guard(s, args)
    v = simplicity_verdict(s, args.tail_k)
    g = build_tail_graph(s)
    rd = range_deficiency(s)
    payload = {
        "system": s.label,
        "points": list(s.points),
        "n": s.n,
        "verdict": v.to_json(),
        "invariantSets": [s.names(A) for A in invariant_sets(s)],
        "biInvariantSets": [s.names(A) for A in bi_invariant_sets(s)],
        "deficiency": s.names(rd.deficiency),
        "tailGraph": {
            "edges": len(g.edges),
            "live": s.names(g.live),
            "cylinders": {str(d): len(g.cylinders(d)) for d in range(args.depth + 1)},
            "separates": separation_test(g).separates,
        },
    }
    lines = [
        f"system {s.label}: {s.m} points, {s.n} maps",
        f"minimal: {v.minimal}   surjective: {v.surjective}",
        f"simplicity: {v.simplicity}",
        f"O_n detection: {v.onDetection}",
        f"deficiency set U: {{{', '.join(payload['deficiency'])}}}",
        "invariant sets: " + ", ".join("{" + ",".join(A) + "}" for A in payload["invariantSets"]),
        "bi-invariant sets: " + ", ".join("{" + ",".join(A) + "}" for A in payload["biInvariantSets"]),
        f"live points: {{{', '.join(payload['tailGraph']['live'])}}}",
    ]
    for line in v.witnesses.get("chain", []):
        lines.append(f"  - {line}")
    if "n1Note" in v.witnesses:
        lines.append(v.witnesses["n1Note"])
    _emit(payload, args, lines)
    return 0


def _check_payload(s: FiniteDynSys, args) -> tuple[dict, bool]:
    results = all_suites(s, _config(args))
    ok = all(r.passed is not False for r in results)
    return {"system": s.label, "pass": ok, "checks": [r.to_json() for r in results]}, ok


def cmd_check(args) -> int:
    if args.enumerate:
        _enum_guard(args)
        rep = enumeration_scan(args.max_points, args.n)
        lines = [f"[{'pass' if rep['pass'] else 'FAIL'}] enumeration-equivalence: "
                 f"{rep['systems']} systems (|X| <= {args.max_points}, n = {args.n})",
                 f"  separation without simplicity (empirical cross-check): "
                 f"{len(rep['onImpliesSimpleCounterexamples'])}"]
        out = _emit(rep, args, lines)
        ok = rep["pass"]
    else:
        if args.system is None:
            raise InputError("check needs a system or --enumerate")
        s = _load(args.system)
        _guard(s, args)
        payload, ok = _check_payload(s, args)
        lines = [f"checks for {s.label}"]
        for r in payload["checks"]:
            extra = f" ({r['detail'].get('reason')})" if r["status"] == "skip" else ""
            lines.append(f"[{r['status']}] {r['suite']}/{r['name']}{extra}")
        lines.append("all checks pass" if ok else "some checks FAILED")
        out = _emit(payload, args, lines)
    if args.golden:
        try:
            expected = Path(args.golden).read_text()
        except OSError as exc:
            raise InputError(f"cannot read golden file: {exc}") from None
        if expected != out:
            diff = difflib.unified_diff(expected.splitlines(), out.splitlines(),
                                        "golden", "actual", lineterm="")
            sys.stderr.write("[FAIL] golden-file: output differs\n" + "\n".join(diff) + "\n")
            return 1
        sys.stderr.write("[pass] golden-file\n")
    return 0 if ok else 1


ENUM_LIMIT = 200_000


def _enum_guard(args):
    count = sum(m ** (m * args.n) for m in range(1, args.max_points + 1))
    if count > ENUM_LIMIT:
        raise InputError(f"enumeration would visit {count} systems, above the limit {ENUM_LIMIT}")


def cmd_enumerate(args) -> int:
    from .verdict import all_systems
    _enum_guard(args)
    counts: dict = {}
    for s in all_systems(args.max_points, args.n):
        v = simplicity_verdict(s)
        key = f"{v.simplicity}/{v.onDetection}"
        counts[key] = counts.get(key, 0) + 1
    rep = enumeration_scan(args.max_points, args.n)
    payload = {"maxPoints": args.max_points, "n": args.n, "systems": rep["systems"],
               "verdicts": dict(sorted(counts.items())), "equivalenceScan": rep["pass"],
               "onImpliesSimpleCounterexamples": rep["onImpliesSimpleCounterexamples"]}
    lines = [f"{rep['systems']} systems with at most {args.max_points} points and {args.n} maps"]
    lines += [f"  {k}: {c}" for k, c in sorted(counts.items())]
    lines.append(f"equivalence scan: {'pass' if rep['pass'] else 'FAIL'}")
    _emit(payload, args, lines)
    return 0 if rep["pass"] else 1


def cmd_export_dot(args) -> int:
    s = _load(args.system)
    dot = build_tail_graph(s).to_dot()
    if args.output:
        try:
            Path(args.output).write_text(dot)
        except OSError as exc:
            raise InputError(f"cannot write {args.output}: {exc}") from None
    else:
        sys.stdout.write(dot)
    return 0


def cmd_algebra(args) -> int:
    s = _load(args.system)
    _guard(s, args)
    g = build_tail_graph(s)
    one = ca.CoreElement.one(g)
    t1 = ca.CoreElement.term(g, (1,))
    payload: dict = {"system": s.label,
                     "t1_t1star": ca.multiply(t1, ca.adjoint(t1)).canonical_json()}
    lines = [f"algebra demos for {s.label}",
             f"t_1 t_1^* = chi_1: {ca.multiply(t1, ca.adjoint(t1)) == ca.CoreElement.function(ca.chi(g, (1,)))}"]
    if is_surjective(s):
        V = ca.isometry_v(g)
        vv = ca.multiply(ca.adjoint(V), V) == one
        payload["VstarV_is_one"] = vv
        payload["alpha_one"] = ca.alpha(one).canonical_json()
        payload["norm_V"] = float(ca.homogeneous_norm(V))
        lines += [f"V^* V = 1: {vv}", f"||V|| = {payload['norm_V']:.12g}"]
    else:
        lines.append("V and alpha need a surjective system")
    f = ca.CylinderFunction.constant(g, 1)
    lhs, rhs = ca.range_projection_formula((1,), f)
    payload["range_projection_formula_w1"] = lhs == rhs
    lines.append(f"t_1 f t_1^* = chi_1 (f o tau) for f = 1: {lhs == rhs}")
    _emit(payload, args, lines)
    return 0


def cmd_fock(args) -> int:
    s = _load(args.system)
    _guard(s, args)
    reports = []
    try:
        for x in range(s.m):
            rep = fr.build_orbit_rep(s, x, args.fock_depth, args.max_dim)
            for r in (fr.check_covariance(rep), fr.check_row_isometry(rep)):
                reports.append({**r, "point": s.points[x]})
    except fr.DimensionGuard as exc:
        raise InputError(str(exc)) from None
    maximal = {s.points[x]: fr.maximality_flag(s, x) for x in range(s.m)}
    payload = {"system": s.label, "L": args.fock_depth,
               "dim": fr.fock_dim(s.n, args.fock_depth), "reports": reports, "maximal": maximal}
    if args.dump:
        payload["dump"] = fr.build_orbit_rep(s, 0, args.fock_depth, args.max_dim).dump()
    ok = all(r["pass"] for r in reports)
    lines = [f"Fock checks for {s.label} at L = {args.fock_depth} (dim {payload['dim']})"]
    lines += [f"[{'pass' if r['pass'] else 'FAIL'}] {r['check']} at {r['point']}: "
              f"deviation {r['maxDeviation']}" for r in reports]
    lines.append("maximal orbit representations: " + ", ".join(k for k, v in maximal.items() if v))
    _emit(payload, args, lines)
    return 0 if ok else 1


# -- parser -----------------------------------------------------------------


def _nonneg(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _pos(text: str) -> int:
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--depth", type=_nonneg, default=3, help="cylinder depth D")
    common.add_argument("--fock-depth", type=_nonneg, default=3, help="Fock truncation L")
    common.add_argument("--tail-window", type=_nonneg, default=2, help="tail window S")
    common.add_argument("--tail-k", type=_pos, default=3, help="tail depth K")
    common.add_argument("--format", choices=("json", "text"), default="text")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--max-points", type=_pos, default=DEFAULT_GUARD)
    common.add_argument("--max-dim", type=_pos, default=fr.DEFAULT_MAX_DIM)

    p = argparse.ArgumentParser(prog="mvdyn", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sys_help = f"system JSON file or builtin name ({', '.join(BUILTINS)})"

    a = sub.add_parser("analyze", parents=[common], help="verdict and lattices")
    a.add_argument("system", help=sys_help)
    a.set_defaults(func=cmd_analyze)

    c = sub.add_parser("check", parents=[common], help="run the named check suites")
    c.add_argument("system", nargs="?", help=sys_help)
    c.add_argument("--enumerate", action="store_true", help="exhaustive small-system scan")
    c.add_argument("--n", type=_pos, default=2, help="number of maps for --enumerate")
    c.add_argument("--golden", help="compare output with this file")
    c.set_defaults(func=cmd_check)

    e = sub.add_parser("enumerate", parents=[common], help="verdict counts over small systems")
    e.add_argument("--n", type=_pos, default=2)
    e.set_defaults(func=cmd_enumerate)

    d = sub.add_parser("export-dot", parents=[common], help="tail graph as DOT")
    d.add_argument("system", help=sys_help)
    d.add_argument("-o", "--output")
    d.set_defaults(func=cmd_export_dot)

    al = sub.add_parser("algebra", parents=[common], help="symbolic algebra demos")
    al.add_argument("system", help=sys_help)
    al.set_defaults(func=cmd_algebra)

    fk = sub.add_parser("fock", parents=[common], help="Fock representation checks")
    fk.add_argument("system", help=sys_help)
    fk.add_argument("--dump", action="store_true", help="include triplet matrix dumps")
    fk.set_defaults(func=cmd_fock)
    return p


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    if args.command in ("enumerate",) and args.max_points == DEFAULT_GUARD:
        args.max_points = 3
    if args.command == "check" and args.enumerate and args.max_points == DEFAULT_GUARD:
        args.max_points = 3
    try:
        return args.func(args)
    except InputError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
