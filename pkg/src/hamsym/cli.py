"""Command-line front end: run invariance checks, build and verify first
integrals, simulate trajectories and monitor conservation drift.

Exit codes: 0 all requested verdicts pass, 1 verdict failure, 2 usage or
parse error, 3 numeric abort during integration.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .dynamics import (
    IntegrationError,
    IntegratorConfig,
    SingularityAbort,
    drift,
    integrate,
)
from .expressions import DEFAULT_TOL
from .identity import identity_check
from .noether import (
    InvarianceError,
    build_report,
    first_integral,
    relation_check,
    verify_first_integral,
)
from .parsing import (
    ParseContext,
    ParseError,
    SchemaError,
    format_expression,
    parse_expression,
    parse_system_file,
)
from .registry import example_names, load_example
from .systems import FirstIntegral, SystemDefinition, SystemError

__all__ = ["main"]

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3


def _add_common(parser: argparse.ArgumentParser, needs_source: bool = True) -> None:
    parser.add_argument("--json", action="store_true", help="emit a JSON report")
    parser.add_argument("--seed", type=int, default=0, metavar="U64", help="seed for numeric verdicts")
    parser.add_argument("--tol", type=float, default=DEFAULT_TOL, metavar="FLOAT", help="zero-test tolerance")
    parser.add_argument("--force", action="store_true", help="construct integrals despite failed invariance")
    if needs_source:
        source = parser.add_mutually_exclusive_group()
        source.add_argument("--example", metavar="NAME", help="built-in example system")
        source.add_argument("--file", metavar="PATH", help="system definition file")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hamsym", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"hamsym {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="run invariance checks for each symmetry")
    _add_common(p)
    p.add_argument("--symmetry", metavar="NAME", help="restrict to one symmetry")

    p = sub.add_parser("integral", help="construct and verify a first integral")
    _add_common(p)
    p.add_argument("symmetry", help="symmetry name")

    p = sub.add_parser("verify", help="test whether an expression is a first integral")
    _add_common(p)
    p.add_argument("expression", help="expression in (t, q, p)")

    p = sub.add_parser("simulate", help="integrate the canonical equations and report drift")
    _add_common(p)
    p.add_argument("--state", required=True, metavar="X1,...", help="initial state q1..qn,p1..pn")
    p.add_argument("--method", default="rk4", choices=("rk4", "implicit_midpoint"))
    p.add_argument("--h", type=float, default=1e-3, help="step size")
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--t1", type=float, default=1.0)
    p.add_argument("--csv", metavar="PATH", help="dump the trajectory as CSV")
    p.add_argument("--modulo", type=float, help="fold drift onto this period (angle-valued integrals)")

    p = sub.add_parser("identity-check", help="test the off-shell identities on random data")
    _add_common(p, needs_source=False)
    p.add_argument("--n", type=int, default=2, help="phase-space dimension")
    p.add_argument("--degree", type=int, default=3, help="Hamiltonian degree bound")
    p.add_argument("--count", type=int, default=10, help="number of random pairs")
    p.add_argument("--corrupt", action="store_true", help=argparse.SUPPRESS)

    p = sub.add_parser("examples", help="list built-in examples")
    _add_common(p, needs_source=False)
    return parser


def _load(args) -> SystemDefinition:
    if args.example is not None:
        return load_example(args.example)
    if args.file is not None:
        with open(args.file, encoding="utf-8") as handle:
            return parse_system_file(handle.read())
    raise SystemError("one of --example or --file is required")


def _verdict_dict(verdict) -> dict:
    out = {"status": verdict.status}
    if verdict.witness is not None:
        out["witness"] = verdict.witness
    if verdict.points is not None:
        out["points"] = verdict.points
    if verdict.tolerance is not None:
        out["tolerance"] = verdict.tolerance
    return out


def _symmetry_entry(report) -> dict:
    entry = {
        "name": report.symmetry,
        "theorem1": _verdict_dict(report.verdict_theorem1),
        "divergence": {"status": report.divergence_status},
        "theorem4": [v.status for v in report.theorem4_verdicts],
        "direct": [v.status for v in report.direct_invariance_verdicts],
    }
    if report.divergence is not None:
        entry["divergence"]["v"] = format_expression(report.divergence.v)
    if report.integral is not None:
        entry["integral"] = {
            "expr": format_expression(report.integral.expression),
            "verified": _verdict_dict(report.integral.verified),
        }
    return entry


def _symmetry_passes(report) -> bool:
    if report.verdict_theorem1.is_zero:
        return True
    return report.divergence_verdict is not None and report.divergence_verdict.is_zero


def _system_report(defn: SystemDefinition, args, names=None):
    """Per-symmetry reports plus relation verdicts; returns (json dict,
    InvarianceReport list, all-pass flag)."""
    sys_ = defn.system
    out = {
        "version": __version__,
        "seed": args.seed,
        "system": {"n": sys_.n, "hamiltonian": format_expression(sys_.hamiltonian)},
        "symmetries": [],
        "relations": [],
    }
    selected = [s for s in defn.symmetries if names is None or s.name in names]
    if names is not None and len(selected) != len(names):
        missing = sorted(set(names) - {s.name for s in selected})
        raise SystemError(f"unknown symmetry {missing[0]!r}")
    reports = []
    ok = True
    integrals = {}
    for X in selected:
        report = build_report(sys_, X, seed=args.seed, tol=args.tol)
        reports.append(report)
        out["symmetries"].append(_symmetry_entry(report))
        ok = ok and _symmetry_passes(report)
        if report.integral is not None:
            integrals[X.name] = report.integral.expression
    for relation in defn.relations:
        referenced = {s.name for s in relation.expression.free_symbols} - set(sys_.parameters)
        if not referenced <= set(integrals):
            out["relations"].append({"name": relation.name, "status": "skipped"})
            continue
        verdict = relation_check(integrals, relation, sys_, seed=args.seed, tol=args.tol)
        out["relations"].append({"name": relation.name, "status": verdict.status})
        ok = ok and verdict.is_zero
    return out, reports, ok


def _emit(args, payload: dict, lines: list[str]) -> None:
    if args.json:
        print(json.dumps(payload, indent=2))
    else:
        for line in lines:
            print(line)


def _describe_symmetry(entry: dict) -> str:
    bits = [f"theorem1 {entry['theorem1']['status']}", f"divergence {entry['divergence']['status']}"]
    if "v" in entry["divergence"] and entry["divergence"]["v"] != "0":
        bits.append(f"v = {entry['divergence']['v']}")
    bits.append("theorem4 " + ("pass" if all(s in ("proven-zero", "numerically-zero") for s in entry["theorem4"]) else "fail"))
    bits.append("direct " + ("pass" if all(s in ("proven-zero", "numerically-zero") for s in entry["direct"]) else "fail"))
    if "integral" in entry:
        bits.append(f"integral {entry['integral']['expr']} ({entry['integral']['verified']['status']})")
    else:
        bits.append("no integral")
    return f"{entry['name']}: " + "; ".join(bits)


def cmd_check(args) -> int:
    defn = _load(args)
    names = [args.symmetry] if args.symmetry else None
    payload, _, ok = _system_report(defn, args, names)
    lines = [_describe_symmetry(e) for e in payload["symmetries"]]
    lines += [f"relation {r['name']}: {r['status']}" for r in payload["relations"]]
    _emit(args, payload, lines)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_integral(args) -> int:
    defn = _load(args)
    X = defn.symmetry(args.symmetry)
    try:
        integral = first_integral(
            defn.system, X, v=X.v, force=args.force, seed=args.seed, tol=args.tol
        )
    except InvarianceError as exc:
        if args.json:
            print(json.dumps({"version": __version__, "seed": args.seed, "error": str(exc)}, indent=2))
        else:
            print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    payload = {
        "version": __version__,
        "seed": args.seed,
        "system": {"n": defn.system.n, "hamiltonian": format_expression(defn.system.hamiltonian)},
        "symmetries": [
            {
                "name": X.name,
                "integral": {
                    "expr": format_expression(integral.expression),
                    "verified": _verdict_dict(integral.verified),
                },
            }
        ],
        "relations": [],
    }
    lines = [f"{X.name}: I = {format_expression(integral.expression)} ({integral.verified.status})"]
    _emit(args, payload, lines)
    return EXIT_OK if integral.verified.is_zero else EXIT_FAIL


def cmd_verify(args) -> int:
    defn = _load(args)
    sys_ = defn.system
    ctx = ParseContext(n=sys_.n, parameters=frozenset(sys_.parameters), allow_jet=False)
    expr = parse_expression(args.expression, ctx)
    verdict = verify_first_integral(sys_, expr, seed=args.seed, tol=args.tol)
    payload = {
        "version": __version__,
        "seed": args.seed,
        "system": {"n": sys_.n, "hamiltonian": format_expression(sys_.hamiltonian)},
        "expression": format_expression(expr),
        "verdict": _verdict_dict(verdict),
    }
    _emit(args, payload, [f"{format_expression(expr)}: {verdict.status}"])
    return EXIT_OK if verdict.is_zero else EXIT_FAIL


def _parse_state(raw: str, n: int) -> list[float]:
    try:
        state = [float(part) for part in raw.split(",")]
    except ValueError as exc:
        raise SystemError(f"bad state component: {exc}") from None
    if len(state) != 2 * n:
        raise SystemError(f"state needs {2 * n} components (q1..qn, p1..pn), got {len(state)}")
    return state


def _write_csv(path: str, trajectory, n: int) -> None:
    header = "t," + ",".join(f"q{i}" for i in range(1, n + 1)) + "," + ",".join(
        f"p{i}" for i in range(1, n + 1)
    )
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(header + "\n")
        for t, y in zip(trajectory.times, trajectory.states):
            handle.write(",".join(f"{x:.17g}" for x in (t, *y)) + "\n")


def cmd_simulate(args) -> int:
    defn = _load(args)
    sys_ = defn.system
    state0 = _parse_state(args.state, sys_.n)
    config = IntegratorConfig(method=args.method, h=args.h, t0=args.t0, t1=args.t1)
    payload, reports, _ = _system_report(defn, args)
    integrals = [r.integral for r in reports if r.integral is not None]
    named = {i.name: i.expression for i in integrals}
    # relations evaluate to constants along trajectories too; drift them as
    # synthetic integrals so conserved relations are witnessed numerically
    for relation in defn.relations:
        referenced = {s.name for s in relation.expression.free_symbols} - set(sys_.parameters)
        if referenced <= set(named):
            subs = {s: named[s.name] for s in relation.expression.free_symbols if s.name in named}
            integrals.append(
                FirstIntegral(name=relation.name, expression=relation.expression.subs(subs, simultaneous=True))
            )
    try:
        trajectory = integrate(sys_, state0, config)
        report = drift(sys_, integrals, trajectory, modulo=args.modulo)
    except SingularityAbort as exc:
        if args.json:
            payload["error"] = str(exc)
            payload["time_reached"] = exc.time_reached
            print(json.dumps(payload, indent=2))
        else:
            print(f"numeric abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.csv:
        _write_csv(args.csv, trajectory, sys_.n)
    payload["drift"] = [
        {"integral": e.integral, "max_abs": e.max_abs, "relative": e.relative} for e in report.entries
    ]
    ok = all(r.integral is None or r.integral.verified.is_zero for r in reports)
    lines = [_describe_symmetry(e) for e in payload["symmetries"]]
    lines += [
        f"drift {e.integral}: max {e.max_abs:.3e} (relative {e.relative:.3e})" for e in report.entries
    ]
    _emit(args, payload, lines)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_identity_check(args) -> int:
    if args.n < 1:
        raise SystemError("--n must be >= 1")
    report = identity_check(
        args.n, args.degree, args.count, seed=args.seed, tol=args.tol, corrupt=args.corrupt
    )
    payload = {
        "version": __version__,
        "seed": args.seed,
        "identity": {
            "n": report.n,
            "degree": report.degree,
            "count": report.count,
            "passed": report.passed,
            "cases": [
                {
                    "index": case.index,
                    "hamiltonian": format_expression(case.system.hamiltonian),
                    "lemma1": _verdict_dict(case.lemma1),
                    "lemma2": [v.status for v in case.lemma2],
                }
                for case in report.cases
            ],
        },
    }
    lines = [
        f"identity check: n={report.n} degree={report.degree} count={report.count} -> "
        + ("pass" if report.passed else "FAIL")
    ]
    lines += report.failures()
    _emit(args, payload, lines)
    if not report.passed and not args.json:
        for failure in report.failures():
            print(failure, file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_examples(args) -> int:
    names = example_names()
    _emit(args, {"version": __version__, "examples": names}, names)
    return EXIT_OK


_COMMANDS = {
    "check": cmd_check,
    "integral": cmd_integral,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
    "identity-check": cmd_identity_check,
    "examples": cmd_examples,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ParseError, SchemaError, IntegrationError, SystemError, KeyError, OSError, ValueError) as exc:
        if isinstance(exc, SingularityAbort):
            print(f"numeric abort: {exc}", file=sys.stderr)
            return EXIT_NUMERIC
        message = str(exc) if not isinstance(exc, KeyError) else str(exc.args[0])
        print(f"error: {message}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
