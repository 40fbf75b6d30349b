"""Command-line front end: ``histkit <command> ...``.

Exit codes: 0 pass/sat/holds, 1 fail/unsat, 2 usage or contract error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import __version__
from .hislogic import SingleFamilyViolation, check_homomorphism, load_rays, search_valuation
from .linalg import ContractError, Tolerances
from .queries import evaluate, jsonable, run_query
from .scenario_file import dump_scenario, parse_scenario
from .scenarios import DEMOS, ks_report

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


class UsageError(Exception):
    pass


def _tolerances(args) -> Tolerances:
    return Tolerances.from_env(eps_decoherence=args.eps)


def load_scenario(source: str, tol: Tolerances):
    """Parse a scenario file; a bundled demo name is accepted when no such file exists."""
    path = Path(source)
    if path.exists():
        return parse_scenario(path.read_text(), tol)
    if source in DEMOS:
        return DEMOS[source]()
    raise UsageError(f"scenario file {source!r} not found")


def cmd_check(args, tol):
    s = load_scenario(args.file, tol)
    r = run_query(s, {"op": "check", "family": args.family, "mode": args.mode}, tol)
    return r, r["passed"]


def cmd_prob(args, tol):
    s = load_scenario(args.file, tol)
    if args.history is not None:
        r = run_query(s, {"op": "probability", "family": args.family, "history": args.history}, tol)
    else:
        r = run_query(s, {"op": "probabilities", "family": args.family}, tol)
    return r, True


def cmd_implies(args, tol):
    s = load_scenario(args.file, tol)
    q = {"op": "implies", "family": args.family, "a": args.a, "b": args.b}
    if args.a_family:
        q["a_family"] = args.a_family
    if args.b_family:
        q["b_family"] = args.b_family
    r = run_query(s, q, tol)
    return r, r["verdict"] == "holds"


def cmd_color(args, tol):
    c = load_rays(args.rays, tol)
    res = search_valuation(c, args.mode, args.seed, args.enumerate)
    r = res.as_dict(c)
    r.update(elements=len(c), contexts=len(c.contexts))
    if res.sat:
        r["homomorphism"] = check_homomorphism(res.valuation, c, tol).as_dict()
    return r, res.sat


def cmd_demo(args, tol):
    if args.name == "ks":
        r = ks_report()
    else:
        r = evaluate(DEMOS[args.name](), tol)
    return r, r["passed"]


def cmd_export(args, tol):
    text = dump_scenario(DEMOS[args.name]())
    Path(args.output).write_text(text)
    return {"scenario": args.name, "written": args.output, "bytes": len(text)}, True


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--eps", type=float, default=None,
                        help="decoherence tolerance (overrides HISTKIT_EPS_DECOHERENCE)")
    p = argparse.ArgumentParser(prog="histkit", description="Consistent-histories toolkit.")
    p.add_argument("--version", action="version", version=f"histkit {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("check", parents=[common], help="decoherence check of one family")
    s.add_argument("file")
    s.add_argument("--family", required=True)
    s.add_argument("--mode", choices=("medium", "weak"), default="medium")
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("prob", parents=[common], help="history probabilities")
    s.add_argument("file")
    s.add_argument("--family", required=True)
    s.add_argument("--history", default=None, help="mask spec, e.g. '@1:10;@2:01'")
    s.set_defaults(func=cmd_prob)

    s = sub.add_parser("implies", parents=[common], help="probabilistic implication a => b")
    s.add_argument("file")
    s.add_argument("--family", required=True)
    s.add_argument("--a", required=True)
    s.add_argument("--b", required=True)
    s.add_argument("--a-family", default=None, help="family the a mask refers to (default --family)")
    s.add_argument("--b-family", default=None, help="family the b mask refers to (default --family)")
    s.set_defaults(func=cmd_implies)

    s = sub.add_parser("color", parents=[common], help="two-valued valuation search on a ray set")
    s.add_argument("--rays", required=True, help="ray file or bundled set name")
    s.add_argument("--mode", choices=("backtracking", "exhaustive"), default="backtracking")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--enumerate", action="store_true")
    s.set_defaults(func=cmd_color)

    s = sub.add_parser("demo", parents=[common], help="run a bundled scenario self-test")
    s.add_argument("name", choices=[*DEMOS, "ks"])
    s.set_defaults(func=cmd_demo)

    s = sub.add_parser("export-demo", parents=[common], help="write a bundled scenario file")
    s.add_argument("name", choices=list(DEMOS))
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_export)
    return p


def _text(value, indent=0) -> list:
    pad = "  " * indent
    lines = []
    if isinstance(value, dict):
        for k, v in value.items():
            if isinstance(v, (dict, list)) and v:
                lines.append(f"{pad}{k}:")
                lines += _text(v, indent + 1)
            else:
                lines.append(f"{pad}{k}: {v}")
    elif isinstance(value, list):
        for v in value:
            if isinstance(v, (dict, list)):
                sub = _text(v, indent + 1)
                lines.append(f"{pad}- " + sub[0].lstrip() if sub else f"{pad}-")
                lines += sub[1:]
            else:
                lines.append(f"{pad}- {v}")
    else:
        lines.append(f"{pad}{value}")
    return lines


def emit(report: dict, fmt: str, stream) -> None:
    if fmt == "json":
        stream.write(json.dumps(report, indent=1) + "\n")
    else:
        stream.write("\n".join(_text(report)) + "\n")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    start = time.perf_counter()
    report = {"tool": "histkit", "version": __version__, "command": args.command}
    try:
        tol = _tolerances(args)
        report["tolerances"] = tol.as_dict()
        result, ok = args.func(args, tol)
        code = EXIT_OK if ok else EXIT_FAIL
        report.update(status="pass" if ok else "fail", result=jsonable(result))
    except SingleFamilyViolation as exc:
        code = EXIT_ERROR
        report.update(status="error", error=type(exc).__name__, message=str(exc))
    except (ContractError, UsageError, KeyError, OSError) as exc:
        code = EXIT_ERROR
        msg = str(exc) if not isinstance(exc, KeyError) else f"missing key {exc}"
        report.update(status="error", error=type(exc).__name__, message=msg)
    report["exit_code"] = code
    report["elapsed_s"] = time.perf_counter() - start
    emit(report, args.format, sys.stdout)
    if code == EXIT_ERROR:
        sys.stderr.write(f"histkit: {report['message']}\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
