"""Command-line interface: ``bhlcheck verify|explain|demo|specs``.

Exit codes: 0 all VCs proved, 1 some VC not proved, 2 frontend or usage
error, 3 I/O or data error, 4 demo refused on an unverified program.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

from bhlcheck import __version__
from bhlcheck.entail import DEFAULT_DEPTH, PROVED, PValueGoal
from bhlcheck.frontend import FrontendError, load_program, pretty_print
from bhlcheck.frontend.errors import Diagnostic, line_col
from bhlcheck.logic import LogicError
from bhlcheck.numstat import NumstatError, read_csv_bindings, run_demo
from bhlcheck.smtlib import UnsupportedConstruct, emit_smtlib, smt_filename
from bhlcheck.vcgen import VcgenError, discharge_vc, generate_program_vcs

EXIT_OK, EXIT_FAIL, EXIT_FRONTEND, EXIT_IO, EXIT_REFUSED = 0, 1, 2, 3, 4
REPORT_SCHEMA = "bhlcheck-report/1"


class UnknownVC(Exception):
    pass


def default_depth() -> int:
    env = os.environ.get("BHL_DEPTH")
    if env:
        try:
            return int(env)
        except ValueError:
            pass
    return DEFAULT_DEPTH


class _Loaded:
    def __init__(self, path: str, source: str, data: bytes):
        self.path = path
        self.source = source
        self.digest = hashlib.sha256(data).hexdigest()


def _read(path: str) -> _Loaded:
    data = Path(path).read_bytes()
    return _Loaded(path, data.decode("utf-8"), data)


def _frontend_error(err: FrontendError, src: _Loaded, fmt: str = "text") -> int:
    if fmt == "json":
        doc = {
            "schema": REPORT_SCHEMA,
            "tool": "bhlcheck",
            "version": __version__,
            "input": {"path": src.path, "sha256": src.digest},
            "verdict": "error",
            "diagnostics": [err.diagnostic.as_json(src.source, src.path)],
        }
        print(json.dumps(doc, indent=2))
    else:
        print(err.diagnostic.render(src.source, src.path), file=sys.stderr)
    return EXIT_FRONTEND


def _load(args):
    """(loaded source, program, vcs) or an exit code."""
    try:
        src = _read(args.path)
    except (OSError, UnicodeDecodeError) as err:
        print(f"error: cannot read {args.path}: {err}", file=sys.stderr)
        return EXIT_IO
    try:
        program = load_program(src.source)
        vcs = generate_program_vcs(program)
    except FrontendError as err:
        return _frontend_error(err, src, getattr(args, "format", "text"))
    except (VcgenError, LogicError) as err:
        print(f"{src.path}: error: {err}", file=sys.stderr)
        return EXIT_FRONTEND
    return src, program, vcs


def _discharge(vcs, depth: int, timeout: float | None, jobs: int):
    def run(vc):
        t0 = time.perf_counter()
        r = discharge_vc(vc, depth, timeout)
        return r, time.perf_counter() - t0

    if jobs <= 1:
        return [run(vc) for vc in vcs]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run, vcs))


def _missing_text(m) -> str:
    return str(m) if isinstance(m, (str, PValueGoal)) else pretty_print(m)


def build_report(src: _Loaded, program, vcs, results, timings: bool = False) -> dict:
    functions = []
    for fn in program.functions:
        entries = []
        for vc, (r, secs) in zip(vcs, results):
            if vc.function != fn.name:
                continue
            line, col = line_col(src.source, vc.loc.start)
            e = {
                "id": vc.index,
                "label": vc.label,
                "kind": vc.kind,
                "goal": vc.goal_text,
                "status": r.status,
                "missing": [_missing_text(m) for m in r.missing],
                "trace": list(r.trace),
                "trace_length": len(r.trace),
                "location": {"line": line, "col": col},
            }
            if r.detail:
                e["detail"] = r.detail
            if timings:
                e["wall_time_ms"] = round(secs * 1000, 3)
            entries.append(e)
        ok = all(e["status"] == PROVED for e in entries)
        functions.append({"name": fn.name, "verdict": "pass" if ok else "fail", "vcs": entries})
    verdict = "pass" if all(r.status == PROVED for r, _ in results) else "fail"
    return {
        "schema": REPORT_SCHEMA,
        "tool": "bhlcheck",
        "version": __version__,
        "input": {"path": src.path, "sha256": src.digest},
        "verdict": verdict,
        "functions": functions,
    }


def render_text(report: dict) -> str:
    path = report["input"]["path"]
    out = []
    total = proved = 0
    for fn in report["functions"]:
        out.append(f"function {fn['name']}: {fn['verdict'].upper()}")
        for vc in fn["vcs"]:
            total += 1
            loc = vc["location"]
            if vc["status"] == PROVED:
                proved += 1
                out.append(f"  [{vc['id']}] proved  {vc['label']}")
                continue
            out.append(f"  [{vc['id']}] {vc['status'].upper()}  {vc['label']}")
            out.append(f"      {path}:{loc['line']}:{loc['col']}: error: unproved: {vc['goal']}")
            for m in vc["missing"]:
                out.append(f"      missing: {m}")
            if vc.get("detail"):
                out.append(f"      note: {vc['detail']}")
    out.append(f"verdict: {report['verdict'].upper()} ({proved} of {total} VCs proved)")
    return "\n".join(out)


def _emit_smt(directory: str, vcs) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for vc in vcs:
        try:
            text = emit_smtlib(vc)
        except UnsupportedConstruct as err:
            text = f"; {vc.function} #{vc.index}: not in the SMT fragment: {err}\n"
        (d / smt_filename(vc)).write_text(text, encoding="utf-8")


def cmd_verify(args) -> int:
    loaded = _load(args)
    if isinstance(loaded, int):
        return loaded
    src, program, vcs = loaded
    results = _discharge(vcs, args.depth, args.timeout, args.jobs)
    if args.emit_smt:
        try:
            _emit_smt(args.emit_smt, vcs)
        except OSError as err:
            print(f"error: cannot write SMT files: {err}", file=sys.stderr)
            return EXIT_IO
    report = build_report(src, program, vcs, results, timings=args.timings)
    if args.format == "json":
        print(json.dumps(report, indent=2, sort_keys=False))
    else:
        print(render_text(report))
    return EXIT_OK if report["verdict"] == "pass" else EXIT_FAIL


def explain_text(src: _Loaded, vc, result) -> str:
    out = [f"VC {vc.index} in function {vc.function} ({vc.kind})", f"  label: {vc.label}"]
    diag = Diagnostic("VC", vc.label, vc.loc, severity="note").render(src.source, src.path)
    out += ["  source:"] + ["    " + ln for ln in diag.splitlines()]
    out.append("  hypotheses:")
    for f in vc.facts:
        origin = f"requires[{f.origin}]" if isinstance(f.origin, int) else str(f.origin)
        out.append(f"    {pretty_print(f.formula)}    ({origin})")
    hist = vc.history
    out.append(f"  history ({'complete' if hist.closed else 'newest entries only'}, newest first):")
    for e in hist.entries:
        out.append(f"    {e.test_name}: {pretty_print(e.hypothesis)} with {pretty_record_text(e.pvalue)}")
    if not hist.entries:
        out.append("    (empty)")
    out.append(f"  goal: {vc.goal_text}")
    out.append(f"  status: {result.status}")
    if result.proved:
        out.append("  trace: [" + ", ".join(result.trace) + "]")
    else:
        out.append("  missing:")
        for m in result.missing:
            out.append(f"    {_missing_text(m)}")
        if result.detail:
            out.append(f"  note: {result.detail}")
    return "\n".join(out)


def pretty_record_text(r) -> str:
    from bhlcheck.frontend.printer import pretty_record

    return pretty_record(r)


def cmd_explain(args) -> int:
    loaded = _load(args)
    if isinstance(loaded, int):
        return loaded
    src, program, vcs = loaded
    try:
        vc = _find_vc(vcs, args.vc_id)
    except UnknownVC as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_FRONTEND
    result = discharge_vc(vc, args.depth, args.timeout)
    print(explain_text(src, vc, result))
    return EXIT_OK if result.proved else EXIT_FAIL


def _find_vc(vcs, ident: str):
    try:
        k = int(ident)
    except ValueError:
        raise UnknownVC(f"VC id must be an integer, got {ident!r}") from None
    for vc in vcs:
        if vc.index == k:
            return vc
    raise UnknownVC(f"no VC with id {k} (valid ids: 0..{len(vcs) - 1})")


def cmd_demo(args) -> int:
    loaded = _load(args)
    if isinstance(loaded, int):
        return loaded
    src, program, vcs = loaded
    results = _discharge(vcs, args.depth, args.timeout, 1)
    verified = all(r.proved for r, _ in results)
    if not verified and not args.force:
        print(
            f"{src.path}: refusing to run: the program does not verify "
            "(run `bhlcheck verify` for details, or pass --force)",
            file=sys.stderr,
        )
        return EXIT_REFUSED
    try:
        bindings = read_csv_bindings(Path(args.csv).read_text(encoding="utf-8"))
        report = run_demo(program, bindings)
    except (OSError, UnicodeDecodeError) as err:
        print(f"error: cannot read {args.csv}: {err}", file=sys.stderr)
        return EXIT_IO
    except NumstatError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_IO
    if not verified:
        print("WARNING: this program did NOT verify; the numbers below are not backed by a proof")
    print(report.render())
    return EXIT_OK


def cmd_specs(args) -> int:
    from bhlcheck.specs import spec_library_json

    print(json.dumps(spec_library_json(), indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bhlcheck", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"bhlcheck {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("path", help=".swl program")
        sp.add_argument("--depth", type=int, default=default_depth(), help="witness-world limit (default 12, env BHL_DEPTH)")
        sp.add_argument("--timeout", type=float, default=10.0, help="seconds per VC (default 10)")

    v = sub.add_parser("verify", help="verify a program")
    common(v)
    v.add_argument("--format", choices=("text", "json"), default="text")
    v.add_argument("--emit-smt", metavar="DIR", help="write one SMT-LIB2 file per VC into DIR")
    v.add_argument("--jobs", type=int, default=1, help="parallel VC workers")
    v.add_argument("--timings", action="store_true", help="include wall times in the report")
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("explain", help="show one VC with its proof trace or missing subgoals")
    common(e)
    e.add_argument("vc_id", help="VC id as printed by verify")
    e.set_defaults(func=cmd_explain)

    d = sub.add_parser("demo", help="run a verified program on CSV data")
    common(d)
    d.add_argument("csv", help="CSV file, one column per dataset")
    d.add_argument("--force", action="store_true", help="run even if verification fails")
    d.set_defaults(func=cmd_demo)

    s = sub.add_parser("specs", help="print the command specification library as JSON")
    s.set_defaults(func=cmd_specs)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
