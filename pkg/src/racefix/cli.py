"""Command-line interface.

Exit codes: 0 when no bugs remain (or everything was fixed), 1 when bugs
remain or a repair ends Partial/Exhausted, 2 on usage, parse, I/O or JSON
errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from functools import partial
from pathlib import Path
from typing import List, Optional, Sequence, TextIO

from .corpus import corpus_files
from .deadlock import build_lock_order, find_deadlock_cycles
from .driver import AUTO, FIXED, INTERACTIVE, Candidate, RepairConfig, repair, validate
from .lang import FrontendError, Program, parse_program
from .lang.render import render_program
from .lowering import unified_diff
from .races import analyze
from .serialize import (
    FormatError, bugs_to_json, result_to_json, summaries_from_json,
    summaries_to_json,
)
from .summaries import SummaryMap

log = logging.getLogger("racefix")

EXIT_OK, EXIT_BUGS, EXIT_ERROR = 0, 1, 2
MAX_BAD_CHOICES = 3


class UsageError(Exception):
    pass


def _add_fix_options(p: argparse.ArgumentParser):
    p.add_argument("--mode", choices=[AUTO, INTERACTIVE], default=AUTO)
    p.add_argument("--max-iterations", type=int, default=10, metavar="N")
    p.add_argument("--lock-strategy", choices=["frequency", "distance"], default="frequency")
    p.add_argument("--target", choices=["root", "callsite"], default="root")
    p.add_argument("--write", action="store_true", help="rewrite input files in place")
    p.add_argument("--figures", action="store_true",
                   help="with --out, also render PNG figures")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="racefix",
        description="Find data races in MiniJava-CC programs and repair them.")
    ap.add_argument("-v", "--verbose", action="store_true")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, metavar="DIR", help="write reports to DIR")
    common.add_argument("--report", choices=["text", "json"], default="text")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common], help="report races")
    p.add_argument("files", nargs="+", type=Path)
    p = sub.add_parser("validate", parents=[common], help="report races and lock-order cycles")
    p.add_argument("files", nargs="+", type=Path)
    p = sub.add_parser("fix", parents=[common], help="repair races")
    p.add_argument("files", nargs="+", type=Path)
    _add_fix_options(p)
    p = sub.add_parser("export-summaries", parents=[common], help="write method summaries as JSON")
    p.add_argument("files", nargs="+", type=Path)
    p = sub.add_parser("import-summaries", parents=[common],
                       help="repair using summaries from a JSON file")
    p.add_argument("summaries", type=Path)
    p.add_argument("action", choices=["fix"])
    p.add_argument("files", nargs="+", type=Path)
    _add_fix_options(p)
    p = sub.add_parser("corpus", parents=[common],
                       help="repair every program of a corpus and tabulate the outcome")
    p.add_argument("dir", nargs="?", type=Path, help="directory of .mjcc files (default: bundled)")
    p.add_argument("--figures", action="store_true")
    return ap


def _read(path: Path) -> Program:
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise UsageError(f"{path}: cannot read: {e}") from None
    try:
        return parse_program(text, str(path))
    except FrontendError as e:
        raise UsageError(f"{path}:{e}") from None


def _emit(out: TextIO, report: str, payload, text: str):
    if report == "json":
        out.write(json.dumps(payload, indent=2, ensure_ascii=False) + "\n")
    elif text:
        out.write(text if text.endswith("\n") else text + "\n")


def _write_out(args, name: str, payload):
    if args.out is None:
        return
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / name).write_text(json.dumps(payload, indent=2, ensure_ascii=False) + "\n",
                                 encoding="utf-8")


def _bug_lines(bugs) -> List[str]:
    return [str(b) for b in bugs]


def cmd_analyze(args, out: TextIO) -> int:
    status = EXIT_OK
    for path in args.files:
        a = analyze(_read(path))
        payload = bugs_to_json(a.bugs)
        payload.update(file=str(path), races=a.race_count, clusters=len(a.clusters))
        lines = [f"{path}: {a.race_count} races, {len(a.bugs) - a.race_count} unprotected writes, "
                 f"{len(a.clusters)} clusters"] + ["  " + s for s in _bug_lines(a.bugs)]
        _emit(out, args.report, payload, "\n".join(lines))
        _write_out(args, f"{path.stem}.bugs.json", payload)
        if a.bugs:
            status = EXIT_BUGS
    return status


def cmd_validate(args, out: TextIO) -> int:
    status = EXIT_OK
    for path in args.files:
        program = _read(path)
        v = validate(program)
        payload = bugs_to_json(v.bugs)
        payload.update(file=str(path), cycles=[c.to_json() for c in v.cycles])
        lines = [f"{path}: {len(v.bugs)} bugs, {len(v.cycles)} lock-order cycles"]
        lines += ["  " + s for s in _bug_lines(v.bugs)]
        lines += [f"  cycle {c}" for c in v.cycles]
        _emit(out, args.report, payload, "\n".join(lines))
        _write_out(args, f"{path.stem}.validate.json", payload)
        if not v.ok:
            status = EXIT_BUGS
    return status


def cmd_export(args, out: TextIO) -> int:
    docs = []
    for path in args.files:
        a = analyze(_read(path))
        doc = summaries_to_json(a.summaries)
        for item in doc["summaries"]:
            item["file"] = str(path)
        docs.extend(doc["summaries"])
    payload = {"summaries": docs}
    text = json.dumps(payload, indent=2, ensure_ascii=False) + "\n"
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "summaries.json").write_text(text, encoding="utf-8")
    else:
        out.write(text)
    return EXIT_OK


def _select_summaries(doc: dict, path: Path) -> SummaryMap:
    items = doc.get("summaries")
    if not isinstance(items, list):
        raise FormatError("'summaries' must be a list")
    tagged = [i for i in items if isinstance(i, dict) and "file" in i]
    if tagged:
        mine = [i for i in items if isinstance(i, dict) and i.get("file") == str(path)]
        if not mine:
            mine = [i for i in items if isinstance(i, dict)
                    and Path(str(i.get("file"))).name == path.name]
        items = mine
    return summaries_from_json({"summaries": items})


def interactive_select(cluster: str, candidates: Sequence[Candidate],
                       stdin: TextIO, out: TextIO) -> Optional[int]:
    """Show numbered alternatives and read a choice; None after EOF or three bad answers."""
    out.write(f"\nCluster {cluster}: {len(candidates)} validated alternative(s)\n")
    for i, c in enumerate(candidates, 1):
        out.write(f"[{i}] {c.text}  (cost {c.cost})\n")
        out.write(unified_diff(c.base, c.program))
    for _ in range(MAX_BAD_CHOICES):
        out.write(f"select 1-{len(candidates)}: ")
        out.flush()
        line = stdin.readline()
        if not line:
            out.write("\n")
            return None
        line = line.strip()
        if line.isdigit() and 1 <= int(line) <= len(candidates):
            return int(line) - 1
        out.write(f"invalid choice {line!r}\n")
    out.write("aborted\n")
    return None


def _fix_one(args, path: Path, program: Program, out: TextIO, stdin: TextIO,
             summaries: Optional[SummaryMap] = None) -> int:
    cfg = RepairConfig(args.max_iterations, args.lock_strategy, args.target, args.mode)
    chooser = None
    if cfg.mode == INTERACTIVE:
        chooser = partial(interactive_select, stdin=stdin, out=out)
    started = time.perf_counter()
    result = repair(program, cfg, chooser, summaries)
    elapsed = time.perf_counter() - started
    payload = result_to_json(result, {"file": str(path), "seconds": round(elapsed, 4)})
    lines = [f"{path}: {result.status} after {result.iterations} iteration(s), "
             f"{result.bug_count} bugs left, {len(result.applied)} patch(es), "
             f"{result.rejected_cycles} rejected for deadlock"]
    for p in result.applied:
        lines.append(f"  [{p.iteration}] {p.cluster}: {p.encoding} (cost {p.cost})")
        lines.append(p.diff.rstrip("\n"))
    lines += [f"  note: {d}" for d in result.diagnostics]
    _emit(out, args.report, payload, "\n".join(lines))
    aborted = any(d.startswith("aborted") for d in result.diagnostics)
    if args.out is not None:
        _write_out(args, f"{path.stem}.report.json", payload)
        for p in result.applied:
            (args.out / f"{path.stem}.iter{p.iteration:02d}.{_slug(p.cluster)}.diff").write_text(
                p.diff, encoding="utf-8")
        if result.applied and not aborted:
            (args.out / f"{path.stem}.fixed.mjcc").write_text(
                render_program(result.program), encoding="utf-8")
        if args.figures:
            from .plots import bug_history_figure, lock_order_figure
            bug_history_figure(result.bug_history, args.out / f"{path.stem}.bugs.png", path.stem)
            lock_order_figure(build_lock_order(result.program),
                              args.out / f"{path.stem}.locks.png", path.stem)
    if args.write and result.applied and not aborted:
        path.write_text(render_program(result.program), encoding="utf-8")
    return EXIT_OK if result.status == FIXED else EXIT_BUGS


def _slug(text: str) -> str:
    return "".join(ch if ch.isalnum() else "_" for ch in text).strip("_")


def cmd_fix(args, out: TextIO, stdin: TextIO) -> int:
    status = EXIT_OK
    for path in args.files:
        status = max(status, _fix_one(args, path, _read(path), out, stdin))
    return status


def cmd_import(args, out: TextIO, stdin: TextIO) -> int:
    try:
        text = args.summaries.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise UsageError(f"{args.summaries}: cannot read: {e}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"{args.summaries}: invalid JSON: {e}") from None
    if not isinstance(doc, dict):
        raise FormatError("summary document must be an object")
    status = EXIT_OK
    for path in args.files:
        program = _read(path)
        sm = _select_summaries(doc, path)
        status = max(status, _fix_one(args, path, program, out, stdin, sm))
    return status


def cmd_corpus(args, out: TextIO) -> int:
    files = sorted(args.dir.glob("*.mjcc")) if args.dir else corpus_files()
    if not files:
        raise UsageError("no .mjcc files found")
    rows = []
    status = EXIT_OK
    for path in files:
        program = _read(path)
        started = time.perf_counter()
        before = analyze(program)
        result = repair(program)
        elapsed = time.perf_counter() - started
        cycles = find_deadlock_cycles(build_lock_order(result.program))
        rows.append({"program": path.stem, "bugs": len(before.bugs), "races": before.race_count,
                     "clusters": len(before.clusters), "status": result.status,
                     "iterations": result.iterations, "patches": len(result.applied),
                     "rejected_cycles": result.rejected_cycles, "cycles": len(cycles),
                     "seconds": round(elapsed, 3)})
        if result.status != FIXED:
            status = EXIT_BUGS
    if args.report == "json":
        out.write(json.dumps({"programs": rows}, indent=2) + "\n")
    else:
        cols = list(rows[0])
        out.write(",".join(cols) + "\n")
        for r in rows:
            out.write(",".join(str(r[c]) for c in cols) + "\n")
    if args.out is not None:
        _write_out(args, "corpus.json", {"programs": rows})
        if args.figures:
            from .plots import corpus_figure
            corpus_figure([r["program"] for r in rows], [r["bugs"] for r in rows],
                          [r["iterations"] for r in rows], args.out / "corpus.png")
    return status


def run(argv: Optional[Sequence[str]] = None, stdin: Optional[TextIO] = None,
        stdout: Optional[TextIO] = None) -> int:
    out = stdout or sys.stdout
    inp = stdin or sys.stdin
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_ERROR if e.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "max_iterations", 1) < 1:
        print("racefix: --max-iterations must be at least 1", file=sys.stderr)
        return EXIT_ERROR
    try:
        if args.command == "analyze":
            return cmd_analyze(args, out)
        if args.command == "validate":
            return cmd_validate(args, out)
        if args.command == "fix":
            return cmd_fix(args, out, inp)
        if args.command == "export-summaries":
            return cmd_export(args, out)
        if args.command == "import-summaries":
            return cmd_import(args, out, inp)
        return cmd_corpus(args, out)
    except (UsageError, FormatError) as e:
        print(f"racefix: {e}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as e:
        print(f"racefix: {e}", file=sys.stderr)
        return EXIT_ERROR


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
