"""JSON encoding of summaries, bug reports and repair results.

Snapshot objects carry the documented keys. Sites additionally carry
``endLine``/``endCol`` and trace frames carry ``site``/``receiver`` so that an
imported summary locates patch targets exactly like a computed one; all
extension keys are optional on input.
"""

from __future__ import annotations

import json
from typing import Any, Dict, List, Optional

from .lang.nodes import SourceSpan
from .lang.paths import AccessPath
from .races import Bug
from .summaries import (
    UNOWNED, AccessKind, AccessSnapshot, MethodRef, MethodSummary, Ownership,
    SummaryMap, ThreadKind, TraceFrame,
)


class FormatError(ValueError):
    """Malformed summary or report JSON."""


def site_to_json(s: SourceSpan) -> dict:
    return {"file": s.file, "line": s.line, "col": s.col,
            "endLine": s.end_line, "endCol": s.end_col}


def site_from_json(d: Any) -> SourceSpan:
    _expect(d, dict, "site")
    line, col = _int(d, "line"), _int(d, "col")
    end_line = d.get("endLine", line)
    end_col = d.get("endCol", col)
    if not isinstance(end_line, int) or not isinstance(end_col, int):
        raise FormatError("site end must be integers")
    try:
        return SourceSpan(_str(d, "file"), line, col, end_line, end_col)
    except ValueError as e:
        raise FormatError(str(e)) from None


def ownership_to_json(o: Ownership):
    return "Unowned" if o.is_unowned else {"ownedIf": sorted(o.params)}


def ownership_from_json(d) -> Ownership:
    if d == "Unowned":
        return UNOWNED
    if isinstance(d, dict) and isinstance(d.get("ownedIf"), list) \
            and all(isinstance(i, int) and i >= 0 for i in d["ownedIf"]):
        return Ownership(frozenset(d["ownedIf"]))
    raise FormatError(f"bad ownership {d!r}")


def snapshot_to_json(a: AccessSnapshot) -> dict:
    return {
        "path": str(a.path),
        "kind": a.kind.value,
        "locks": sorted(str(lk) for lk in a.locks),
        "thread": a.thread.label,
        "ownership": ownership_to_json(a.ownership),
        "trace": [_frame_to_json(f) for f in a.trace],
        "site": site_to_json(a.site),
    }


def _frame_to_json(f: TraceFrame) -> dict:
    d = {"class": f.cls, "method": f.method}
    if f.site is not None:
        d["site"] = site_to_json(f.site)
    d["receiver"] = None if f.receiver is None else str(f.receiver)
    return d


def _frame_from_json(d) -> TraceFrame:
    _expect(d, dict, "trace frame")
    site = site_from_json(d["site"]) if d.get("site") is not None else None
    recv = d.get("receiver")
    if recv is not None and not isinstance(recv, str):
        raise FormatError("receiver must be a string or null")
    return TraceFrame(_str(d, "class"), _str(d, "method"), site,
                      AccessPath.parse(recv) if recv else None)


def snapshot_from_json(d) -> AccessSnapshot:
    _expect(d, dict, "snapshot")
    try:
        kind = AccessKind(d["kind"])
        thread = ThreadKind.from_label(d["thread"])
    except (KeyError, ValueError) as e:
        raise FormatError(f"bad snapshot: {e}") from None
    locks = d.get("locks")
    trace = d.get("trace")
    _expect(locks, list, "locks")
    _expect(trace, list, "trace")
    try:
        path = AccessPath.parse(_str(d, "path"))
        lockset = frozenset(AccessPath.parse(x) for x in locks)
    except (ValueError, AttributeError) as e:
        raise FormatError(f"bad path: {e}") from None
    return AccessSnapshot(path, kind, lockset, thread,
                          ownership_from_json(d.get("ownership")),
                          tuple(_frame_from_json(f) for f in trace),
                          site_from_json(d.get("site")))


def summaries_to_json(sm: SummaryMap) -> dict:
    return {"summaries": [
        {"class": ref.cls, "method": ref.method,
         "snapshots": [snapshot_to_json(a) for a in sm[ref].sorted_snapshots()]}
        for ref in sm.sorted_refs()]}


def summaries_from_json(doc) -> SummaryMap:
    _expect(doc, dict, "document")
    items = doc.get("summaries")
    _expect(items, list, "summaries")
    sm = SummaryMap()
    for item in items:
        _expect(item, dict, "summary")
        cls, method = _str(item, "class"), _str(item, "method")
        snaps = item.get("snapshots")
        _expect(snaps, list, "snapshots")
        sm[MethodRef(cls, method)] = MethodSummary(
            cls, method, frozenset(snapshot_from_json(s) for s in snaps))
    return sm


def dump_summaries(sm: SummaryMap) -> str:
    return json.dumps(summaries_to_json(sm), indent=2, ensure_ascii=False) + "\n"


def load_summaries(text: str) -> SummaryMap:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"invalid JSON: {e}") from None
    return summaries_from_json(doc)


def bug_to_json(b: Bug) -> dict:
    snaps = []
    for acc in b.accesses:
        d = snapshot_to_json(acc.snap)
        d["owner"] = {"class": acc.ref.cls, "method": acc.ref.method}
        snaps.append(d)
    return {"kind": b.kind, "snapshots": snaps}


def bugs_to_json(bugs: List[Bug]) -> dict:
    return {"bugs": [bug_to_json(b) for b in bugs]}


def result_to_json(result, extra: Optional[Dict[str, Any]] = None) -> dict:
    d = {
        "status": result.status,
        "iterations": result.iterations,
        "bugCount": result.bug_count,
        "bugHistory": list(result.bug_history),
        "rejectedCycles": result.rejected_cycles,
        "patches": [{"iteration": p.iteration, "cluster": p.cluster,
                     "encoding": p.encoding, "actions": p.actions, "cost": p.cost,
                     "syncs": p.sync_count, "diff": p.diff} for p in result.applied],
        "cycles": [c.to_json() for c in result.cycles],
        "diagnostics": list(result.diagnostics),
    }
    if extra:
        d.update(extra)
    return d


def _expect(value, typ, what):
    if not isinstance(value, typ):
        raise FormatError(f"{what} must be a {typ.__name__}")


def _str(d: dict, key: str) -> str:
    v = d.get(key)
    if not isinstance(v, str):
        raise FormatError(f"{key!r} must be a string")
    return v


def _int(d: dict, key: str) -> int:
    v = d.get(key)
    if not isinstance(v, int) or isinstance(v, bool):
        raise FormatError(f"{key!r} must be an integer")
    return v
