"""Race and unprotected-write detection over method summaries, and clustering."""

from __future__ import annotations

import functools

from collections import defaultdict
from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple

from .lang.nodes import Program
from .lang.paths import AccessPath, Scope
from .summaries import (
    AccessKind, AccessSnapshot, MethodRef, SummaryMap, ThreadKind, reporting_classes,
)

RACE = "race"
UNPROTECTED_WRITE = "unprotected_write"


def race(a1: AccessSnapshot, a2: AccessSnapshot) -> bool:
    return (a1.path == a2.path
            and (a1.kind is AccessKind.WRITE or a2.kind is AccessKind.WRITE)
            and not (a1.locks & a2.locks)
            and a1.thread.join(a2.thread) is ThreadKind.ANY_THREAD
            and a1.ownership.is_unowned and a2.ownership.is_unowned)


def unprotected_write(a: AccessSnapshot) -> bool:
    return (a.kind is AccessKind.WRITE and not a.locks
            and a.thread is ThreadKind.ANY_THREAD and a.ownership.is_unowned)


@dataclass(frozen=True)
class Access:
    """A snapshot together with the method whose summary holds it."""

    ref: MethodRef
    snap: AccessSnapshot

    def sort_key(self):
        return self._key

    @functools.cached_property
    def _key(self):
        return (self.ref, self.snap.sort_key())

    @property
    def location(self):
        return (self.ref, self.snap.site.line, self.snap.site.col)


@dataclass(frozen=True)
class Bug:
    kind: str
    accesses: Tuple[Access, ...]

    @property
    def path(self) -> AccessPath:
        return self.accesses[0].snap.path

    @property
    def owner_class(self) -> str:
        return self.accesses[0].ref.cls

    def signature(self):
        """Identity of a bug that survives re-rendering (no line numbers)."""
        return (self.kind, str(self.path), tuple(sorted(
            (a.ref.cls, a.ref.method, a.snap.kind.value,
             tuple(str(f) for f in a.snap.trace)) for a in self.accesses)))

    def sort_key(self):
        return (str(self.path), self.kind, tuple(a.sort_key() for a in self.accesses))

    def __str__(self):
        parts = []
        for a in self.accesses:
            s = a.snap
            locks = "{" + ", ".join(sorted(map(str, s.locks))) + "}"
            via = "" if not s.trace else " via " + " -> ".join(map(str, s.trace))
            parts.append(f"{a.ref}:{s.site.line} {s.kind} {locks}{via}")
        return f"{self.kind} on {self.path}: " + " | ".join(parts)


def _rw_key(x: Access, y: Access):
    return (x.snap.path, frozenset({x.location, y.location}))


def _pick(cur: Optional[Tuple[Access, Access]], new: Tuple[Access, Access]):
    """Deterministic representative among pairs sharing the same sites."""
    def rank(p):
        writes = sum(a.snap.is_write for a in p)
        return (-writes, tuple(a.sort_key() for a in p))
    return new if cur is None or rank(new) < rank(cur) else cur


def _class_accesses(sm: SummaryMap, scope: Iterable[str], program: Optional[Program]):
    wanted = set(scope)
    ctors = set()
    if program is not None:
        ctors = {MethodRef(c.name, m.name) for c in program.classes
                 for m in c.methods if m.is_constructor}
    by_class: Dict[str, List[Access]] = defaultdict(list)
    for ref in sm.sorted_refs():
        if ref.cls in wanted and ref not in ctors:
            by_class[ref.cls].extend(Access(ref, a) for a in sm[ref].sorted_snapshots())
    return by_class


def detect_bugs(sm: SummaryMap, scope: Iterable[str],
                program: Optional[Program] = None) -> List[Bug]:
    """All bugs among methods of each in-scope class, including self-pairs.

    Write/write pairs of two unprotected writes are not reported as races:
    each side is already an unprotected-write bug. Race pairs are
    deduplicated by (path, unordered pair of access sites). Constructors are
    skipped when ``program`` is given.
    """
    races: Dict[tuple, Tuple[Access, Access]] = {}
    writes: Dict[Access, None] = {}
    for accesses in _class_accesses(sm, scope, program).values():
        by_path: Dict[AccessPath, List[Access]] = defaultdict(list)
        for acc in accesses:
            by_path[acc.snap.path].append(acc)
            if unprotected_write(acc.snap):
                writes[acc] = None
        for group in by_path.values():
            for x, y in combinations_with_replacement(group, 2):
                if not race(x.snap, y.snap):
                    continue
                if unprotected_write(x.snap) and unprotected_write(y.snap):
                    continue
                pair = (x, y) if x.sort_key() <= y.sort_key() else (y, x)
                key = _rw_key(x, y)
                races[key] = _pick(races.get(key), pair)
    bugs = [Bug(RACE, p) for p in races.values()]
    bugs += [Bug(UNPROTECTED_WRITE, (a,)) for a in writes]
    return sorted(bugs, key=Bug.sort_key)


def races_only(bugs: Iterable[Bug]) -> List[Bug]:
    return [b for b in bugs if b.kind == RACE]


@dataclass(frozen=True)
class ClusterKey:
    path: AccessPath
    owner: str

    def __str__(self):
        return f"{self.owner}:{self.path}"


@dataclass(frozen=True)
class BugCluster:
    bugs: Tuple[Bug, ...]
    shared_path: AccessPath
    cls: str
    owner: str

    @property
    def key(self) -> ClusterKey:
        return ClusterKey(self.shared_path, self.owner)

    def accesses(self) -> List[Access]:
        seen = {}
        for b in self.bugs:
            for a in b.accesses:
                seen[a] = None
        return sorted(seen, key=Access.sort_key)

    def __str__(self):
        return f"cluster {self.shared_path} in {self.cls} ({len(self.bugs)} bugs)"


def declaring_class(program: Optional[Program], bug: Bug) -> str:
    if program is not None:
        scope = Scope(program)
        ref = bug.accesses[0].ref
        c = program.cls(ref.cls)
        m = c.method(ref.method) if c else None
        owner = scope.declaring_class(bug.path, ref.cls, m)
        if owner is not None:
            return owner
    return bug.owner_class


def cluster_bugs(bugs: Iterable[Bug], program: Optional[Program] = None) -> List[BugCluster]:
    """Partition bugs by shared access path and class.

    Bugs are grouped by (path, class whose methods perform the accesses); the
    cluster's class is the one declaring the innermost raced field.
    """
    groups: Dict[ClusterKey, List[Bug]] = defaultdict(list)
    for b in bugs:
        paths = {a.snap.path for a in b.accesses}
        assert len(paths) == 1, "a bug's snapshots must share one path"
        groups[ClusterKey(b.path, b.owner_class)].append(b)
    out = []
    for key in sorted(groups, key=lambda k: (str(k.path), k.owner)):
        members = tuple(sorted(groups[key], key=Bug.sort_key))
        out.append(BugCluster(members, key.path, declaring_class(program, members[0]), key.owner))
    return out


@dataclass
class Analysis:
    program: Program
    summaries: SummaryMap
    bugs: List[Bug]
    clusters: List[BugCluster]

    @property
    def race_count(self) -> int:
        return len(races_only(self.bugs))


def analyze(program: Program, summaries: Optional[SummaryMap] = None) -> Analysis:
    """Summaries, bugs and clusters for a program."""
    from .summaries import analyze_program
    sm = summaries if summaries is not None else analyze_program(program)
    bugs = detect_bugs(sm, reporting_classes(program), program)
    return Analysis(program, sm, bugs, cluster_bugs(bugs, program))


def lock_multiset(accesses: Iterable[Access]) -> Dict[AccessPath, int]:
    counts: Dict[AccessPath, int] = defaultdict(int)
    for a in accesses:
        for lock in a.snap.locks:
            counts[lock] += 1
    return dict(counts)


def common_locks(accesses: Iterable[Access]) -> FrozenSet[AccessPath]:
    sets = [a.snap.locks for a in accesses]
    return frozenset.intersection(*sets) if sets else frozenset()
