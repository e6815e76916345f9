"""Patch encodings (IR3) for bug clusters.

An encoding is a tree of SYNC / DECLARE / VOLATILE / NIL actions joined with
AND / OR. Each OR alternative is a complete fix for its cluster on its own.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Tuple, Union

from .lang.nodes import Name, Program, SourceSpan, walk_stmts
from .lang.paths import THIS, WILDCARD, AccessPath, Scope
from .races import Access, BugCluster, ClusterKey, lock_multiset
from .summaries import iter_exprs, stmt_exprs

log = logging.getLogger(__name__)

FREQUENCY = "frequency"
DISTANCE = "distance"
ROOT = "root"
CALLSITE = "callsite"
FRESH_LOCK_BASE = "v"
FRESH_LOCK_TYPE = "Object"


# -- actions ------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class SyncTarget:
    """A statement to run under ``lock``, with the lock written in that method's terms."""

    cls: str
    method: str
    site: SourceSpan
    lock: AccessPath
    in_static: bool = False


@dataclass(frozen=True)
class Sync:
    targets: Tuple[SyncTarget, ...]
    label: str
    accesses: Tuple[Access, ...] = ()

    @property
    def method_key(self):
        t = self.targets[0]
        return (t.cls, t.method, t.lock)


@dataclass(frozen=True)
class Declare:
    cls: str
    var: str
    type: str = FRESH_LOCK_TYPE
    static: bool = False


@dataclass(frozen=True)
class Volatile:
    field: str
    cls: str


@dataclass(frozen=True)
class Nil:
    pass


@dataclass(frozen=True)
class And:
    parts: Tuple["Encoding", ...]


@dataclass(frozen=True)
class Or:
    parts: Tuple["Encoding", ...]


Action = Union[Sync, Declare, Volatile, Nil]
Encoding = Union[Action, And, Or]
NIL = Nil()


def dnf(enc: Encoding) -> List[Tuple[Action, ...]]:
    """Alternatives of an encoding, each a conjunction of plain actions, in order."""
    if isinstance(enc, Or):
        return [alt for p in enc.parts for alt in dnf(p)]
    if isinstance(enc, And):
        alts: List[Tuple[Action, ...]] = [()]
        for p in enc.parts:
            alts = [a + b for a in alts for b in dnf(p)]
        return [tuple(x for x in a if not isinstance(x, Nil)) for a in alts]
    if isinstance(enc, Nil):
        return [()]
    return [(enc,)]


def _all_targets(enc: Encoding) -> List[SyncTarget]:
    if isinstance(enc, Sync):
        return list(enc.targets)
    if isinstance(enc, (And, Or)):
        return [t for p in enc.parts for t in _all_targets(p)]
    return []


def _target_names(targets: Iterable[SyncTarget], counts: Counter) -> List[str]:
    return [f"a_{t.method}" if counts[t.method] == 1 else f"a_{t.method}:{t.site.line}"
            for t in sorted(targets)]


def render_encoding(enc: Encoding) -> str:
    """Infix text, AND binding tighter than OR.

    A target is named after its method, with the line added when one method
    holds several targets of the encoding.
    """
    sites = {(t.cls, t.method, t.site) for t in _all_targets(enc)}
    return _render(enc, Counter(m for _, m, _ in sites), False)


def _render(enc: Encoding, counts: Counter, nested: bool) -> str:
    if isinstance(enc, Sync):
        return "SYNC({" + ", ".join(_target_names(enc.targets, counts)) + "}, " + enc.label + ")"
    if isinstance(enc, Declare):
        extra = ", static" if enc.static else ""
        return f"DECLARE({enc.cls}, {enc.var}, {enc.type}{extra})"
    if isinstance(enc, Volatile):
        return f"VOLATILE({enc.field}, {enc.cls})"
    if isinstance(enc, Nil):
        return "NIL"
    if isinstance(enc, And):
        if not enc.parts:
            return "NIL"
        return " AND ".join(_render(p, counts, True) for p in enc.parts)
    text = " OR ".join(_render(p, counts, False) for p in enc.parts) or "NIL"
    return f"({text})" if nested and len(enc.parts) > 1 else text


def render_alternative(actions: Iterable[Action]) -> str:
    actions = tuple(actions)
    return render_encoding(And(actions)) if actions else "NIL"


# -- lock ranking -------------------------------------------------------------

def rank_locks_frequency(locks: Union[Mapping[AccessPath, int], Iterable[AccessPath]]) -> List[AccessPath]:
    """Most frequent first; ties broken on the rendered path."""
    counts = Counter(locks) if not isinstance(locks, Mapping) else Counter(dict(locks))
    return sorted(counts, key=lambda lk: (-counts[lk], str(lk)))


def lock_distance(lock: AccessPath, pi: AccessPath) -> Tuple[int, int, str]:
    if pi.has_prefix(lock):
        return (0, len(pi) - len(lock), str(lock))
    return (1, 0, str(lock))


def rank_locks_distance(locks: Iterable[AccessPath], pi: AccessPath) -> List[AccessPath]:
    """Prefixes of ``pi`` first, closest first; other locks after, by rendered path."""
    return sorted(set(locks), key=lambda lk: lock_distance(lk, pi))


# -- targeting ----------------------------------------------------------------

@dataclass(frozen=True)
class Level:
    """One method on the way from a summarized method down to an access.

    ``prefix`` is the level-0 path that this level's ``this`` stands for, or
    None when it cannot be expressed.
    """

    depth: int
    cls: str
    method: str
    site: Optional[SourceSpan]
    prefix: Optional[AccessPath]
    is_static: bool


def access_levels(acc: Access, program: Program) -> List[Level]:
    scope = Scope(program)

    def static_of(cls, method):
        m = scope.method_decl(cls, method)
        return bool(m and m.is_static)

    levels = [Level(0, acc.ref.cls, acc.ref.method, acc.snap.site, THIS,
                    static_of(acc.ref.cls, acc.ref.method))]
    prefix: Optional[AccessPath] = THIS
    for depth, frame in enumerate(acc.snap.trace, 1):
        static = static_of(frame.cls, frame.method)
        r = frame.receiver
        if static or r is None or prefix is None:
            prefix = None
        elif r.base == "this":
            prefix = r.rebase(prefix)
        elif scope.is_class(r.base):
            prefix = r
        else:
            prefix = None
        levels.append(Level(depth, frame.cls, frame.method, frame.site, prefix, static))
    return levels


def _is_static_rooted(path: AccessPath, scope: Scope) -> bool:
    return path.base != "this" and scope.is_class(path.base)


def express_lock(lock: AccessPath, level: Level, scope: Scope) -> Optional[AccessPath]:
    """The lock written in the terms of ``level``'s method, if possible."""
    if _is_static_rooted(lock, scope):
        return None if lock.has_wildcard else lock
    if level.is_static or level.prefix is None or not lock.has_prefix(level.prefix):
        return None
    rel = AccessPath("this", lock.elements[len(level.prefix.elements):])
    return None if rel.has_wildcard else rel


def relative_path(path: AccessPath, level: Level, scope: Scope) -> Optional[AccessPath]:
    if _is_static_rooted(path, scope):
        return path
    if level.prefix is None or not path.has_prefix(level.prefix):
        return None
    return AccessPath("this", path.elements[len(level.prefix.elements):])


def _choose(levels: List[Level], cls: str) -> Optional[Level]:
    usable = [lv for lv in levels if lv.site is not None]
    if not usable:
        return None
    own = [lv for lv in usable if lv.cls == cls]
    return (own or usable)[-1]


def innermost_common_access(accesses: Iterable[Access], program: Program, cls: str,
                            target: str = ROOT) -> Dict[Access, Level]:
    """Where each access should be synchronized.

    In root mode each access is patched at the deepest frame of its trace
    that belongs to ``cls`` (or at its deepest frame if none does); accesses
    reached through the same callee statement thus share one target. In
    call-site mode every access is patched in the summarized method itself.
    """
    out = {}
    for a in accesses:
        levels = access_levels(a, program)
        chosen = levels[0] if target == CALLSITE else _choose(levels, cls)
        if chosen is not None:
            out[a] = chosen
    return out


def _lock_targets(accesses, lock, program, cls, target) -> Optional[List[Tuple[Access, SyncTarget]]]:
    scope = Scope(program)
    out = []
    for a in accesses:
        if lock in a.snap.locks:
            continue
        levels = access_levels(a, program)
        if target == CALLSITE:
            levels = levels[:1]
        options = [(lv, express_lock(lock, lv, scope)) for lv in levels if lv.site is not None]
        options = [(lv, e) for lv, e in options if e is not None]
        if not options:
            return None
        own = [o for o in options if o[0].cls == cls]
        lv, expr = (own or options)[-1]
        out.append((a, SyncTarget(lv.cls, lv.method, lv.site, expr, lv.is_static)))
    return out


def class_identifiers(program: Program, cls: str) -> set:
    c = program.cls(cls)
    if c is None:
        return set()
    names = {f.name for f in c.fields} | {m.name for m in c.methods}
    for m in c.methods:
        names |= set(m.param_names)
        for s in walk_stmts(m.body):
            if hasattr(s, "name"):
                names.add(s.name)
            for e in stmt_exprs(s):
                names |= {x.id for x in iter_exprs(e) if isinstance(x, Name)}
    return names


def fresh_name(program: Program, cls: str, base: str = FRESH_LOCK_BASE) -> str:
    taken = class_identifiers(program, cls) | program.class_names()
    if base not in taken:
        return base
    i = 1
    while f"{base}{i}" in taken:
        i += 1
    return f"{base}{i}"


def _own_field(rel: AccessPath) -> bool:
    """``this.f`` or elements of an array held in ``this.f``."""
    return (bool(rel.elements) and rel.elements[0] != WILDCARD
            and all(el == WILDCARD for el in rel.elements[1:]))


def _fresh_lock_alternative(accesses, cluster: BugCluster, program: Program, target: str):
    scope = Scope(program)
    K = cluster.cls
    placed = innermost_common_access(accesses, program, K, target)
    if not placed:
        return None
    instance = program.cls(K) is not None
    for a, lv in placed.items():
        rel = relative_path(a.snap.path, lv, scope)
        if (lv.cls != K or lv.is_static or rel is None or rel.base != "this"
                or not _own_field(rel)):
            instance = False
    var = fresh_name(program, K)
    lock = THIS.extend(var) if instance else AccessPath(K, (var,))
    pairs = [(a, SyncTarget(lv.cls, lv.method, lv.site, lock, lv.is_static))
             for a, lv in placed.items()]
    return [Declare(K, var, FRESH_LOCK_TYPE, not instance)] + _group_syncs(pairs, var)


def _group_syncs(pairs, label) -> List[Sync]:
    by_target: Dict[SyncTarget, List[Access]] = {}
    for a, t in pairs:
        by_target.setdefault(t, []).append(a)
    return [Sync((t,), label, tuple(by_target[t])) for t in sorted(by_target)]


def _volatile(cluster: BugCluster, program: Program) -> Optional[Volatile]:
    name = cluster.shared_path.last_field
    c = program.cls(cluster.cls)
    f = c.field(name) if c and name else None
    if f is None or f.is_volatile:
        return None
    if f.type.endswith("[]") or cluster.shared_path.elements[-1:] == ("[*]",):
        log.warning("volatile on %s.%s does not cover array elements", c.name, name)
    return Volatile(name, cluster.cls)


def encode_cluster(cluster: BugCluster, program: Program, strategy: str = FREQUENCY,
                   target: str = ROOT) -> Encoding:
    accesses = cluster.accesses()
    assert accesses, "cluster without snapshots"
    counts = lock_multiset(accesses)
    alternatives: List[Encoding] = []
    if counts:
        ranked = (rank_locks_frequency(counts) if strategy == FREQUENCY
                  else rank_locks_distance(counts, cluster.shared_path))
        for lock in ranked:
            pairs = _lock_targets(accesses, lock, program, cluster.cls, target)
            if pairs is None:
                continue  # lock not expressible at some access
            syncs = _group_syncs(pairs, str(lock))
            if syncs:
                alternatives.append(And(tuple(syncs)))
    if not alternatives:
        fresh = _fresh_lock_alternative(accesses, cluster, program, target)
        if fresh:
            alternatives.append(And(tuple(fresh)))
    vol = _volatile(cluster, program)
    if vol is not None:
        alternatives.append(vol)
    if not alternatives:
        return NIL
    return alternatives[0] if len(alternatives) == 1 else Or(tuple(alternatives))


def create_patch_encodings(clusters: Iterable[BugCluster], program: Program,
                           strategy: str = FREQUENCY,
                           target: str = ROOT) -> Dict[ClusterKey, Encoding]:
    return {c.key: encode_cluster(c, program, strategy, target) for c in clusters}
