"""Lock-order graph extraction and deadlock cycle search.

Locks are identified by their access path in the acquiring method. An edge
``(outer, inner)`` means ``inner`` is acquired while ``outer`` is held. Calls
contribute edges from every held lock to every lock the callee may acquire,
translated to the caller's terms. Re-entrant acquisitions are recorded too,
so adding a synchronized block never removes an edge; a self-loop ``(l, l)``
is never part of a cycle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Set, Tuple

import networkx as nx

from .lang.nodes import Call, MethodDecl, Program, SourceSpan, SyncBlock, child_blocks
from .lang.paths import AccessPath, Scope
from .summaries import (
    MethodRef, all_methods, call_substitution, iter_exprs, method_monitor, stmt_exprs,
)

Edge = Tuple[AccessPath, AccessPath]


@dataclass
class LockOrderGraph:
    nodes: Set[AccessPath] = field(default_factory=set)
    edges: Dict[Edge, List[SourceSpan]] = field(default_factory=dict)

    def add_edge(self, outer: AccessPath, inner: AccessPath, site: SourceSpan):
        self.nodes |= {outer, inner}
        sites = self.edges.setdefault((outer, inner), [])
        if site not in sites:
            sites.append(site)

    def edge_set(self) -> Set[Tuple[str, str]]:
        return {(str(a), str(b)) for a, b in self.edges}

    def to_networkx(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(self.nodes)
        g.add_edges_from(self.edges)
        return g


@dataclass(frozen=True)
class Cycle:
    locks: Tuple[AccessPath, ...]
    witnesses: Tuple[Tuple[SourceSpan, ...], ...] = ()

    def __str__(self):
        return " -> ".join(map(str, self.locks + self.locks[:1]))

    def to_json(self) -> dict:
        return {"locks": [str(lk) for lk in self.locks],
                "witnesses": [[{"file": s.file, "line": s.line, "col": s.col} for s in ws]
                              for ws in self.witnesses]}


class _Acquires:
    """Locks each method may acquire, directly or through callees, in its own terms."""

    def __init__(self, program: Program, scope: Scope):
        self.program = program
        self.scope = scope
        self.decls = {MethodRef(c, m.name): (c, m) for c, m in all_methods(program)}
        self.memo: Dict[MethodRef, FrozenSet[AccessPath]] = {}

    def of(self, ref: MethodRef, active: Tuple[MethodRef, ...] = ()) -> Tuple[FrozenSet[AccessPath], bool]:
        """Return ``(locks, complete)``; incomplete results hit a recursive call."""
        if ref in self.memo:
            return self.memo[ref], True
        if ref in active or ref not in self.decls:
            return frozenset(), ref not in active
        cls, m = self.decls[ref]
        out: Set[AccessPath] = set()
        mon = method_monitor(cls, m)
        if mon is not None:
            out.add(mon)
        complete = True

        def walk(stmts):
            nonlocal complete
            for s in stmts:
                if isinstance(s, SyncBlock):
                    out.add(self.scope.normalize(s.lock, cls, m))
                for e in stmt_exprs(s):
                    for sub in iter_exprs(e):
                        if isinstance(sub, Call):
                            got = self.callee_locks(sub, cls, m, active + (ref,))
                            if got is None:
                                continue
                            locks, done = got
                            out.update(locks)
                            complete = complete and done
                for block in child_blocks(s):
                    walk(block)

        walk(m.body)
        result = frozenset(out)
        if complete:
            self.memo[ref] = result
        return result, complete

    def callee_locks(self, call: Call, cls: str, m: MethodDecl, active):
        resolved = call_substitution(self.scope, call, cls, m)
        if resolved is None:
            return None
        callee, subst = resolved
        decl = self.decls.get(callee)
        if decl is None or decl[1].is_constructor:
            return None
        locks, done = self.of(callee, active)
        return frozenset(x for x in map(subst, locks) if x is not None), done


def build_lock_order(program: Program) -> LockOrderGraph:
    scope = Scope(program)
    acq = _Acquires(program, scope)
    g = LockOrderGraph()

    def acquire(stack: List[AccessPath], lock: AccessPath, site: SourceSpan):
        g.nodes.add(lock)
        for held in dict.fromkeys(stack):
            g.add_edge(held, lock, site)

    for cls, m in all_methods(program):
        ref = MethodRef(cls, m.name)
        stack: List[AccessPath] = []
        mon = method_monitor(cls, m)
        if mon is not None:
            g.nodes.add(mon)
            stack.append(mon)

        def walk(stmts):
            for s in stmts:
                for e in stmt_exprs(s):
                    for sub in iter_exprs(e):
                        if isinstance(sub, Call):
                            got = acq.callee_locks(sub, cls, m, (ref,))
                            for lock in sorted(got[0]) if got else ():
                                acquire(stack, lock, s.span)
                if isinstance(s, SyncBlock):
                    lock = scope.normalize(s.lock, cls, m)
                    acquire(stack, lock, s.span)
                    stack.append(lock)
                    walk(s.body)
                    stack.pop()
                else:
                    for block in child_blocks(s):
                        walk(block)

        walk(m.body)
    return g


def _canonical(cycle: List[AccessPath]) -> Tuple[AccessPath, ...]:
    i = min(range(len(cycle)), key=lambda k: str(cycle[k]))
    return tuple(cycle[i:] + cycle[:i])


def find_deadlock_cycles(g: LockOrderGraph) -> List[Cycle]:
    """Elementary cycles of length two or more, each rotated to start at its least lock."""
    out = []
    for c in nx.simple_cycles(g.to_networkx()):
        if len(c) < 2:
            continue
        locks = _canonical(list(c))
        witnesses = tuple(tuple(g.edges[(locks[i], locks[(i + 1) % len(locks)])])
                          for i in range(len(locks)))
        out.append(Cycle(locks, witnesses))
    return sorted(out, key=lambda cy: [str(x) for x in cy.locks])


def lock_cycles(program: Program) -> List[Cycle]:
    return find_deadlock_cycles(build_lock_order(program))


def edges_from(pairs) -> LockOrderGraph:
    """A graph from plain ``(outer, inner)`` pairs, for tests and tooling."""
    g = LockOrderGraph()
    for a, b in pairs:
        a = a if isinstance(a, AccessPath) else AccessPath.parse(a)
        b = b if isinstance(b, AccessPath) else AccessPath.parse(b)
        g.add_edge(a, b, SourceSpan("<graph>", 1, 1, 1, 1))
    return g


__all__ = ["Cycle", "LockOrderGraph", "build_lock_order", "edges_from",
           "find_deadlock_cycles", "lock_cycles"]
