"""Compositional access-snapshot summaries.

Each method is summarized by the set of heap accesses it may perform, directly
or through callees, together with the locks held, the thread kind, ownership
and the call trace leading to the access. Summaries are computed bottom-up
over the call graph; recursive components are iterated to a fixed point.
"""

from __future__ import annotations

import enum
import functools
import logging
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, NamedTuple, Optional, Tuple

import networkx as nx

from .lang.nodes import (
    Assign, Binary, Call, ExprStmt, FieldAccess, If, Index, LocalDecl,
    MethodDecl, Name, New, NewArray, Program, Return, SourceSpan, SyncBlock,
    Unary, While, is_path_expr, walk_stmts,
)
from .lang.paths import THIS, AccessPath, NotAPath, Scope, base_type, static_monitor

log = logging.getLogger(__name__)


class AccessKind(enum.Enum):
    READ = "rd"
    WRITE = "wr"

    def __str__(self):
        return self.value


class ThreadKind(enum.IntEnum):
    """NoThread < AnyThreadButMain < AnyThread; join is max."""

    NO_THREAD = 0
    ANY_THREAD_BUT_MAIN = 1
    ANY_THREAD = 2

    @property
    def label(self) -> str:
        return ("NoThread", "AnyThreadButMain", "AnyThread")[self]

    @classmethod
    def from_label(cls, text: str) -> "ThreadKind":
        return cls(("NoThread", "AnyThreadButMain", "AnyThread").index(text))

    def join(self, other: "ThreadKind") -> "ThreadKind":
        return max(self, other)

    def __str__(self):
        return self.label


@dataclass(frozen=True)
class Ownership:
    """``OwnedIf(params)`` when ``params`` is a set, ``Unowned`` when None.

    ``Owned`` is ``OwnedIf(∅)``.
    """

    params: Optional[FrozenSet[int]] = None

    @property
    def is_unowned(self) -> bool:
        return self.params is None

    def join(self, other: "Ownership") -> "Ownership":
        if self.is_unowned or other.is_unowned:
            return UNOWNED
        return Ownership(self.params | other.params)

    def __str__(self):
        if self.params is None:
            return "Unowned"
        if not self.params:
            return "Owned"
        return "OwnedIf{" + ",".join(map(str, sorted(self.params))) + "}"


UNOWNED = Ownership(None)
OWNED = Ownership(frozenset())


def owned_if(*params: int) -> Ownership:
    return Ownership(frozenset(params))


@dataclass(frozen=True)
class TraceFrame:
    """One call on the way to an access.

    ``site`` is the statement inside this frame's method that leads to the
    access (the access itself for the last frame). ``receiver`` is the path,
    in the caller's context, bound to the callee's ``this``.
    """

    cls: str
    method: str
    site: Optional[SourceSpan] = None
    receiver: Optional[AccessPath] = None

    @property
    def ref(self) -> "MethodRef":
        return MethodRef(self.cls, self.method)

    def __str__(self):
        return f"{self.cls}.{self.method}()"


@dataclass(frozen=True)
class AccessSnapshot:
    path: AccessPath
    kind: AccessKind
    locks: FrozenSet[AccessPath]
    thread: ThreadKind
    ownership: Ownership
    trace: Tuple[TraceFrame, ...]
    site: SourceSpan

    @property
    def is_write(self) -> bool:
        return self.kind is AccessKind.WRITE

    def sort_key(self):
        return self._key

    @functools.cached_property
    def _key(self):
        return (self.site, str(self.path), self.kind.value,
                tuple(sorted(map(str, self.locks))), int(self.thread),
                str(self.ownership),
                tuple((f.cls, f.method, f.site or self.site) for f in self.trace))

    def __str__(self):
        locks = "{" + ", ".join(sorted(map(str, self.locks))) + "}" if self.locks else "∅"
        trace = "[" + ", ".join(map(str, self.trace)) + "]"
        return (f"<{self.path}, {self.kind}, {locks}, {self.thread}, "
                f"{self.ownership}, {trace}>@{self.site.line}")


class MethodRef(NamedTuple):
    cls: str
    method: str

    def __str__(self):
        return f"{self.cls}.{self.method}"


@dataclass(frozen=True)
class MethodSummary:
    cls: str
    method: str
    snapshots: FrozenSet[AccessSnapshot] = frozenset()

    @property
    def ref(self) -> MethodRef:
        return MethodRef(self.cls, self.method)

    def sorted_snapshots(self) -> List[AccessSnapshot]:
        return sorted(self.snapshots, key=AccessSnapshot.sort_key)


class SummaryMap(Dict[MethodRef, MethodSummary]):
    """Mapping ``(class, method) -> MethodSummary``."""

    def get_summary(self, cls: str, method: str) -> Optional[MethodSummary]:
        return self.get(MethodRef(cls, method))

    def sorted_refs(self) -> List[MethodRef]:
        return sorted(self)


# -- program-level facts ------------------------------------------------------

def iter_exprs(e):
    """Pre-order walk over an expression and its sub-expressions."""
    if e is None:
        return
    yield e
    if isinstance(e, FieldAccess):
        yield from iter_exprs(e.obj)
    elif isinstance(e, Index):
        yield from iter_exprs(e.obj)
        yield from iter_exprs(e.index)
    elif isinstance(e, Call):
        yield from iter_exprs(e.receiver)
        for a in e.args:
            yield from iter_exprs(a)
    elif isinstance(e, New):
        for a in e.args:
            yield from iter_exprs(a)
    elif isinstance(e, NewArray):
        yield from iter_exprs(e.size)
    elif isinstance(e, Binary):
        yield from iter_exprs(e.left)
        yield from iter_exprs(e.right)
    elif isinstance(e, Unary):
        yield from iter_exprs(e.operand)


def stmt_exprs(s):
    """Expressions evaluated by a statement itself (not by nested statements)."""
    if isinstance(s, LocalDecl):
        return [s.init] if s.init is not None else []
    if isinstance(s, Assign):
        return [s.target] + ([s.value] if s.value is not None else [])
    if isinstance(s, SyncBlock):
        return [s.lock]
    if isinstance(s, (If, While)):
        return [s.cond]
    if isinstance(s, Return):
        return [s.value] if s.value is not None else []
    if isinstance(s, ExprStmt):
        return [s.expr]
    return []


def all_methods(program: Program) -> List[Tuple[str, MethodDecl]]:
    return [(c.name, m) for c in program.classes for m in c.methods]


def is_run_root(program: Program, cls: str, m: MethodDecl) -> bool:
    c = program.cls(cls)
    return (c is not None and c.implements_runnable and m.name == "run"
            and not m.params and not m.is_static)


def is_main_root(m: MethodDecl) -> bool:
    return m.name == "main" and m.is_static


def call_graph(program: Program, scope: Optional[Scope] = None) -> nx.DiGraph:
    scope = scope or Scope(program)
    g = nx.DiGraph()
    for cls, m in all_methods(program):
        src = MethodRef(cls, m.name)
        g.add_node(src)
        for s in walk_stmts(m.body):
            for e in stmt_exprs(s):
                for sub in iter_exprs(e):
                    if isinstance(sub, Call):
                        target = scope.resolve_call(sub, cls, m)
                        if target is not None:
                            g.add_edge(src, MethodRef(target[0], target[1].name))
    return g


def _referenced_classes(scope: Scope, cls: str, m: MethodDecl) -> set:
    out = set()
    for s in walk_stmts(m.body):
        for e in stmt_exprs(s):
            for sub in iter_exprs(e):
                t = base_type(scope.type_of(sub, cls, m))
                if t and t.startswith("<class>"):
                    t = t[len("<class>"):]
                if t and scope.is_class(t):
                    out.add(t)
    return out


def flagged_classes(program: Program) -> set:
    """Classes that directly signal concurrent use.

    A class is flagged when annotated ``@ThreadSafe``, when it contains any
    synchronized method or block, or when one of its instances is referenced
    inside a ``run()`` body of a Runnable class.
    """
    scope = Scope(program)
    out = set()
    for c in program.classes:
        if "ThreadSafe" in c.annotations:
            out.add(c.name)
        for m in c.methods:
            if m.is_synchronized or any(isinstance(s, SyncBlock) for s in walk_stmts(m.body)):
                out.add(c.name)
    for cls, m in all_methods(program):
        if is_run_root(program, cls, m):
            out |= _referenced_classes(scope, cls, m)
    return out


def infer_concurrent_classes(program: Program) -> set:
    """Flagged classes closed under the field and parameter types they use."""
    out = set(flagged_classes(program))
    work = sorted(out)
    known = program.class_names()
    while work:
        c = program.cls(work.pop())
        used = {base_type(f.type) for f in c.fields}
        used |= {base_type(p.type) for m in c.methods for p in m.params}
        for t in sorted(used & known - out):
            out.add(t)
            work.append(t)
    return out


def thread_kinds(program: Program, graph: Optional[nx.DiGraph] = None) -> Dict[MethodRef, ThreadKind]:
    graph = graph if graph is not None else call_graph(program)
    run_roots = [MethodRef(c, m.name) for c, m in all_methods(program)
                 if is_run_root(program, c, m)]
    main_roots = [MethodRef(c, m.name) for c, m in all_methods(program) if is_main_root(m)]

    def reach(roots):
        seen = set()
        for r in roots:
            seen.add(r)
            seen |= nx.descendants(graph, r)
        return seen

    from_run, from_main = reach(run_roots), reach(main_roots)
    concurrent = infer_concurrent_classes(program)
    out = {}
    for cls, m in all_methods(program):
        ref = MethodRef(cls, m.name)
        if ref in from_run:
            out[ref] = ThreadKind.ANY_THREAD
        elif ref in from_main:
            out[ref] = ThreadKind.ANY_THREAD_BUT_MAIN
        elif cls in concurrent:
            out[ref] = ThreadKind.ANY_THREAD
        else:
            out[ref] = ThreadKind.NO_THREAD
    return out


def owned_locals(scope: Scope, cls: str, m: MethodDecl) -> set:
    """Locals only ever assigned freshly allocated objects."""
    fresh, dirty = set(), set()
    for s in walk_stmts(m.body):
        if isinstance(s, LocalDecl) and s.init is not None:
            (fresh if isinstance(s.init, (New, NewArray)) else dirty).add(s.name)
        elif isinstance(s, Assign) and isinstance(s.target, Name):
            name = s.target.id
            if name in scope.locals_of(cls, m):
                ok = s.op == "=" and isinstance(s.value, (New, NewArray))
                (fresh if ok else dirty).add(name)
    return fresh - dirty - set(m.param_names)


def method_monitor(cls: str, m: MethodDecl) -> Optional[AccessPath]:
    if not m.is_synchronized:
        return None
    return static_monitor(cls) if m.is_static else THIS


# -- inference ----------------------------------------------------------------

class _Context:
    """Per-program data shared by all method analyses."""

    def __init__(self, program: Program):
        self.program = program
        self.scope = Scope(program)
        self.graph = call_graph(program, self.scope)
        self.threads = thread_kinds(program, self.graph)
        self.decls = {MethodRef(c, m.name): m for c, m in all_methods(program)}
        self._owned = {}

    def owned(self, ref: MethodRef) -> set:
        if ref not in self._owned:
            self._owned[ref] = owned_locals(self.scope, ref.cls, self.decls[ref])
        return self._owned[ref]

    def base_ownership(self, ref: MethodRef, path: AccessPath) -> Ownership:
        m = self.decls[ref]
        if path.base == "this":
            return UNOWNED
        if path.base in m.param_names:
            return owned_if(m.param_names.index(path.base))
        if path.base in self.scope.locals_of(ref.cls, m):
            return OWNED if path.base in self.owned(ref) else UNOWNED
        return UNOWNED


class Substitution:
    """Maps callee-context paths to caller-context paths at one call site."""

    def __init__(self, scope: Scope, callee_cls: str, callee: MethodDecl,
                 receiver: Optional[AccessPath], args: Tuple[Optional[AccessPath], ...]):
        self.receiver = receiver
        self.params = dict(zip(callee.param_names, args))
        self.locals = set(scope.locals_of(callee_cls, callee))

    def __call__(self, p: AccessPath) -> Optional[AccessPath]:
        if p.base == "this":
            return None if self.receiver is None else p.rebase(self.receiver)
        if p.base in self.params:
            actual = self.params[p.base]
            return None if actual is None else p.rebase(actual)
        if p.base in self.locals:
            return None
        return p


def call_substitution(scope: Scope, call: Call, cls: str, m: MethodDecl):
    """Resolve a call and build its substitution; None when unresolved."""
    target = scope.resolve_call(call, cls, m)
    if target is None:
        return None
    callee_cls, callee, static = target
    receiver = None
    if not static:
        if call.receiver is None:
            receiver = THIS
        else:
            receiver = _try_path(scope, call.receiver, cls, m)
    args = tuple(_try_path(scope, a, cls, m) if is_path_expr(a) else None for a in call.args)
    return MethodRef(callee_cls, callee.name), Substitution(scope, callee_cls, callee, receiver, args)


def _try_path(scope, expr, cls, m) -> Optional[AccessPath]:
    try:
        return scope.normalize(expr, cls, m)
    except NotAPath:
        return None


class _MethodAnalysis:
    def __init__(self, ctx: _Context, ref: MethodRef, callees: SummaryMap):
        self.ctx = ctx
        self.ref = ref
        self.m = ctx.decls[ref]
        self.callees = callees
        self.thread = ctx.threads[ref]
        self.out = set()
        self.stack: List[AccessPath] = []
        self.site: Optional[SourceSpan] = None

    def run(self) -> MethodSummary:
        mon = method_monitor(self.ref.cls, self.m)
        if mon is not None:
            self.stack.append(mon)
        self.block(self.m.body)
        return MethodSummary(self.ref.cls, self.ref.method, frozenset(self.out))

    # statements

    def block(self, stmts):
        for s in stmts:
            self.stmt(s)

    def stmt(self, s):
        self.site = s.span
        if isinstance(s, LocalDecl):
            self.expr(s.init)
        elif isinstance(s, Assign):
            self.expr(s.value)
            self.assign_target(s.target, compound=s.op != "=")
        elif isinstance(s, SyncBlock):
            lock = self.ctx.scope.normalize(s.lock, self.ref.cls, self.m)
            self.stack.append(lock)
            self.block(s.body)
            self.stack.pop()
        elif isinstance(s, If):
            self.expr(s.cond)
            self.block(s.then)
            self.site = s.span
            self.block(s.orelse)
        elif isinstance(s, While):
            self.expr(s.cond)
            self.block(s.body)
        elif isinstance(s, Return):
            self.expr(s.value)
        elif isinstance(s, ExprStmt):
            self.expr(s.expr)

    def assign_target(self, target, compound: bool):
        if isinstance(target, FieldAccess):
            self.expr(target.obj)
        elif isinstance(target, Index):
            self.expr(target.obj)
            self.expr(target.index)
        path = self.ctx.scope.normalize(target, self.ref.cls, self.m)
        if compound:
            self.emit(path, AccessKind.READ, target)
        self.emit(path, AccessKind.WRITE, target)

    # expressions

    def expr(self, e):
        if e is None:
            return
        if isinstance(e, (Name, FieldAccess, Index)):
            if isinstance(e, FieldAccess):
                self.expr(e.obj)
            elif isinstance(e, Index):
                self.expr(e.obj)
                self.expr(e.index)
            self.emit(self.ctx.scope.normalize(e, self.ref.cls, self.m), AccessKind.READ, e)
        elif isinstance(e, Call):
            self.expr(e.receiver)
            for a in e.args:
                self.expr(a)
            self.inline(e)
        elif isinstance(e, New):
            for a in e.args:
                self.expr(a)
        elif isinstance(e, NewArray):
            self.expr(e.size)
        elif isinstance(e, Binary):
            self.expr(e.left)
            self.expr(e.right)
        elif isinstance(e, Unary):
            self.expr(e.operand)

    def _is_heap(self, path: AccessPath, e) -> bool:
        if not path.elements or path.elements[-1] == "class":
            return False
        scope = self.ctx.scope
        if isinstance(e, FieldAccess):
            owner = scope.type_of(e.obj, self.ref.cls, self.m)
            if owner is None:
                return True
            if owner.endswith("[]") and e.name == "length":
                return False
            owner = owner[len("<class>"):] if owner.startswith("<class>") else owner
            f = scope.field_decl(owner, e.name)
            return not (f is not None and f.is_volatile)
        if isinstance(e, Name):
            f = scope.field_decl(self.ref.cls, e.id)
            return not (f is not None and f.is_volatile)
        return True

    def emit(self, path: AccessPath, kind: AccessKind, e):
        if not self._is_heap(path, e):
            return
        self.out.add(AccessSnapshot(
            path, kind, frozenset(self.stack), self.thread,
            self.ctx.base_ownership(self.ref, path), (), self.site))

    def inline(self, call: Call):
        resolved = call_substitution(self.ctx.scope, call, self.ref.cls, self.m)
        if resolved is None:
            log.debug("%s: unresolved call %s(), skipped", self.ref, call.method)
            return
        callee_ref, subst = resolved
        summary = self.callees.get(callee_ref)
        if summary is None:
            return
        held = frozenset(self.stack)
        for c in summary.snapshots:
            path = subst(c.path)
            if path is None:
                continue
            frame = TraceFrame(callee_ref.cls, callee_ref.method, c.site, subst.receiver)
            trace = (frame,) + c.trace
            refs = [f.ref for f in trace]
            if self.ref in refs or len(set(refs)) != len(refs):
                continue  # cut at the first repeated frame
            locks = held | {lp for lp in map(subst, c.locks) if lp is not None}
            self.out.add(AccessSnapshot(
                path, c.kind, frozenset(locks), self.thread,
                self.ctx.base_ownership(self.ref, path), trace, self.site))


def analyze_method(program: Program, cls: str, method: str,
                   callees: Optional[SummaryMap] = None) -> MethodSummary:
    """Summarize one method against the given callee summaries."""
    ctx = _Context(program)
    return _MethodAnalysis(ctx, MethodRef(cls, method), callees or SummaryMap()).run()


def analyze_program(program: Program) -> SummaryMap:
    """Summaries for every method, callees before callers."""
    ctx = _Context(program)
    sm = SummaryMap()
    for ref in ctx.decls:
        sm[ref] = MethodSummary(ref.cls, ref.method)
    cond = nx.condensation(ctx.graph)
    for comp in reversed(list(nx.topological_sort(cond))):
        members = sorted(cond.nodes[comp]["members"])
        recursive = len(members) > 1 or ctx.graph.has_edge(members[0], members[0])
        while True:
            changed = False
            for ref in members:
                new = _MethodAnalysis(ctx, ref, sm).run()
                if new.snapshots != sm[ref].snapshots:
                    sm[ref] = new
                    changed = True
            if not (recursive and changed):
                break
    return sm


def reporting_classes(program: Program) -> set:
    """Classes whose method pairs are checked for races."""
    return flagged_classes(program)


def iter_snapshots(sm: SummaryMap) -> Iterable[Tuple[MethodRef, AccessSnapshot]]:
    for ref in sm.sorted_refs():
        for a in sm[ref].sorted_snapshots():
            yield ref, a
