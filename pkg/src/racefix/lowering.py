"""Lowering of IR3 encodings to AST edits (IR4), and patch application."""

from __future__ import annotations

import difflib
import logging
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .lang.nodes import (
    Assign, ClassDecl, FieldAccess, FieldDecl, LocalDecl, MethodDecl, Name, New,
    Program, SyncBlock, This, child_blocks, walk_stmts, with_blocks,
)
from .lang.parser import parse_program
from .lang.paths import AccessPath
from .lang.render import render_program
from .summaries import iter_exprs, stmt_exprs
from .synthesis import (
    Action, Declare, Encoding, Nil, Sync, Volatile, class_identifiers, dnf,
)

log = logging.getLogger(__name__)


class LoweringError(Exception):
    pass


class StalePatch(LoweringError):
    """A patch refers to a statement or member that no longer exists."""


class ConflictError(LoweringError):
    """Two edits of one patch touch overlapping code."""


class FreshNameError(LoweringError):
    """A declared variable would clash with an existing name."""


# -- node references ----------------------------------------------------------

@dataclass(frozen=True)
class ClassStart:
    """The position before the first member of a class."""

    cls: str


@dataclass(frozen=True)
class FieldRef:
    cls: str
    name: str


@dataclass(frozen=True)
class StmtSlice:
    """A contiguous run of sibling statements in one method, by start position."""

    cls: str
    method: str
    starts: Tuple[Tuple[int, int], ...]


NodeRef = Union[ClassStart, FieldRef, StmtSlice]

REPLACE = "REPLACE"
INSERT_BEFORE = "INSERT_BEFORE"
INSERT_AFTER = "INSERT_AFTER"


@dataclass(frozen=True)
class AstAction:
    op: str
    ref: NodeRef
    new: Tuple = ()

    @property
    def cls(self) -> str:
        return self.ref.cls

    def __str__(self):
        where = {ClassStart: lambda r: f"{r.cls}<start>",
                 FieldRef: lambda r: f"{r.cls}.{r.name}",
                 StmtSlice: lambda r: f"{r.cls}.{r.method}@" + ",".join(f"{a}:{b}" for a, b in r.starts)}
        return f"{self.op}({where[type(self.ref)](self.ref)})"


@dataclass(frozen=True)
class AstPatch:
    """Alternatives, best first; each alternative is a list of actions applied together."""

    alternatives: Tuple[Tuple[AstAction, ...], ...]
    encodings: Tuple[Tuple[Action, ...], ...] = ()


# -- statement location -------------------------------------------------------

def _method(program: Program, cls: str, name: str) -> MethodDecl:
    c = program.cls(cls)
    m = c.method(name) if c else None
    if m is None:
        raise StalePatch(f"no method {cls}.{name}")
    return m


def locate(body, start: Tuple[int, int]):
    """Path to the statement starting at ``start``: [(block, index), ...]."""
    def go(block, trail):
        for i, s in enumerate(block):
            here = trail + [(block, i)]
            if s.span.start == start:
                return here
            if s.span.start < start <= s.span.end:
                for child in child_blocks(s):
                    found = go(child, here)
                    if found:
                        return found
        return None
    return go(body, [])


def common_slice(body, starts: Sequence[Tuple[int, int]]):
    """The closest run of sibling statements covering every target.

    Returns ``(block, lo, hi, ancestors)`` where ``block[lo:hi]`` is the slice
    and ``ancestors`` lists ``(block, index)`` of the enclosing statements.
    """
    trails = []
    for st in starts:
        t = locate(body, st)
        if t is None:
            raise StalePatch(f"no statement at {st[0]}:{st[1]}")
        trails.append(t)
    depth = 0
    while (all(len(t) > depth + 1 for t in trails)
           and len({id(t[depth + 1][0]) for t in trails}) == 1):
        depth += 1
    block = trails[0][depth][0]
    idxs = [t[depth][1] for t in trails]
    return block, min(idxs), max(idxs) + 1, trails[0][:depth]


def _names_used(stmts) -> set:
    out = set()
    for s in walk_stmts(stmts):
        for e in stmt_exprs(s):
            out |= {x.id for x in iter_exprs(e) if isinstance(x, Name)}
    return out


def _slice_ref(cls, method, stmts) -> StmtSlice:
    return StmtSlice(cls, method, tuple(s.span.start for s in stmts))


# -- lowering of single actions -----------------------------------------------

def _lock_expr(path: AccessPath):
    e = This() if path.base == "this" else Name(path.base)
    for el in path.elements:
        e = FieldAccess(e, el)
    return e


def insert_lock(sync: Sync, program: Program) -> List[AstAction]:
    """Wrap the closest common statement run of the targets in ``synchronized``.

    Local declarations in that run whose variables are used after it are
    hoisted in front of the new block; their initializers stay inside.
    """
    t0 = sync.targets[0]
    assert all((t.cls, t.method, t.lock) == (t0.cls, t0.method, t0.lock) for t in sync.targets), \
        "SYNC targets span several methods"
    m = _method(program, t0.cls, t0.method)
    block, lo, hi, ancestors = common_slice(m.body, [t.site.start for t in sync.targets])
    region = block[lo:hi]
    later = list(block[hi:])
    for anc_block, idx in ancestors:
        later.extend(anc_block[idx + 1:])
    used_later = _names_used(later)
    hoisted, inner = [], []
    for s in region:
        if isinstance(s, LocalDecl) and s.name in used_later:
            hoisted.append(LocalDecl(s.name, s.type, None))
            if s.init is not None:
                inner.append(Assign(Name(s.name), "=", s.init))
        else:
            inner.append(s)
    wrapped = SyncBlock(_lock_expr(t0.lock), tuple(inner))
    ref = _slice_ref(t0.cls, t0.method, region)
    actions = []
    if hoisted:
        actions.append(AstAction(INSERT_BEFORE, ref, tuple(hoisted)))
    actions.append(AstAction(REPLACE, ref, (wrapped,)))
    return actions


def declare_variable(cls: str, name: str, type_: str, syncs: Sequence[Sync],
                     program: Program, static: Optional[bool] = None) -> List[AstAction]:
    """Insert ``[static] final <type> <name> = new <type>();`` as the first member.

    The field is static when requested, or when any peer SYNC sits in a
    static method.
    """
    if program.cls(cls) is None:
        raise StalePatch(f"no class {cls}")
    if name in class_identifiers(program, cls):
        raise FreshNameError(f"{name!r} already used in {cls}")
    is_static = bool(static) or any(t.in_static for s in syncs for t in s.targets)
    local = all(t.cls == cls for s in syncs for t in s.targets)
    decl = FieldDecl(name, type_, "private" if local else None, is_static, True, False,
                     New(type_, ()))
    return [AstAction(INSERT_BEFORE, ClassStart(cls), (decl,))]


def make_volatile(field: str, cls: str, program: Program) -> List[AstAction]:
    c = program.cls(cls)
    f = c.field(field) if c else None
    if f is None:
        raise StalePatch(f"no field {cls}.{field}")
    if f.is_volatile:
        return []
    if f.type.endswith("[]"):
        log.warning("%s.%s is an array; volatile does not cover its elements", cls, field)
    return [AstAction(REPLACE, FieldRef(cls, field), (replace(f, is_volatile=True),))]


def merge_syncs(actions: Sequence[Action]) -> List[Action]:
    """Merge SYNCs with the same lock in the same method, keeping first positions."""
    out: List[Action] = []
    slot: Dict[tuple, int] = {}
    for a in actions:
        if isinstance(a, Sync):
            key = a.method_key
            if key in slot:
                prev = out[slot[key]]
                targets = tuple(sorted(set(prev.targets) | set(a.targets)))
                out[slot[key]] = Sync(targets, prev.label, prev.accesses + a.accesses)
                continue
            slot[key] = len(out)
        out.append(a)
    return out


def lower_alternative(actions: Sequence[Action], program: Program) -> List[AstAction]:
    actions = merge_syncs(actions)
    syncs = [a for a in actions if isinstance(a, Sync)]
    out: List[AstAction] = []
    for a in actions:
        if isinstance(a, Declare):
            peers = [s for s in syncs if s.label == a.var]
            out += declare_variable(a.cls, a.var, a.type, peers, program, a.static)
        elif isinstance(a, Sync):
            out += insert_lock(a, program)
        elif isinstance(a, Volatile):
            out += make_volatile(a.field, a.cls, program)
        elif not isinstance(a, Nil):
            raise TypeError(f"unknown action {a!r}")
    return out


def create_patch(enc: Encoding, program: Program) -> AstPatch:
    """Lower every alternative of an encoding, in order."""
    alts, encs = [], []
    for alt in dnf(enc):
        alts.append(tuple(lower_alternative(alt, program)))
        encs.append(tuple(merge_syncs(alt)))
    return AstPatch(tuple(alts), tuple(encs))


def cost(actions: Sequence[AstAction]) -> int:
    """Number of AST edits."""
    return len(actions)


# -- application --------------------------------------------------------------

def _check_conflicts(actions: Sequence[AstAction]):
    slices = [a for a in actions if isinstance(a.ref, StmtSlice) and a.op == REPLACE]
    for i, a in enumerate(slices):
        for b in slices[i + 1:]:
            if (a.ref.cls, a.ref.method) == (b.ref.cls, b.ref.method) and \
                    set(a.ref.starts) & set(b.ref.starts):
                raise ConflictError(f"{a} overlaps {b}")
    fields = [a.ref for a in actions if isinstance(a.ref, FieldRef)]
    if len(fields) != len(set(fields)):
        raise ConflictError("one field edited twice")


class _BodyRewriter:
    def __init__(self, actions: Sequence[AstAction]):
        self.replace = {a.ref.starts[0]: a for a in actions if a.op == REPLACE}
        self.before: Dict[Tuple[int, int], List[AstAction]] = {}
        self.after: Dict[Tuple[int, int], List[AstAction]] = {}
        for a in actions:
            if a.op == INSERT_BEFORE:
                self.before.setdefault(a.ref.starts[0], []).append(a)
            elif a.op == INSERT_AFTER:
                self.after.setdefault(a.ref.starts[-1], []).append(a)
        self.used = set()

    def block(self, stmts):
        out = []
        i = 0
        while i < len(stmts):
            s = stmts[i]
            st = s.span.start
            for a in self.before.get(st, ()):
                out.extend(a.new)
                self.used.add(id(a))
            rep = self.replace.get(st)
            if rep is not None:
                n = len(rep.ref.starts)
                got = tuple(x.span.start for x in stmts[i:i + n])
                if got != rep.ref.starts:
                    raise StalePatch(f"{rep} does not match a run of sibling statements")
                out.extend(rep.new)
                self.used.add(id(rep))
                last = stmts[i + n - 1].span.start
                i += n
            else:
                blocks = child_blocks(s)
                out.append(with_blocks(s, [self.block(b) for b in blocks]) if blocks else s)
                last = st
                i += 1
            for a in self.after.get(last, ()):
                out.extend(a.new)
                self.used.add(id(a))
        return tuple(out)


def _apply_class(c: ClassDecl, actions: Sequence[AstAction]) -> ClassDecl:
    fields = list(c.fields)
    order = list(c.member_order or [("field", f.name) for f in c.fields]
                 + [("method", m.name) for m in c.methods])
    for a in actions:
        if isinstance(a.ref, FieldRef):
            idx = next((i for i, f in enumerate(fields) if f.name == a.ref.name), None)
            if idx is None:
                raise StalePatch(f"no field {c.name}.{a.ref.name}")
            fields[idx] = a.new[0]
    for a in actions:
        if isinstance(a.ref, ClassStart):
            for f in reversed(a.new):
                if c.field(f.name) is not None:
                    raise FreshNameError(f"{f.name!r} already declared in {c.name}")
                fields.insert(0, f)
                order.insert(0, ("field", f.name))
    methods = []
    by_method: Dict[str, List[AstAction]] = {}
    for a in actions:
        if isinstance(a.ref, StmtSlice):
            by_method.setdefault(a.ref.method, []).append(a)
    for m in c.methods:
        acts = by_method.pop(m.name, None)
        if acts:
            rw = _BodyRewriter(acts)
            body = rw.block(m.body)
            if len(rw.used) != len(acts):
                raise StalePatch(f"edits in {c.name}.{m.name} did not match any statement")
            m = replace(m, body=body)
        methods.append(m)
    if by_method:
        raise StalePatch(f"no method {c.name}.{sorted(by_method)[0]}")
    return replace(c, fields=tuple(fields), methods=tuple(methods), member_order=tuple(order))


def apply_patch(program: Program, actions: Sequence[AstAction]) -> Program:
    """Apply one alternative; the result is re-rendered and re-parsed."""
    actions = list(actions)
    if not actions:
        return program
    _check_conflicts(actions)
    by_cls: Dict[str, List[AstAction]] = {}
    for a in actions:
        by_cls.setdefault(a.cls, []).append(a)
    classes = []
    for c in program.classes:
        acts = by_cls.pop(c.name, None)
        classes.append(_apply_class(c, acts) if acts else c)
    if by_cls:
        raise StalePatch(f"no class {sorted(by_cls)[0]}")
    patched = Program(tuple(classes), program.source_name)
    return parse_program(render_program(patched), program.source_name)


def unified_diff(before: Program, after: Program, name: Optional[str] = None) -> str:
    name = (name or before.source_name).lstrip("/")
    a = render_program(before).splitlines(keepends=True)
    b = render_program(after).splitlines(keepends=True)
    return "".join(difflib.unified_diff(a, b, f"a/{name}", f"b/{name}"))
