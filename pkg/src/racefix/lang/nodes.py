"""AST for MiniJava-CC.

All nodes are frozen dataclasses. Source spans are excluded from equality,
so two trees compare equal when they are structurally identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple, Union


@dataclass(frozen=True, order=True)
class SourceSpan:
    file: str
    line: int
    col: int
    end_line: int
    end_col: int

    def __post_init__(self):
        if (self.line, self.col) > (self.end_line, self.end_col):
            raise ValueError(f"span start after end: {self}")

    @property
    def start(self) -> Tuple[int, int]:
        return (self.line, self.col)

    @property
    def end(self) -> Tuple[int, int]:
        return (self.end_line, self.end_col)

    def contains(self, other: "SourceSpan") -> bool:
        return self.start <= other.start and other.end <= self.end

    def overlaps(self, other: "SourceSpan") -> bool:
        return self.start < other.end and other.start < self.end

    def __str__(self):
        return f"{self.file}:{self.line}:{self.col}"


NO_SPAN = SourceSpan("<synthetic>", 0, 0, 0, 0)


def _span():
    return field(default=NO_SPAN, compare=False, repr=False)


# -- expressions --------------------------------------------------------------

@dataclass(frozen=True)
class Name:
    id: str


@dataclass(frozen=True)
class This:
    pass


@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class NullLit:
    pass


@dataclass(frozen=True)
class StrLit:
    value: str


@dataclass(frozen=True)
class FieldAccess:
    obj: "Expr"
    name: str


@dataclass(frozen=True)
class Index:
    obj: "Expr"
    index: "Expr"


@dataclass(frozen=True)
class Call:
    receiver: Optional["Expr"]
    method: str
    args: Tuple["Expr", ...] = ()


@dataclass(frozen=True)
class New:
    cls: str
    args: Tuple["Expr", ...] = ()


@dataclass(frozen=True)
class NewArray:
    elem_type: str
    size: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"


Expr = Union[Name, This, IntLit, BoolLit, NullLit, StrLit, FieldAccess, Index,
             Call, New, NewArray, Binary, Unary]

PATH_EXPRS = (Name, This, FieldAccess, Index)


def is_path_expr(e) -> bool:
    """True for field-dereference chains rooted at a name or ``this``."""
    while isinstance(e, (FieldAccess, Index)):
        e = e.obj
    return isinstance(e, (Name, This))


# -- statements ---------------------------------------------------------------

@dataclass(frozen=True)
class LocalDecl:
    name: str
    type: str
    init: Optional[Expr] = None
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Assign:
    target: Expr
    op: str            # '=', '+=', '-=', '*=', '/=', '++', '--'
    value: Optional[Expr] = None
    span: SourceSpan = _span()


@dataclass(frozen=True)
class SyncBlock:
    lock: Expr
    body: Tuple["Stmt", ...] = ()
    span: SourceSpan = _span()


@dataclass(frozen=True)
class If:
    cond: Expr
    then: Tuple["Stmt", ...] = ()
    orelse: Tuple["Stmt", ...] = ()
    span: SourceSpan = _span()


@dataclass(frozen=True)
class While:
    cond: Expr
    body: Tuple["Stmt", ...] = ()
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Return:
    value: Optional[Expr] = None
    span: SourceSpan = _span()


@dataclass(frozen=True)
class ExprStmt:
    expr: Expr
    span: SourceSpan = _span()


Stmt = Union[LocalDecl, Assign, SyncBlock, If, While, Return, ExprStmt]


def child_blocks(s) -> Tuple[Tuple[Stmt, ...], ...]:
    """Nested statement lists of a compound statement."""
    if isinstance(s, SyncBlock):
        return (s.body,)
    if isinstance(s, If):
        return (s.then, s.orelse)
    if isinstance(s, While):
        return (s.body,)
    return ()


def with_blocks(s, blocks):
    from dataclasses import replace
    if isinstance(s, (SyncBlock, While)):
        return replace(s, body=tuple(blocks[0]))
    if isinstance(s, If):
        return replace(s, then=tuple(blocks[0]), orelse=tuple(blocks[1]))
    return s


def walk_stmts(stmts):
    """Pre-order traversal over a statement list and everything nested in it."""
    for s in stmts:
        yield s
        for block in child_blocks(s):
            yield from walk_stmts(block)


# -- declarations -------------------------------------------------------------

@dataclass(frozen=True)
class Param:
    name: str
    type: str


@dataclass(frozen=True)
class FieldDecl:
    name: str
    type: str
    visibility: Optional[str] = None
    is_static: bool = False
    is_final: bool = False
    is_volatile: bool = False
    init: Optional[Expr] = None
    span: SourceSpan = _span()


@dataclass(frozen=True)
class MethodDecl:
    name: str
    return_type: Optional[str]          # None for constructors
    params: Tuple[Param, ...] = ()
    body: Tuple[Stmt, ...] = ()
    visibility: Optional[str] = None
    is_static: bool = False
    is_synchronized: bool = False
    span: SourceSpan = _span()

    @property
    def is_constructor(self) -> bool:
        return self.return_type is None

    @property
    def param_names(self) -> Tuple[str, ...]:
        return tuple(p.name for p in self.params)


@dataclass(frozen=True)
class ClassDecl:
    name: str
    fields: Tuple[FieldDecl, ...] = ()
    methods: Tuple[MethodDecl, ...] = ()
    annotations: Tuple[str, ...] = ()
    implements_runnable: bool = False
    visibility: Optional[str] = None
    # declaration order of members, as ('field'|'method', name)
    member_order: Tuple[Tuple[str, str], ...] = ()
    span: SourceSpan = _span()

    def field(self, name: str) -> Optional[FieldDecl]:
        for f in self.fields:
            if f.name == name:
                return f
        return None

    def method(self, name: str) -> Optional[MethodDecl]:
        for m in self.methods:
            if m.name == name:
                return m
        return None

    def members(self):
        """Fields and methods in declaration order."""
        fields = {f.name: f for f in self.fields}
        methods = {m.name: m for m in self.methods}
        order = self.member_order or (
            tuple(("field", f.name) for f in self.fields)
            + tuple(("method", m.name) for m in self.methods))
        for kind, name in order:
            yield fields[name] if kind == "field" else methods[name]


@dataclass(frozen=True)
class Program:
    classes: Tuple[ClassDecl, ...] = ()
    source_name: str = field(default="<input>", compare=False)

    def cls(self, name: str) -> Optional[ClassDecl]:
        for c in self.classes:
            if c.name == name:
                return c
        return None

    def class_names(self):
        return {c.name for c in self.classes}
