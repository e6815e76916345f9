"""Access paths and static name/type resolution."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

from .nodes import (
    Call, ClassDecl, FieldAccess, Index, LocalDecl, MethodDecl, Name, New,
    NewArray, Program, This, walk_stmts,
)

WILDCARD = "[*]"


class NotAPath(ValueError):
    """The expression is not a field-dereference chain."""


@dataclass(frozen=True, order=True)
class AccessPath:
    base: str
    elements: Tuple[str, ...] = ()

    def __post_init__(self):
        if not self.base:
            raise ValueError("access path needs a base")

    def __str__(self):
        return ".".join((self.base,) + self.elements)

    def __len__(self):
        return len(self.elements)

    def extend(self, *elements: str) -> "AccessPath":
        return AccessPath(self.base, self.elements + tuple(elements))

    def rebase(self, new_root: "AccessPath") -> "AccessPath":
        """Replace this path's base by ``new_root``."""
        return AccessPath(new_root.base, new_root.elements + self.elements)

    def has_prefix(self, other: "AccessPath") -> bool:
        return (self.base == other.base
                and self.elements[:len(other.elements)] == other.elements)

    @property
    def has_wildcard(self) -> bool:
        return WILDCARD in self.elements

    @property
    def last_field(self) -> Optional[str]:
        for el in reversed(self.elements):
            if el != WILDCARD:
                return el
        return None

    @classmethod
    def parse(cls, text: str) -> "AccessPath":
        parts = text.split(".")
        if not parts[0]:
            raise ValueError(f"bad access path {text!r}")
        return cls(parts[0], tuple(parts[1:]))


THIS = AccessPath("this")


def static_monitor(cls_name: str) -> AccessPath:
    return AccessPath(cls_name, ("class",))


def elem_type(t: Optional[str]) -> Optional[str]:
    if t and t.endswith("[]"):
        return t[:-2]
    return None


def base_type(t: Optional[str]) -> Optional[str]:
    while t and t.endswith("[]"):
        t = t[:-2]
    return t


class Scope:
    """Name and type resolution for one program."""

    def __init__(self, program: Program):
        self.program = program
        self.classes: Dict[str, ClassDecl] = {c.name: c for c in program.classes}
        self._locals: Dict[Tuple[str, str], Dict[str, str]] = {}

    def locals_of(self, cls: str, method: MethodDecl) -> Dict[str, str]:
        """Declared local variable types (first declaration wins)."""
        key = (cls, method.name)
        if key not in self._locals:
            out: Dict[str, str] = {}
            for s in walk_stmts(method.body):
                if isinstance(s, LocalDecl):
                    out.setdefault(s.name, s.type)
            self._locals[key] = out
        return self._locals[key]

    def var_type(self, name: str, cls: str, method: Optional[MethodDecl]) -> Optional[str]:
        if method is not None:
            for p in method.params:
                if p.name == name:
                    return p.type
            loc = self.locals_of(cls, method)
            if name in loc:
                return loc[name]
        return None

    def field_decl(self, cls: Optional[str], name: str):
        c = self.classes.get(cls) if cls else None
        return c.field(name) if c else None

    def method_decl(self, cls: Optional[str], name: str):
        c = self.classes.get(cls) if cls else None
        return c.method(name) if c else None

    def is_class(self, name: str) -> bool:
        return name in self.classes

    # -- normalization --------------------------------------------------------

    def normalize(self, expr, cls: str, method: Optional[MethodDecl]) -> AccessPath:
        if isinstance(expr, This):
            return THIS
        if isinstance(expr, Name):
            if method is not None and (expr.id in method.param_names
                                       or expr.id in self.locals_of(cls, method)):
                return AccessPath(expr.id)
            f = self.field_decl(cls, expr.id)
            if f is not None:
                return AccessPath(cls, (expr.id,)) if f.is_static else THIS.extend(expr.id)
            # a class name, or an external name such as System
            return AccessPath(expr.id)
        if isinstance(expr, FieldAccess):
            return self.normalize(expr.obj, cls, method).extend(expr.name)
        if isinstance(expr, Index):
            return self.normalize(expr.obj, cls, method).extend(WILDCARD)
        raise NotAPath(f"not an access path: {type(expr).__name__}")

    # -- static types ---------------------------------------------------------

    def type_of(self, expr, cls: str, method: Optional[MethodDecl]) -> Optional[str]:
        """Static type of an expression; class names yield ``'<class>Name'``."""
        if isinstance(expr, This):
            return cls
        if isinstance(expr, Name):
            t = self.var_type(expr.id, cls, method)
            if t is not None:
                return t
            f = self.field_decl(cls, expr.id)
            if f is not None:
                return f.type
            if self.is_class(expr.id):
                return "<class>" + expr.id
            return None
        if isinstance(expr, FieldAccess):
            owner = self.type_of(expr.obj, cls, method)
            if owner is None:
                return None
            if expr.name == "class" and owner.startswith("<class>"):
                return "Class"
            owner = owner[len("<class>"):] if owner.startswith("<class>") else owner
            if owner.endswith("[]") and expr.name == "length":
                return "int"
            f = self.field_decl(owner, expr.name)
            return f.type if f else None
        if isinstance(expr, Index):
            return elem_type(self.type_of(expr.obj, cls, method))
        if isinstance(expr, Call):
            target = self.resolve_call(expr, cls, method)
            if target is None:
                return None
            return target[1].return_type
        if isinstance(expr, New):
            return expr.cls
        if isinstance(expr, NewArray):
            return expr.elem_type + "[]"
        return None

    def resolve_call(self, call: Call, cls: str, method: Optional[MethodDecl]):
        """Return ``(class name, MethodDecl, is_static_call)`` or None."""
        if call.receiver is None:
            m = self.method_decl(cls, call.method)
            return (cls, m, m.is_static) if m else None
        t = self.type_of(call.receiver, cls, method)
        if t is None:
            return None
        static = t.startswith("<class>")
        owner = t[len("<class>"):] if static else t
        m = self.method_decl(owner, call.method)
        if m is None or m.is_constructor:
            return None
        return (owner, m, static or m.is_static)

    def declaring_class(self, path: AccessPath, cls: str,
                        method: Optional[MethodDecl]) -> Optional[str]:
        """Class declaring the innermost field named by ``path``."""
        if path.base == "this":
            t = cls
        elif self.is_class(path.base) and self.var_type(path.base, cls, method) is None:
            t = path.base
        else:
            t = self.var_type(path.base, cls, method)
        owner = None
        for el in path.elements:
            if t is None:
                return owner
            if el == WILDCARD:
                t = elem_type(t)
                continue
            f = self.field_decl(t, el)
            if f is None:
                return owner if el in ("length", "class") else None
            owner = t
            t = f.type
        return owner
