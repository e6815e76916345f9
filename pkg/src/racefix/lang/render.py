"""Canonical source printer. ``parse_program(render_program(p)) == p``."""

from __future__ import annotations

from .nodes import (
    Assign, Binary, BoolLit, Call, ClassDecl, ExprStmt, FieldAccess, FieldDecl,
    If, Index, IntLit, LocalDecl, MethodDecl, Name, New, NewArray, NullLit,
    Program, Return, StrLit, SyncBlock, This, Unary, While,
)

INDENT = "    "

_PREC = {"||": 1, "&&": 2, "==": 3, "!=": 3, "<": 4, "<=": 4, ">": 4, ">=": 4,
         "+": 5, "-": 5, "*": 6, "/": 6, "%": 6}
_UNARY_PREC = 7
_POSTFIX_PREC = 8


def _prec(e) -> int:
    if isinstance(e, Binary):
        return _PREC[e.op]
    if isinstance(e, Unary):
        return _UNARY_PREC
    return _POSTFIX_PREC + 1


def render_expr(e, min_prec: int = 0) -> str:
    s = _expr(e)
    return f"({s})" if _prec(e) < min_prec else s


def _expr(e) -> str:
    if isinstance(e, Name):
        return e.id
    if isinstance(e, This):
        return "this"
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, NullLit):
        return "null"
    if isinstance(e, StrLit):
        return f'"{e.value}"'
    if isinstance(e, FieldAccess):
        return f"{render_expr(e.obj, _POSTFIX_PREC)}.{e.name}"
    if isinstance(e, Index):
        return f"{render_expr(e.obj, _POSTFIX_PREC)}[{render_expr(e.index)}]"
    if isinstance(e, Call):
        args = ", ".join(render_expr(a) for a in e.args)
        if e.receiver is None:
            return f"{e.method}({args})"
        return f"{render_expr(e.receiver, _POSTFIX_PREC)}.{e.method}({args})"
    if isinstance(e, New):
        return f"new {e.cls}({', '.join(render_expr(a) for a in e.args)})"
    if isinstance(e, NewArray):
        return f"new {e.elem_type}[{render_expr(e.size)}]"
    if isinstance(e, Binary):
        p = _PREC[e.op]
        # left-associative: the right operand needs strictly higher precedence
        return f"{render_expr(e.left, p)} {e.op} {render_expr(e.right, p + 1)}"
    if isinstance(e, Unary):
        inner = render_expr(e.operand, _UNARY_PREC)
        # keep "- -x" from lexing as "--x"
        sep = " " if inner.startswith(e.op) else ""
        return f"{e.op}{sep}{inner}"
    raise TypeError(f"not an expression: {e!r}")


def _block(stmts, depth, out):
    for s in stmts:
        _stmt(s, depth, out)


def _stmt(s, depth, out):
    pad = INDENT * depth
    if isinstance(s, LocalDecl):
        init = "" if s.init is None else f" = {render_expr(s.init)}"
        out.append(f"{pad}{s.type} {s.name}{init};")
    elif isinstance(s, Assign):
        target = render_expr(s.target)
        if s.op in ("++", "--"):
            out.append(f"{pad}{target}{s.op};")
        else:
            out.append(f"{pad}{target} {s.op} {render_expr(s.value)};")
    elif isinstance(s, SyncBlock):
        out.append(f"{pad}synchronized ({render_expr(s.lock)}) {{")
        _block(s.body, depth + 1, out)
        out.append(f"{pad}}}")
    elif isinstance(s, If):
        out.append(f"{pad}if ({render_expr(s.cond)}) {{")
        _block(s.then, depth + 1, out)
        cur = s
        while cur.orelse:
            if len(cur.orelse) == 1 and isinstance(cur.orelse[0], If):
                cur = cur.orelse[0]
                out.append(f"{pad}}} else if ({render_expr(cur.cond)}) {{")
                _block(cur.then, depth + 1, out)
            else:
                out.append(f"{pad}}} else {{")
                _block(cur.orelse, depth + 1, out)
                break
        out.append(f"{pad}}}")
    elif isinstance(s, While):
        out.append(f"{pad}while ({render_expr(s.cond)}) {{")
        _block(s.body, depth + 1, out)
        out.append(f"{pad}}}")
    elif isinstance(s, Return):
        out.append(f"{pad}return;" if s.value is None else f"{pad}return {render_expr(s.value)};")
    elif isinstance(s, ExprStmt):
        out.append(f"{pad}{render_expr(s.expr)};")
    else:
        raise TypeError(f"not a statement: {s!r}")


def render_field(f: FieldDecl) -> str:
    mods = [m for m in (f.visibility,
                        "static" if f.is_static else None,
                        "final" if f.is_final else None,
                        "volatile" if f.is_volatile else None) if m]
    head = " ".join(mods + [f.type, f.name])
    init = "" if f.init is None else f" = {render_expr(f.init)}"
    return f"{head}{init};"


def _method(m: MethodDecl, out):
    mods = [x for x in (m.visibility,
                        "static" if m.is_static else None,
                        "synchronized" if m.is_synchronized else None) if x]
    params = ", ".join(f"{p.type} {p.name}" for p in m.params)
    sig = m.name if m.return_type is None else f"{m.return_type} {m.name}"
    out.append(INDENT + " ".join(mods + [f"{sig}({params}) {{"]))
    _block(m.body, 2, out)
    out.append(INDENT + "}")


def render_class(c: ClassDecl) -> str:
    out = []
    for a in c.annotations:
        out.append(f"@{a}")
    head = f"class {c.name}"
    if c.visibility:
        head = f"{c.visibility} {head}"
    if c.implements_runnable:
        head += " implements Runnable"
    out.append(head + " {")
    prev = None
    for m in c.members():
        if isinstance(m, FieldDecl):
            if prev == "method":
                out.append("")
            out.append(INDENT + render_field(m))
            prev = "field"
        else:
            if prev is not None:
                out.append("")
            _method(m, out)
            prev = "method"
    out.append("}")
    return "\n".join(out)


def render_program(p: Program) -> str:
    if not p.classes:
        return ""
    return "\n\n".join(render_class(c) for c in p.classes) + "\n"


def render_stmts(stmts, depth=0) -> str:
    out = []
    _block(stmts, depth, out)
    return "\n".join(out)
