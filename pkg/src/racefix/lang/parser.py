"""Recursive-descent parser for MiniJava-CC (``.mjcc``)."""

from __future__ import annotations

from typing import List

from .lexer import LexError, Token, tokenize
from .nodes import (
    Assign, Binary, BoolLit, Call, ClassDecl, ExprStmt, FieldAccess, FieldDecl,
    If, Index, IntLit, LocalDecl, MethodDecl, Name, New, NewArray, NullLit,
    Param, Program, Return, SourceSpan, StrLit, SyncBlock, This, Unary, While,
    is_path_expr,
)


class FrontendError(Exception):
    """Base class for errors raised while reading a program."""


class ParseError(FrontendError):
    def __init__(self, msg, line, col, expected=()):
        self.line = line
        self.col = col
        self.expected = frozenset(expected)
        text = f"{line}:{col}: {msg}"
        if self.expected:
            text += " (expected one of: " + ", ".join(sorted(self.expected)) + ")"
        super().__init__(text)


class DuplicateNameError(FrontendError):
    def __init__(self, what, name, line, col):
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: duplicate {what} {name!r}")


VISIBILITY = ("public", "private", "protected")
MODIFIERS = VISIBILITY + ("static", "final", "volatile", "synchronized")
ASSIGN_OPS = ("=", "+=", "-=", "*=", "/=")

# binary precedence levels, loosest first
_BINARY_LEVELS = [
    ("||",),
    ("&&",),
    ("==", "!="),
    ("<", "<=", ">", ">="),
    ("+", "-"),
    ("*", "/", "%"),
]


def parse_program(source: str, source_name: str = "<input>") -> Program:
    try:
        tokens = tokenize(source)
    except LexError as e:
        raise ParseError(str(e).split(": ", 1)[1], e.line, e.col) from None
    return _Parser(tokens, source_name).program()


class _Parser:
    def __init__(self, tokens: List[Token], source_name: str):
        self.toks = tokens
        self.i = 0
        self.file = source_name
        self.cls_name = None

    # -- token helpers --------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k=1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    @property
    def prev(self) -> Token:
        return self.toks[self.i - 1]

    def at(self, *texts) -> bool:
        t = self.tok
        return t.kind in ("op", "kw") and t.text in texts

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.i += 1
        return t

    def error(self, msg, expected=()):
        t = self.tok
        raise ParseError(f"{msg}, found {t}", t.line, t.col, expected)

    def expect(self, text) -> Token:
        if not self.at(text):
            self.error(f"expected {text!r}", {text})
        return self.advance()

    def ident(self, what="identifier") -> Token:
        if self.tok.kind != "ident":
            self.error(f"expected {what}", {what})
        return self.advance()

    def span_from(self, start: Token) -> SourceSpan:
        end = self.prev
        return SourceSpan(self.file, start.line, start.col, end.end_line, end.end_col)

    # -- declarations ---------------------------------------------------------

    def program(self) -> Program:
        classes = []
        seen = set()
        while self.tok.kind != "eof":
            c = self.class_decl()
            if c.name in seen:
                raise DuplicateNameError("class", c.name, c.span.line, c.span.col)
            seen.add(c.name)
            classes.append(c)
        return Program(tuple(classes), self.file)

    def class_decl(self) -> ClassDecl:
        start = self.tok
        annotations = []
        while self.at("@"):
            self.advance()
            annotations.append(self.ident("annotation name").text)
        visibility = None
        if self.at(*VISIBILITY):
            visibility = self.advance().text
        self.expect("class")
        name = self.ident("class name").text
        runnable = False
        if self.at("implements"):
            self.advance()
            iface = self.ident("interface name")
            if iface.text != "Runnable":
                raise ParseError(f"only 'Runnable' may be implemented, found {iface}",
                                 iface.line, iface.col, {"Runnable"})
            runnable = True
        self.expect("{")
        self.cls_name = name
        fields, methods, order = [], [], []
        while not self.at("}"):
            if self.tok.kind == "eof":
                self.error("unterminated class body", {"}"})
            m = self.member()
            pool, kind = (fields, "field") if isinstance(m, FieldDecl) else (methods, "method")
            if any(x.name == m.name for x in pool):
                raise DuplicateNameError(kind, m.name, m.span.line, m.span.col)
            pool.append(m)
            order.append((kind, m.name))
        self.expect("}")
        return ClassDecl(name, tuple(fields), tuple(methods), tuple(annotations),
                         runnable, visibility, tuple(order), self.span_from(start))

    def modifiers(self):
        mods = []
        while self.at(*MODIFIERS):
            t = self.advance()
            if t.text in mods or (t.text in VISIBILITY and any(v in mods for v in VISIBILITY)):
                raise ParseError(f"repeated modifier {t}", t.line, t.col)
            mods.append(t.text)
        return mods

    def member(self):
        start = self.tok
        mods = self.modifiers()
        visibility = next((m for m in mods if m in VISIBILITY), None)
        if self.tok.kind == "ident" and self.tok.text == self.cls_name and self.peek().text == "(":
            self.advance()
            return self.method_rest(start, self.cls_name, None, mods, visibility)
        typ = self.type_()
        name = self.ident("member name").text
        if self.at("("):
            return self.method_rest(start, name, typ, mods, visibility)
        if "synchronized" in mods:
            self.error("fields cannot be synchronized")
        init = None
        if self.at("="):
            self.advance()
            init = self.expr()
        self.expect(";")
        return FieldDecl(name, typ, visibility, "static" in mods, "final" in mods,
                         "volatile" in mods, init, self.span_from(start))

    def method_rest(self, start, name, ret, mods, visibility) -> MethodDecl:
        if "volatile" in mods or "final" in mods:
            self.error("methods cannot be volatile or final")
        self.expect("(")
        params = []
        if not self.at(")"):
            while True:
                ptok = self.tok
                ptype = self.type_()
                pname = self.ident("parameter name").text
                if any(p.name == pname for p in params):
                    raise DuplicateNameError("parameter", pname, ptok.line, ptok.col)
                params.append(Param(pname, ptype))
                if not self.at(","):
                    break
                self.advance()
        self.expect(")")
        body = self.block()
        return MethodDecl(name, ret, tuple(params), body, visibility, "static" in mods,
                          "synchronized" in mods, self.span_from(start))

    def type_(self) -> str:
        t = self.ident("type").text
        while self.at("[") and self.peek().text == "]":
            self.advance()
            self.advance()
            t += "[]"
        return t

    # -- statements -----------------------------------------------------------

    def block(self):
        self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                self.error("unterminated block", {"}"})
            stmts.append(self.stmt())
        self.expect("}")
        return tuple(stmts)

    def body(self):
        if self.at("{"):
            return self.block()
        return (self.stmt(),)

    def _looks_like_decl(self) -> bool:
        if self.tok.kind != "ident":
            return False
        k = 1
        while self.peek(k).text == "[" and self.peek(k + 1).text == "]":
            k += 2
        return self.peek(k).kind == "ident"

    def stmt(self):
        start = self.tok
        if self.at("synchronized"):
            self.advance()
            self.expect("(")
            lock_tok = self.tok
            lock = self.expr()
            if not is_path_expr(lock):
                raise ParseError("monitor must be an access path", lock_tok.line, lock_tok.col)
            self.expect(")")
            body = self.block()
            return SyncBlock(lock, body, self.span_from(start))
        if self.at("if"):
            self.advance()
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            then = self.body()
            orelse = ()
            if self.at("else"):
                self.advance()
                orelse = (self.stmt(),) if self.at("if") else self.body()
            return If(cond, then, orelse, self.span_from(start))
        if self.at("while"):
            self.advance()
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            return While(cond, self.body(), self.span_from(start))
        if self.at("return"):
            self.advance()
            value = None if self.at(";") else self.expr()
            self.expect(";")
            return Return(value, self.span_from(start))
        if self.at("{"):
            self.error("bare blocks are not supported")
        if self._looks_like_decl():
            typ = self.type_()
            name = self.ident("variable name").text
            init = None
            if self.at("="):
                self.advance()
                init = self.expr()
            self.expect(";")
            return LocalDecl(name, typ, init, self.span_from(start))
        e = self.expr()
        if self.at(*ASSIGN_OPS) or self.at("++", "--"):
            if not is_path_expr(e) or isinstance(e, This):
                raise ParseError("invalid assignment target", start.line, start.col)
            op = self.advance().text
            value = None if op in ("++", "--") else self.expr()
            self.expect(";")
            return Assign(e, op, value, self.span_from(start))
        if not isinstance(e, (Call, New)):
            raise ParseError("not a statement", start.line, start.col)
        self.expect(";")
        return ExprStmt(e, self.span_from(start))

    # -- expressions ----------------------------------------------------------

    def expr(self, level=0):
        if level == len(_BINARY_LEVELS):
            return self.unary()
        ops = _BINARY_LEVELS[level]
        left = self.expr(level + 1)
        while self.tok.kind == "op" and self.tok.text in ops:
            op = self.advance().text
            left = Binary(op, left, self.expr(level + 1))
        return left

    def unary(self):
        if self.at("!", "-"):
            op = self.advance().text
            return Unary(op, self.unary())
        return self.postfix(self.primary())

    def args(self):
        self.expect("(")
        out = []
        if not self.at(")"):
            out.append(self.expr())
            while self.at(","):
                self.advance()
                out.append(self.expr())
        self.expect(")")
        return tuple(out)

    def postfix(self, e):
        while True:
            if self.at("."):
                self.advance()
                if self.at("class"):
                    self.advance()
                    e = FieldAccess(e, "class")
                    continue
                name = self.ident("member name").text
                if self.at("("):
                    e = Call(e, name, self.args())
                else:
                    e = FieldAccess(e, name)
            elif self.at("["):
                self.advance()
                idx = self.expr()
                self.expect("]")
                e = Index(e, idx)
            else:
                return e

    def primary(self):
        t = self.tok
        if t.kind == "int":
            self.advance()
            return IntLit(int(t.text))
        if t.kind == "string":
            self.advance()
            return StrLit(t.text[1:-1])
        if t.kind == "ident":
            self.advance()
            if self.at("("):
                return Call(None, t.text, self.args())
            return Name(t.text)
        if self.at("true", "false"):
            self.advance()
            return BoolLit(t.text == "true")
        if self.at("null"):
            self.advance()
            return NullLit()
        if self.at("this"):
            self.advance()
            return This()
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if self.at("new"):
            self.advance()
            cls = self.ident("type name").text
            if self.at("["):
                self.advance()
                size = self.expr()
                self.expect("]")
                return NewArray(cls, size)
            return New(cls, self.args())
        self.error("expected expression",
                   {"identifier", "literal", "this", "new", "("})


def parse_file(path) -> Program:
    from pathlib import Path
    p = Path(path)
    return parse_program(p.read_text(encoding="utf-8"), str(p))


__all__ = ["parse_program", "parse_file", "ParseError", "DuplicateNameError",
           "FrontendError"]
