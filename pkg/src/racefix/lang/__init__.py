"""MiniJava-CC frontend: parser, AST, printer and access paths."""

from .nodes import *  # noqa: F401,F403
from .nodes import Program, SourceSpan
from .parser import (DuplicateNameError, FrontendError, ParseError, parse_file,
                     parse_program)
from .paths import THIS, WILDCARD, AccessPath, NotAPath, Scope, static_monitor
from .render import render_expr, render_program, render_stmts


def normalize_path(expr, method, cls: str, program: Program) -> AccessPath:
    """Normalize a dereference chain to an access path, erasing subscripts.

    ``method`` may be None for class-level expressions. Raises ``NotAPath``
    for anything that is not rooted at a name or ``this``.
    """
    return Scope(program).normalize(expr, cls, method)


__all__ = [
    "AccessPath", "DuplicateNameError", "FrontendError", "NotAPath",
    "ParseError", "Program", "Scope", "SourceSpan", "THIS", "WILDCARD",
    "normalize_path", "parse_file", "parse_program", "render_expr",
    "render_program", "render_stmts", "static_monitor",
]
