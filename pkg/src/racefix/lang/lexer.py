from __future__ import annotations

import re
from dataclasses import dataclass

KEYWORDS = {
    "class", "implements", "static", "final", "volatile", "synchronized",
    "public", "private", "protected", "if", "else", "while", "return", "new",
    "this", "true", "false", "null",
}

# longest operators first
_OPERATORS = [
    "++", "--", "+=", "-=", "*=", "/=", "&&", "||", "==", "!=", "<=", ">=",
    "{", "}", "(", ")", "[", "]", ";", ",", ".", "=", "+", "-", "*", "/",
    "%", "!", "<", ">", "@",
]

_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r\n]+)"
    r"|(?P<comment>//[^\n]*|/\*.*?\*/)"
    r"|(?P<ident>[A-Za-z_$][A-Za-z0-9_$]*)"
    r"|(?P<int>[0-9]+)"
    r'|(?P<string>"(?:[^"\\\n]|\\.)*")'
    r"|(?P<op>" + "|".join(re.escape(o) for o in _OPERATORS) + r")",
    re.DOTALL,
)


@dataclass(frozen=True)
class Token:
    kind: str      # 'ident', 'kw', 'int', 'string', 'op', 'eof'
    text: str
    line: int
    col: int
    end_line: int
    end_col: int

    def __str__(self):
        return "end of input" if self.kind == "eof" else repr(self.text)


class LexError(Exception):
    def __init__(self, msg, line, col):
        super().__init__(f"{line}:{col}: {msg}")
        self.line = line
        self.col = col


def tokenize(source: str) -> list:
    tokens = []
    pos = 0
    line, col = 1, 1
    n = len(source)
    while pos < n:
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise LexError(f"unexpected character {source[pos]!r}", line, col)
        text = m.group()
        kind = m.lastgroup
        start_line, start_col = line, col
        nl = text.count("\n")
        if nl:
            line += nl
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = m.end()
        if kind in ("ws", "comment"):
            continue
        if kind == "ident" and text in KEYWORDS:
            kind = "kw"
        tokens.append(Token(kind, text, start_line, start_col, line, col))
    tokens.append(Token("eof", "", line, col, line, col))
    return tokens
