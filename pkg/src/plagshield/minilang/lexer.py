"""MiniLang lexer: source text to a flat list of lexical tokens."""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import MiniLangSyntaxError

KEYWORDS = {"fn", "int", "bool", "if", "else", "while", "return", "print", "read", "true", "false"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>//[^\n]*)
  | (?P<num>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>&&|\|\||==|!=|<=|>=|[-+*/%<>=!(){},;])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class LexToken:
    kind: str  # "num", "ident", keyword text, operator text, or "eof"
    text: str
    line: int
    column: int


def lex(source: str) -> list[LexToken]:
    tokens: list[LexToken] = []
    pos = 0
    line = 1
    line_start = 0
    n = len(source)
    while pos < n:
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            col = pos - line_start + 1
            raise MiniLangSyntaxError(f"unexpected character {source[pos]!r}", line, col)
        group = m.lastgroup
        text = m.group()
        col = pos - line_start + 1
        if group in ("ws", "comment"):
            nl = text.count("\n")
            if nl:
                line += nl
                line_start = pos + text.rfind("\n") + 1
        elif group == "num":
            tokens.append(LexToken("num", text, line, col))
        elif group == "ident":
            kind = text if text in KEYWORDS else "ident"
            tokens.append(LexToken(kind, text, line, col))
        else:
            tokens.append(LexToken(text, text, line, col))
        pos = m.end()
    tokens.append(LexToken("eof", "", line, pos - line_start + 1))
    return tokens
