from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import KernelSyntaxError


@dataclass(frozen=True)
class Token:
    kind: str  # NUMBER IDENT OP PRAGMA PREPROC EOF
    text: str
    line: int
    col: int
    pos: int
    end: int


_OPS = [
    "->", "++", "--", "+=", "-=", "*=", "/=", "%=", "<=", ">=", "==", "!=", "&&", "||",
    "<<", ">>", "+", "-", "*", "/", "%", "<", ">", "=", "!", "&", "|", "^", "~", "?",
    ":", ";", ",", ".", "(", ")", "[", "]", "{", "}",
]

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\f\v]+|\\\n)
  | (?P<nl>\n)
  | (?P<lcomment>//[^\n]*)
  | (?P<bcomment>/\*.*?\*/)
  | (?P<number>0[xX][0-9a-fA-F]+[uUlL]*|(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?[fFlLuU]*)
  | (?P<ident>[A-Za-z_]\w*)
  | (?P<op>"""
    + "|".join(re.escape(o) for o in _OPS)
    + r""")
    """,
    re.VERBOSE | re.DOTALL,
)


def _directive_end(src: str, pos: int) -> int:
    """End offset (exclusive, before the newline) of a directive with continuations."""
    i = pos
    n = len(src)
    while i < n:
        j = src.find("\n", i)
        if j < 0:
            return n
        k = j - 1
        if k >= 0 and src[k] == "\r":
            k -= 1
        if k >= i and src[k] == "\\":
            i = j + 1
            continue
        return j
    return n


def tokenize(src: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    line = 1
    line_start = 0
    at_line_start = True
    n = len(src)
    while pos < n:
        ch = src[pos]
        if ch == "#":
            if not at_line_start:
                raise KernelSyntaxError("'#' must start a line", line, pos - line_start + 1)
            end = _directive_end(src, pos)
            text = src[pos:end]
            body = text[1:].lstrip()
            kind = "PRAGMA" if re.match(r"pragma\b", body) else "PREPROC"
            tokens.append(Token(kind, text.rstrip("\r"), line, pos - line_start + 1, pos, end))
            nls = text.count("\n")
            if nls:
                line += nls
                line_start = pos + text.rfind("\n") + 1
            pos = end
            continue
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise KernelSyntaxError(f"unexpected character {ch!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        text = m.group()
        if kind == "nl":
            line += 1
            line_start = m.end()
            at_line_start = True
        elif kind in ("ws", "lcomment"):
            if "\n" in text:
                line += 1
                line_start = m.end()
        elif kind == "bcomment":
            nls = text.count("\n")
            if nls:
                line += nls
                line_start = pos + text.rfind("\n") + 1
        else:
            tokens.append(Token(kind.upper(), text, line, pos - line_start + 1, pos, m.end()))
            at_line_start = False
        pos = m.end()
    tokens.append(Token("EOF", "", line, pos - line_start + 1, pos, pos))
    return tokens
