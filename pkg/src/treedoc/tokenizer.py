"""LaTeX subset lexer.

Lossless: concatenating the ``text`` of every token (comments included)
reproduces the source exactly.  ``\\begin{name}`` / ``\\end{name}`` are
recognized as single environment tokens; everything the grammar does not
claim becomes a plain ``char`` token.  Offsets are byte positions in the
UTF-8 encoding of the source.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

CONTROL_WORD = "control-word"
CONTROL_SYMBOL = "control-symbol"
GROUP_OPEN = "group-open"
GROUP_CLOSE = "group-close"
CHAR = "char"
MATH_SHIFT = "math-shift"
SUPERSCRIPT = "superscript"
SUBSCRIPT = "subscript"
ALIGNMENT = "alignment"
COMMENT = "comment"
ENV_BEGIN = "environment-begin"
ENV_END = "environment-end"

_ENV_RE = re.compile(r"\\(begin|end)\s*\{\s*([A-Za-z][A-Za-z0-9*@-]*)\s*\}")
_WORD_RE = re.compile(r"\\([a-zA-Z]+\*?)")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    offset: int

    @property
    def env_name(self) -> str:
        m = _ENV_RE.match(self.text)
        if not m:
            raise ValueError(f"not an environment token: {self.text!r}")
        return m.group(2)

    @property
    def command(self) -> str:
        """Control-word name without the backslash."""
        return self.text[1:]

    def is_space(self) -> bool:
        return self.kind == CHAR and self.text in " \t"

    def is_newline(self) -> bool:
        return self.kind == CHAR and self.text == "\n"


def tokenize(src: str) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    byte = 0

    def emit(kind: str, text: str):
        nonlocal byte
        tokens.append(Token(kind, text, byte))
        byte += len(text.encode("utf-8"))

    n = len(src)
    while i < n:
        c = src[i]
        if c == "\\":
            m = _ENV_RE.match(src, i)
            if m:
                emit(ENV_BEGIN if m.group(1) == "begin" else ENV_END, m.group(0))
                i = m.end()
                continue
            m = _WORD_RE.match(src, i)
            if m:
                emit(CONTROL_WORD, m.group(0))
                i = m.end()
                continue
            if i + 1 < n:
                emit(CONTROL_SYMBOL, src[i : i + 2])
                i += 2
            else:
                emit(CHAR, c)
                i += 1
        elif c == "%":
            j = src.find("\n", i)
            j = n if j == -1 else j + 1
            emit(COMMENT, src[i:j])
            i = j
        elif c == "{":
            emit(GROUP_OPEN, c)
            i += 1
        elif c == "}":
            emit(GROUP_CLOSE, c)
            i += 1
        elif c == "$":
            emit(MATH_SHIFT, c)
            i += 1
        elif c == "^":
            emit(SUPERSCRIPT, c)
            i += 1
        elif c == "_":
            emit(SUBSCRIPT, c)
            i += 1
        elif c == "&":
            emit(ALIGNMENT, c)
            i += 1
        else:
            emit(CHAR, c)
            i += 1
    return tokens
