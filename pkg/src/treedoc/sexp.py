"""S-expression serialization of document trees.

Output form: compounds are ``(label child ...)`` with a single space
between siblings, leaves are double-quoted strings.  Inside leaves the
writer escapes ``"`` as ``\\"``, backslash as ``\\\\`` and newline as
``\\n``; everything else (including ``<name>`` entities) passes through
verbatim.  ``read_sexp`` inverts ``write_sexp`` exactly.
"""
from __future__ import annotations

from treedoc.nodes import Compound, Node

_ESCAPES = {'"': '\\"', "\\": "\\\\", "\n": "\\n"}
_UNESCAPES = {'"': '"', "\\": "\\", "n": "\n"}


MAX_NEST = 200


class SexpParseError(Exception):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


def _quote(text: str) -> str:
    return '"' + "".join(_ESCAPES.get(c, c) for c in text) + '"'


def write_sexp(n: Node) -> str:
    out: list[str] = []
    _write(n, out)
    return "".join(out)


def _write(n: Node, out: list[str]) -> None:
    if isinstance(n, str):
        out.append(_quote(n))
        return
    out.append("(")
    out.append(n.label)
    for child in n.children:
        out.append(" ")
        _write(child, out)
    out.append(")")


def read_sexp(text: str) -> Node:
    """Parse one tree; trailing content past the first form is an error."""
    node, pos = _parse(text, _skip_ws(text, 0))
    pos = _skip_ws(text, pos)
    if pos != len(text):
        raise SexpParseError("trailing content after expression", pos)
    return node


def _skip_ws(text: str, pos: int) -> int:
    while pos < len(text) and text[pos] in " \t\n\r":
        pos += 1
    return pos


def _parse(text: str, pos: int, depth: int = 0):
    if pos >= len(text):
        raise SexpParseError("unexpected end of input", pos)
    c = text[pos]
    if c == '"':
        return _parse_string(text, pos)
    if c == "(":
        if depth >= MAX_NEST:
            raise SexpParseError(f"nesting exceeds {MAX_NEST}", pos)
        return _parse_list(text, pos, depth)
    if c == ")":
        raise SexpParseError("unexpected ')'", pos)
    raise SexpParseError(f"unexpected character {c!r}", pos)


def _parse_string(text: str, pos: int):
    out: list[str] = []
    i = pos + 1
    while i < len(text):
        c = text[i]
        if c == "\\":
            if i + 1 >= len(text):
                raise SexpParseError("dangling escape", i)
            esc = text[i + 1]
            if esc not in _UNESCAPES:
                raise SexpParseError(f"unknown escape \\{esc}", i)
            out.append(_UNESCAPES[esc])
            i += 2
        elif c == '"':
            return "".join(out), i + 1
        else:
            out.append(c)
            i += 1
    raise SexpParseError("unterminated string", len(text))


def _parse_list(text: str, pos: int, depth: int = 0):
    i = pos + 1
    start = i
    while i < len(text) and text[i] not in ' \t\n\r()"':
        i += 1
    label = text[start:i]
    if not label:
        raise SexpParseError("missing label after '('", pos)
    children: list[Node] = []
    while True:
        i = _skip_ws(text, i)
        if i >= len(text):
            raise SexpParseError("unbalanced parenthesis", len(text))
        if text[i] == ")":
            return Compound(label, tuple(children)), i + 1
        child, i = _parse(text, i, depth + 1)
        children.append(child)
