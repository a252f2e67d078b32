"""Angle-bracket (tmu-dialect) serialization.

Compound nodes are ``<label|child|...|child>`` (``<label>`` when there
are no children); leaves are literal text.  Inside leaf text the writer
escapes ``\\``, ``|``, ``<``, ``>`` and newline as ``\\\\``, ``\\|``,
``\\<``, ``\\>``, ``\\n``, except that entity escapes ``<name>`` pass
through verbatim (unless the name collides with a registered node label,
in which case the brackets are escaped so the text reads back as text).

A document file is the root tree on one line followed by one
``<associate|label|<tuple|number|page>>`` line per resolved label,
sorted by label.  This dialect is this project's own; it makes no
compatibility promise with GNU TeXmacs files.
"""
from __future__ import annotations

import re
from typing import Optional

from treedoc.nodes import (
    ENTITY_RE,
    RAW_PREFIX,
    Compound,
    Document,
    Node,
    is_registered,
)
from treedoc.resolver import AuxTable, RefValue, label_kinds

_NAME_RE = re.compile(r"[a-zA-Z][a-zA-Z0-9*-]*")
_MAX_NEST = 200
_SPECIALS = {"\\": "\\\\", "|": "\\|", "<": "\\<", ">": "\\>", "\n": "\\n"}
_UNESCAPES = {"\\": "\\", "|": "|", "<": "<", ">": ">", "n": "\n"}


class TmuParseError(Exception):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


def _escape_plain(text: str) -> str:
    return "".join(_SPECIALS.get(c, c) for c in text)


def _escape_leaf(text: str) -> str:
    out = []
    pos = 0
    for m in ENTITY_RE.finditer(text):
        out.append(_escape_plain(text[pos : m.start()]))
        if is_registered(m.group(1)):
            out.append(_escape_plain(m.group(0)))
        else:
            out.append(m.group(0))
        pos = m.end()
    out.append(_escape_plain(text[pos:]))
    return "".join(out)


def write_node(n: Node) -> str:
    if isinstance(n, str):
        return _escape_leaf(n)
    label = n.label[len(RAW_PREFIX) :] if n.label.startswith(RAW_PREFIX) else n.label
    if not n.children:
        return f"<{label}>"
    return "<" + label + "|" + "|".join(write_node(c) for c in n.children) + ">"


def write_tmu(d: Document) -> str:
    lines = [write_node(d.root)]
    aux: Optional[AuxTable] = d.aux
    if aux is not None:
        for name in sorted(aux.entries):
            rv = aux.entries[name]
            lines.append(
                f"<associate|{_escape_plain(name)}|<tuple|{_escape_plain(rv.number)}|{rv.page}>>"
            )
    return "\n".join(lines) + "\n"


def _parse_slot(text: str, pos: int, depth: int = 0):
    """Parse one child slot: text, entities and nested forms up to an
    unescaped ``|`` or ``>``.  Mixed text and markup becomes a concat."""
    pieces: list[Node] = []
    buf: list[str] = []

    def flush():
        if buf:
            pieces.append("".join(buf))
            buf.clear()

    while pos < len(text):
        c = text[pos]
        if c == "\\":
            if pos + 1 >= len(text) or text[pos + 1] not in _UNESCAPES:
                raise TmuParseError("dangling escape", pos)
            buf.append(_UNESCAPES[text[pos + 1]])
            pos += 2
        elif c in "|>":
            flush()
            break
        elif c == "<":
            m = _NAME_RE.match(text, pos + 1)
            if not m:
                raise TmuParseError("'<' not followed by a tag or entity name", pos)
            end = m.end()
            if end < len(text) and text[end] == ">" and not is_registered(m.group(0)):
                buf.append(text[pos : end + 1])  # entity, stays in the leaf
                pos = end + 1
                continue
            flush()
            node, pos = _parse_form(text, pos, depth)
            pieces.append(node)
        else:
            buf.append(c)
            pos += 1
    else:
        flush()
    if not pieces:
        return "", pos
    if len(pieces) == 1:
        return pieces[0], pos
    return Compound("concat", tuple(pieces)), pos


def _parse_form(text: str, pos: int, depth: int = 0):
    """Parse ``<label|...>`` starting at ``pos``; returns (node, pos)."""
    if depth >= _MAX_NEST:
        raise TmuParseError(f"nesting exceeds {_MAX_NEST}", pos)
    start = pos
    m = _NAME_RE.match(text, pos + 1)
    if not m:
        raise TmuParseError("expected tag name after '<'", pos)
    raw_label = m.group(0)
    label = raw_label if is_registered(raw_label) else RAW_PREFIX + raw_label
    pos = m.end()
    children: list[Node] = []
    if pos < len(text) and text[pos] == ">":
        return _build(label, children, start), pos + 1
    while True:
        if pos >= len(text):
            raise TmuParseError("unbalanced markup: missing '>'", start)
        if text[pos] == "|":
            child, pos = _parse_slot(text, pos + 1, depth + 1)
            children.append(child)
        elif text[pos] == ">":
            return _build(label, children, start), pos + 1
        else:
            raise TmuParseError(f"unexpected character {text[pos]!r} in tag", pos)


def _build(label: str, children: list[Node], offset: int) -> Compound:
    try:
        return Compound(label, tuple(children))
    except Exception as exc:
        raise TmuParseError(str(exc), offset) from None


def _take_aux_entry(node: Compound, offset: int) -> tuple[str, str, int]:
    bad = TmuParseError("malformed associate entry", offset)
    if len(node.children) != 2 or not isinstance(node.children[0], str):
        raise bad
    tup = node.children[1]
    if (
        not isinstance(tup, Compound)
        or tup.label != RAW_PREFIX + "tuple"
        or len(tup.children) != 2
        or not all(isinstance(c, str) for c in tup.children)
    ):
        raise bad
    try:
        page = int(tup.children[1])
    except ValueError:
        raise bad from None
    if page < 1:
        raise bad
    return node.children[0], tup.children[0], page


def read_tmu(text: str) -> Document:
    """Inverse of write_tmu; unknown tags land in the ``raw:`` namespace."""
    pos = 0
    roots: list[Node] = []
    raw_aux: list[tuple[str, str, int]] = []
    while pos < len(text):
        if text[pos] in " \t\n\r":
            pos += 1
            continue
        start = pos
        if text[pos] != "<":
            raise TmuParseError("expected markup at top level", pos)
        node, pos = _parse_form(text, pos)
        if isinstance(node, Compound) and node.label == RAW_PREFIX + "associate":
            raw_aux.append(_take_aux_entry(node, start))
        else:
            roots.append(node)

    if not roots:
        root = Compound("document", ())
    elif len(roots) == 1 and isinstance(roots[0], Compound) and roots[0].label == "document":
        root = roots[0]
    else:
        root = Compound("document", tuple(roots))

    if not raw_aux:
        # no associate lines: the file was never resolved
        return Document(root=root, aux=None)
    kinds = label_kinds(root)
    entries = {
        name: RefValue(number, page, kinds.get(name, "section"))
        for name, number, page in raw_aux
    }
    return Document(root=root, aux=AuxTable(entries=entries))
