"""Tree normal form.

The importer collapses source-level equivalences structurally (braced
and bare scripts are indistinguishable after parse, ``\\over`` becomes a
``frac``, delimiter pairs become ``around*``), so the normal form left
to enforce on trees is purely structural: nested concats are flattened,
adjacent text leaves inside a concat merge, empty leaves vanish from
inline flow, and a one-child concat is replaced by its child.  Block
containers (document, itemize, ...) keep their children apart; each
child is one line, and an empty line stays an empty leaf.

``canonicalize`` is idempotent and returns the argument object itself
when nothing changes, preserving sharing.
"""
from __future__ import annotations

from treedoc.nodes import Compound, Node


def assemble_inline(items: list[Node]) -> Node:
    """Normalize an inline sibling list to a single node."""
    flat: list[Node] = []
    for it in items:
        if isinstance(it, Compound) and it.label == "concat":
            flat.extend(it.children)
        else:
            flat.append(it)
    merged: list[Node] = []
    for it in flat:
        if isinstance(it, str) and merged and isinstance(merged[-1], str):
            merged[-1] = merged[-1] + it
        else:
            merged.append(it)
    merged = [m for m in merged if m != ""]
    if not merged:
        return ""
    if len(merged) == 1:
        return merged[0]
    return Compound("concat", tuple(merged))


def canonicalize(n: Node) -> Node:
    if isinstance(n, str):
        return n
    kids = tuple(canonicalize(c) for c in n.children)
    if n.label == "concat":
        node = assemble_inline(list(kids))
        return n if node == n else node
    if all(a is b for a, b in zip(kids, n.children)):
        return n
    return Compound(n.label, kids)
