"""Labeled-tree document model.

A node is either a plain string (a text leaf) or a :class:`Compound`
carrying a label and an ordered tuple of child nodes.  Trees are
immutable values: structural edits go through :func:`apply_edit`, which
returns a fresh tree sharing every untouched subtree with the original.

Leaf text may embed entity escapes of the form ``<name>`` (for example
``<mathd>`` or ``<nobracket>``); entity names match
``[a-zA-Z][a-zA-Z0-9]*`` and are opaque to this module.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, replace
from typing import Iterator, Optional, Sequence, Union

Node = Union[str, "Compound"]
Path = tuple[int, ...]

ENTITY_RE = re.compile(r"<([a-zA-Z][a-zA-Z0-9]*)>")

#: Labels outside this registry are only legal under the ``raw:`` namespace.
#: Value is the required child count, or None for variadic labels.
_ARITIES: dict[str, Optional[int]] = {
    "document": None,
    "concat": None,
    "itemize": None,
    "matrix": None,
    "row": None,
    "cases": None,
    "figure": None,
    "error": None,
    "theorem": None,
    "lemma": None,
    "proposition": None,
    "corollary": None,
    "definition": None,
    "remark": None,
    "example": None,
    "proof": None,
    "math": 1,
    "equation": 1,
    "sqrt": 1,
    "rsub": 1,
    "rsup": 1,
    "big": 1,
    "section": 1,
    "subsection": 1,
    "label": 1,
    "reference": 1,
    "image": 1,
    "caption": 1,
    "frac": 2,
    "around": 3,
    "around*": 3,
    "item": 0,
}

RAW_PREFIX = "raw:"

#: Labels whose occurrence advances a counter during resolution.
THEOREM_LIKE = frozenset(
    {"theorem", "lemma", "proposition", "corollary", "definition", "remark", "example"}
)


class TreeError(Exception):
    """Base class for document-tree errors."""


class UnknownLabelError(TreeError):
    def __init__(self, label: str):
        super().__init__(f"label {label!r} is not registered (use the {RAW_PREFIX}* namespace for foreign tags)")
        self.label = label


class ArityError(TreeError):
    def __init__(self, label: str, expected: int, got: int):
        super().__init__(f"label {label!r} takes exactly {expected} children, got {got}")
        self.label = label
        self.expected = expected
        self.got = got


class PathError(TreeError):
    """A path step did not resolve; ``depth`` is the failing index position."""

    def __init__(self, message: str, depth: int):
        super().__init__(f"{message} (at depth {depth})")
        self.depth = depth


class EditConflictError(TreeError):
    """The edit's recorded old subtree does not match the document."""


def register_label(name: str, arity: Optional[int]) -> None:
    """Add a label to the vocabulary; arity None means variadic."""
    _ARITIES[name] = arity


def label_arity(name: str) -> Optional[int]:
    if name.startswith(RAW_PREFIX):
        return None
    try:
        return _ARITIES[name]
    except KeyError:
        raise UnknownLabelError(name) from None


def is_registered(name: str) -> bool:
    return name in _ARITIES


@dataclass(frozen=True)
class Compound:
    label: str
    children: tuple[Node, ...] = ()

    def __post_init__(self):
        if not isinstance(self.children, tuple):
            object.__setattr__(self, "children", tuple(self.children))
        arity = label_arity(self.label)
        if arity is not None and len(self.children) != arity:
            raise ArityError(self.label, arity, len(self.children))


def make_node(label: str, children: Sequence[Node] = ()) -> Compound:
    """Construct a compound node, validating the label's arity class."""
    return Compound(label, tuple(children))


def is_leaf(n: Node) -> bool:
    return isinstance(n, str)


def subtree_at(root: Node, path: Sequence[int]) -> Node:
    """Return the subtree addressed by ``path`` (empty path is ``root``)."""
    node = root
    for depth, idx in enumerate(path):
        if isinstance(node, str):
            raise PathError(f"cannot descend into leaf {node!r}", depth)
        if not 0 <= idx < len(node.children):
            raise PathError(
                f"index {idx} out of range for {node.label!r} with {len(node.children)} children",
                depth,
            )
        node = node.children[idx]
    return node


def struct_eq(a: Node, b: Node) -> bool:
    """Recursive structural equality over labels, leaf texts and order."""
    return a == b


@dataclass(frozen=True)
class EditRecord:
    """One structural edit: the dirty region for incremental passes.

    ``replace`` carries both ``old`` and ``new``; ``insert`` only ``new``
    (path names the insertion slot, possibly one past the last child);
    ``delete`` only ``old``.
    """

    path: Path
    kind: str  # "replace" | "insert" | "delete"
    old: Optional[Node] = None
    new: Optional[Node] = None

    def __post_init__(self):
        if self.kind not in ("replace", "insert", "delete"):
            raise TreeError(f"unknown edit kind {self.kind!r}")
        object.__setattr__(self, "path", tuple(self.path))
        need_old = self.kind in ("replace", "delete")
        need_new = self.kind in ("replace", "insert")
        if need_old != (self.old is not None) or need_new != (self.new is not None):
            raise TreeError(f"{self.kind} edit must carry " + ("old and new" if self.kind == "replace" else ("new only" if self.kind == "insert" else "old only")))


@dataclass(frozen=True)
class Document:
    """A root ``document`` tree plus metadata.

    ``aux`` is the resolver's label table (resolver module); ``style`` is
    the macro table the source was imported under (latex bridge).  Both
    are optional metadata and do not take part in structural equality of
    the root.
    """

    root: Compound
    title: str = ""
    aux: object = None
    style: object = None

    def __post_init__(self):
        if not isinstance(self.root, Compound) or self.root.label != "document":
            raise TreeError("document root must be a 'document' compound")


def _rebuild(node: Compound, path: Path, depth: int, mutate) -> Compound:
    """Rebuild the spine along ``path``; ``mutate`` edits the final child list."""
    if isinstance(node, str):
        raise PathError("cannot descend into leaf", depth)
    kids = list(node.children)
    if depth == len(path) - 1:
        mutate(kids, path[depth], node)
    else:
        idx = path[depth]
        if not 0 <= idx < len(kids):
            raise PathError(f"index {idx} out of range", depth)
        kids[idx] = _rebuild(kids[idx], path, depth + 1, mutate)
    return Compound(node.label, tuple(kids))


def apply_edit(doc: Document, edit: EditRecord) -> Document:
    """Apply one edit, returning a new Document; the input is untouched."""
    path = edit.path
    if edit.kind == "replace" and not path:
        if not struct_eq(doc.root, edit.old):
            raise EditConflictError("stale edit: old root does not match")
        if not isinstance(edit.new, Compound) or edit.new.label != "document":
            raise TreeError("root replacement must be a document node")
        return replace(doc, root=edit.new)
    if not path:
        raise TreeError(f"{edit.kind} edit requires a non-empty path")

    def mutate(kids: list, idx: int, parent: Compound):
        if edit.kind == "insert":
            if not 0 <= idx <= len(kids):
                raise PathError(f"insert index {idx} out of range", len(path) - 1)
            kids.insert(idx, edit.new)
            return
        if not 0 <= idx < len(kids):
            raise PathError(f"index {idx} out of range", len(path) - 1)
        if not struct_eq(kids[idx], edit.old):
            raise EditConflictError(
                f"stale edit at {path}: document has {kids[idx]!r}, edit expected {edit.old!r}"
            )
        if edit.kind == "replace":
            kids[idx] = edit.new
        else:
            del kids[idx]

    return replace(doc, root=_rebuild(doc.root, path, 0, mutate))


def iter_nodes(root: Node) -> Iterator[Node]:
    """Depth-first pre-order walk."""
    stack = [root]
    while stack:
        n = stack.pop()
        yield n
        if isinstance(n, Compound):
            stack.extend(reversed(n.children))


def iter_with_paths(root: Node, prefix: Path = ()) -> Iterator[tuple[Path, Node]]:
    yield prefix, root
    if isinstance(root, Compound):
        for i, child in enumerate(root.children):
            yield from iter_with_paths(child, prefix + (i,))


def count_nodes(root: Node) -> int:
    return sum(1 for _ in iter_nodes(root))


def check_arity(root: Node) -> list[str]:
    """Walk the tree and report fixed-arity violations (should be none:
    construction enforces arity, so a non-empty result means a tree was
    forged around the constructors)."""
    problems = []
    for path, n in iter_with_paths(root):
        if isinstance(n, Compound):
            arity = label_arity(n.label)
            if arity is not None and len(n.children) != arity:
                problems.append(f"{n.label} at {path}: expected {arity} children, found {len(n.children)}")
    return problems
