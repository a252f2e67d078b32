"""treedoc: a labeled-tree document kernel with a LaTeX bridge.

Documents are explicit trees (see :mod:`treedoc.nodes`); the package
provides bidirectional serializers, a fault-localizing LaTeX importer,
incremental cross-reference resolution, corpus generation, entropy
metrics and a benchmark harness, all behind the ``treedoc`` CLI.
"""

from treedoc.nodes import (
    Compound,
    Document,
    EditRecord,
    Node,
    apply_edit,
    make_node,
    struct_eq,
    subtree_at,
)

__all__ = [
    "Compound",
    "Document",
    "EditRecord",
    "Node",
    "apply_edit",
    "make_node",
    "struct_eq",
    "subtree_at",
]

__version__ = "0.1.0"
