"""Doc-style-aware document merging.

Proof blocks from the follower move to sit immediately after the lead
theorem they reference (matched through cross-reference labels); ties
keep follower order.  The merged document carries the lead's doc-style,
so a later export writes every environment under the lead's aliases.
"""
from __future__ import annotations

from treedoc.diagnostics import Diagnostic, FaultKind, diag
from treedoc.nodes import (
    THEOREM_LIKE,
    Compound,
    Document,
    Node,
    iter_nodes,
)


def _unwrap_error(block: Node) -> Node:
    if isinstance(block, Compound) and block.label == "error" and len(block.children) == 1:
        return block.children[0]
    return block


def _labels_in(node: Node) -> list[str]:
    out = []
    for n in iter_nodes(node):
        if isinstance(n, Compound) and n.label == "label" and isinstance(n.children[0], str):
            out.append(n.children[0])
    return out


def _first_reference(node: Node, candidates: set[str]) -> str | None:
    for n in iter_nodes(node):
        if (
            isinstance(n, Compound)
            and n.label == "reference"
            and isinstance(n.children[0], str)
            and n.children[0] in candidates
        ):
            return n.children[0]
    return None


def merge_documents(lead: Document, follower: Document) -> tuple[Document, list[Diagnostic]]:
    diags: list[Diagnostic] = []

    lead_blocks = list(lead.root.children)
    theorem_of: dict[str, int] = {}
    for idx, block in enumerate(lead_blocks):
        inner = _unwrap_error(block)
        if isinstance(inner, Compound) and inner.label in THEOREM_LIKE:
            for name in _labels_in(inner):
                theorem_of.setdefault(name, idx)

    lead_labels = set()
    for block in lead_blocks:
        lead_labels.update(_labels_in(block))

    # proofs referencing a lead theorem are pulled in under it
    insertions: dict[int, list[Node]] = {}
    leftover: list[Node] = []
    for fi, block in enumerate(follower.root.children):
        for name in _labels_in(block):
            if name in lead_labels:
                diags.append(
                    diag(
                        FaultKind.CONFLICTING_DEFINITION,
                        anchor=(fi,),
                        message=f"label {name!r} is defined in both documents",
                        recovery="lead binding wins at resolve time",
                    )
                )
        inner = _unwrap_error(block)
        if isinstance(inner, Compound) and inner.label == "proof":
            target = _first_reference(inner, set(theorem_of))
            if target is not None:
                insertions.setdefault(theorem_of[target], []).append(block)
                continue
            diags.append(
                diag(
                    FaultKind.UNDEFINED_CROSS_REFERENCE,
                    anchor=(fi,),
                    message="proof references no theorem present in the lead document",
                    recovery="appended at the end",
                )
            )
        leftover.append(block)

    if lead.style is not None and follower.style is not None:
        for name, d in follower.style.macros.items():
            prior = lead.style.macros.get(name)
            if prior is not None and prior.body_text != d.body_text:
                diags.append(
                    diag(
                        FaultKind.CONFLICTING_DEFINITION,
                        message=f"macro \\{name} differs between doc-styles",
                        recovery="lead definition wins",
                    )
                )

    merged: list[Node] = []
    for idx, block in enumerate(lead_blocks):
        merged.append(block)
        merged.extend(insertions.get(idx, ()))
    merged.extend(leftover)

    out = Document(
        root=Compound("document", tuple(merged)),
        title=lead.title,
        aux=None,
        style=lead.style,
    )
    return out, diags
