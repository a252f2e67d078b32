"""Numbering, pagination and cross-reference resolution.

Numbering model: sections count 1, 2, ...; subsections ``s.k``;
equations, theorem-like blocks and figures each get a per-section
counter rendered ``section.counter``.  Pages come from a line model:
every block child of a ``document`` node consumes one line (figures
consume ``figure_lines``), and a page holds ``lines_per_page`` lines.

``resolve_full`` walks the whole tree.  ``resolve_incremental`` reuses
the event index cached inside the previous AuxTable: it rescans only the
edited subtree, splices its events into the index, and renumbers the
index arithmetically.  Touch accounting counts live-tree node visits
(the rescanned subtree), units whose number or page shifted, and
references whose resolved value changed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from treedoc.diagnostics import Diagnostic, FaultKind, diag
from treedoc.nodes import (
    THEOREM_LIKE,
    Compound,
    Document,
    EditRecord,
    Node,
    Path,
    count_nodes,
    subtree_at,
)
from treedoc.sexp import write_sexp


@dataclass(frozen=True)
class RefValue:
    number: str
    page: int
    kind: str  # "section" | "equation" | "theorem" | "figure"


@dataclass(frozen=True)
class LayoutParams:
    lines_per_page: int = 40
    figure_lines: int = 10

    def __post_init__(self):
        if self.lines_per_page < 1 or self.figure_lines < 1:
            raise ValueError("layout parameters must be >= 1")


@dataclass(frozen=True)
class TouchStats:
    touched_nodes: int
    recomputed_refs: int
    total_nodes: int


# One record per structure-relevant node, in document order.  kind is one
# of "line", "section", "subsection", "equation", "theorem", "figure",
# "label", "ref"; rank orders same-path events (a block's line event
# precedes the unit event of the block itself).
@dataclass(frozen=True)
class _Event:
    path: Path
    rank: int
    kind: str
    name: str = ""
    lines: int = 0


@dataclass(frozen=True)
class _Numbered:
    event: _Event
    number: str = ""
    page: int = 0


@dataclass(frozen=True)
class AuxTable:
    """Resolved label table; equality covers entries and diagnostics.

    The event index and node count ride along as a cache so an
    incremental resolve can start from the previous state without
    re-walking the document.
    """

    entries: dict[str, RefValue] = field(default_factory=dict)
    diagnostics: tuple[Diagnostic, ...] = ()
    _numbered: tuple[_Numbered, ...] = field(default=(), compare=False, repr=False)
    _total_nodes: int = field(default=0, compare=False, repr=False)

    def __hash__(self):  # entries is a dict; the table is compared, never hashed
        raise TypeError("AuxTable is not hashable")


def lookup(aux: AuxTable, label: str) -> Optional[RefValue]:
    """Exact-match lookup; None signals an undefined cross-reference."""
    return aux.entries.get(label)


_UNIT_KINDS = {"section", "subsection", "equation", "theorem", "figure"}


def _label_text(node: Compound) -> str:
    child = node.children[0]
    return child if isinstance(child, str) else write_sexp(child)


def _scan(node: Node, path: Path, parent_is_document: bool, lp: LayoutParams, out: list[_Event]) -> int:
    """Collect events depth-first; returns number of nodes visited."""
    visited = 1
    if parent_is_document:
        is_figure = isinstance(node, Compound) and node.label == "figure"
        out.append(_Event(path, 0, "line", lines=lp.figure_lines if is_figure else 1))
    if isinstance(node, str):
        return visited
    if node.label in ("section", "subsection", "equation", "figure"):
        out.append(_Event(path, 1, node.label))
    elif node.label in THEOREM_LIKE:
        out.append(_Event(path, 1, "theorem"))
    elif node.label == "label":
        out.append(_Event(path, 1, "label", name=_label_text(node)))
    elif node.label == "reference":
        out.append(_Event(path, 1, "ref", name=_label_text(node)))
    here_is_document = node.label == "document"
    for i, child in enumerate(node.children):
        visited += _scan(child, path + (i,), here_is_document, lp, out)
    return visited


def _number_events(events: Iterable[_Event], lp: LayoutParams):
    """Assign numbers and pages; returns (numbered, entries, diagnostics)."""
    sec = sub = eq = thm = fig = 0
    lines_before = 0
    page = 1
    number = "0"
    kind = "section"
    numbered: list[_Numbered] = []
    entries: dict[str, RefValue] = {}
    diags: list[Diagnostic] = []
    refs: list[tuple[_Event, str]] = []
    for ev in events:
        if ev.kind == "line":
            page = lines_before // lp.lines_per_page + 1
            lines_before += ev.lines
            numbered.append(_Numbered(ev, "", page))
            continue
        if ev.kind == "section":
            sec += 1
            sub = eq = thm = fig = 0
            number, kind = str(sec), "section"
        elif ev.kind == "subsection":
            sub += 1
            number, kind = f"{sec}.{sub}", "section"
        elif ev.kind == "equation":
            eq += 1
            number, kind = f"{sec}.{eq}", "equation"
        elif ev.kind == "theorem":
            thm += 1
            number, kind = f"{sec}.{thm}", "theorem"
        elif ev.kind == "figure":
            fig += 1
            number, kind = f"{sec}.{fig}", "figure"
        elif ev.kind == "label":
            if ev.name in entries:
                diags.append(
                    diag(
                        FaultKind.CONFLICTING_DEFINITION,
                        anchor=ev.path,
                        message=f"duplicate label {ev.name!r}; first binding wins",
                        recovery="kept the first definition",
                    )
                )
            else:
                entries[ev.name] = RefValue(number, page, kind)
            numbered.append(_Numbered(ev, number, page))
            continue
        elif ev.kind == "ref":
            refs.append((ev, ev.name))
            numbered.append(_Numbered(ev))
            continue
        numbered.append(_Numbered(ev, number, page))
    for ev, name in refs:
        if name not in entries:
            diags.append(
                diag(
                    FaultKind.UNDEFINED_CROSS_REFERENCE,
                    anchor=ev.path,
                    message=f"reference to undefined label {name!r}",
                    recovery='rendered as "??"',
                )
            )
    return tuple(numbered), entries, tuple(diags)


def resolve_full(
    d: Document, lp: LayoutParams = LayoutParams(), parallel: bool = False
) -> AuxTable:
    """Number the whole document.

    With ``parallel`` the top-level blocks are scanned across a thread
    pool and the event streams concatenated in block order before the
    single numbering pass, so the table is identical to the sequential
    one by construction.
    """
    if parallel and len(d.root.children) > 1:
        from concurrent.futures import ThreadPoolExecutor

        def scan_block(i_child):
            i, child = i_child
            out: list[_Event] = []
            n = _scan(child, (i,), True, lp, out)
            return n, out

        events = []
        visited = 1
        with ThreadPoolExecutor(max_workers=4) as pool:
            for n, out in pool.map(scan_block, enumerate(d.root.children)):
                visited += n
                events.extend(out)
    else:
        events = []
        visited = _scan(d.root, (), False, lp, events)
    numbered, entries, diags = _number_events(events, lp)
    return AuxTable(entries, diags, numbered, visited)


def label_kinds(root: Compound) -> dict[str, str]:
    """Kind each label would resolve under (used to rehydrate aux files)."""
    events: list[_Event] = []
    _scan(root, (), False, LayoutParams(), events)
    _, entries, _ = _number_events(events, LayoutParams())
    return {name: rv.kind for name, rv in entries.items()}


def _shift_path(path: Path, slot: Path, delta: int) -> Path:
    """Adjust a pre-edit path for an insert/delete at ``slot``."""
    depth = len(slot) - 1
    if len(path) <= depth or path[:depth] != slot[:depth]:
        return path
    if path[depth] >= slot[depth]:
        return path[:depth] + (path[depth] + delta,) + path[depth + 1 :]
    return path


def _starts_with(path: Path, prefix: Path) -> bool:
    return path[: len(prefix)] == prefix


def resolve_incremental(
    d: Document, prev: AuxTable, edit: EditRecord, lp: LayoutParams = LayoutParams()
) -> tuple[AuxTable, TouchStats]:
    """Update ``prev`` (which must come from resolve_full on the pre-edit
    document) after ``edit`` has been applied to produce ``d``."""
    if prev._total_nodes == 0:
        raise ValueError("prev table carries no resolve cache; run resolve_full first")
    path = edit.path

    # Re-index surviving pre-edit events into post-edit coordinates.
    kept: list[_Numbered] = []
    dropped: list[_Event] = []
    if edit.kind == "replace":
        for nb in prev._numbered:
            if not _starts_with(nb.event.path, path):
                kept.append(nb)
            else:
                dropped.append(nb.event)
    elif edit.kind == "delete":
        for nb in prev._numbered:
            if _starts_with(nb.event.path, path):
                continue
            new_p = _shift_path(nb.event.path, path, -1)
            kept.append(_Numbered(_Event(new_p, nb.event.rank, nb.event.kind, nb.event.name, nb.event.lines), nb.number, nb.page))
    else:  # insert
        for nb in prev._numbered:
            new_p = _shift_path(nb.event.path, path, +1)
            kept.append(_Numbered(_Event(new_p, nb.event.rank, nb.event.kind, nb.event.name, nb.event.lines), nb.number, nb.page))

    # Rescan only the edited subtree (these are the live node visits).
    new_events: list[_Event] = []
    visited = 0
    if edit.kind != "delete":
        parent_is_doc = False
        if path:
            parent = subtree_at(d.root, path[:-1])
            parent_is_doc = isinstance(parent, Compound) and parent.label == "document"
        visited = _scan(subtree_at(d.root, path), path, parent_is_doc, lp, new_events)

    total = prev._total_nodes + visited
    if edit.kind in ("replace", "delete"):
        total -= count_nodes(edit.old)

    # Content-only replace: same events in the dirty region means nothing
    # outside it can renumber, so the previous table stands as-is.
    if edit.kind == "replace" and dropped == new_events:
        table = AuxTable(prev.entries, prev.diagnostics, prev._numbered, total)
        return table, TouchStats(visited, 0, total)

    merged_events = sorted(
        [nb.event for nb in kept] + new_events, key=lambda e: (e.path, e.rank)
    )
    numbered, entries, diags = _number_events(merged_events, lp)

    # Shift accounting: units renumbered and refs whose value changed.
    old_values = {
        (nb.event.path, nb.event.rank): (nb.number, nb.page) for nb in kept
    }
    shifted = 0
    for nb in numbered:
        if nb.event.kind not in _UNIT_KINDS:
            continue
        old = old_values.get((nb.event.path, nb.event.rank))
        if old is not None and old != (nb.number, nb.page):
            shifted += 1
    changed = {
        name
        for name in set(prev.entries) | set(entries)
        if prev.entries.get(name) != entries.get(name)
    }
    recomputed_refs = sum(
        1 for nb in numbered if nb.event.kind == "ref" and nb.event.name in changed
    )

    table = AuxTable(entries, diags, numbered, total)
    stats = TouchStats(visited + shifted + recomputed_refs, recomputed_refs, total)
    return table, stats
