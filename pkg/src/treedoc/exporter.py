"""Canonical LaTeX emission.

The exporter inverts the importer on canonical trees: for any tree the
importer can produce without faults, ``import(export(tree))`` gives back
a struct-equal tree.  Environment names honor the target doc-style: a
canonical label aliased in the style's environment table is emitted
under its alias (first alias wins).

Export options exist only to drive the corpus variant generator; the
default form is the canonical one (``\\frac``, braced scripts,
``\\left``/``\\right`` pairs).
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from treedoc.macros import MacroTable
from treedoc.nodes import (
    ENTITY_RE,
    RAW_PREFIX,
    Compound,
    Document,
    Node,
    Path,
)
from treedoc.resolver import AuxTable
from treedoc.symbols import (
    DELIM_EXPORT,
    ENTITY_EXPORT,
    NOBRACKET,
    THEOREM_ENVS,
)

_MATH_LABELS = {
    "frac",
    "sqrt",
    "rsub",
    "rsup",
    "big",
    "around",
    "around*",
    "matrix",
    "row",
    "cases",
}
_PLAIN_PAIRS = {("(", ")"), ("[", "]")}


class ExportError(Exception):
    def __init__(self, message: str, path: Path = ()):
        super().__init__(f"{message} (at path {list(path)})")
        self.path = tuple(path)


@dataclass(frozen=True)
class ExportOptions:
    """Variant knobs; defaults are the canonical export form."""

    frac_as_over: bool = False
    bare_single_scripts: bool = False
    plain_delimiters: bool = False


class _Exporter:
    def __init__(self, style: MacroTable | None, aux: AuxTable | None, options: ExportOptions):
        self.style = style
        self.aux = aux
        self.options = options
        self._env_alias: dict[str, str] = {}
        if style is not None:
            for alias, canonical in style.environments.items():
                self._env_alias.setdefault(canonical, alias)

    def env_name(self, label: str) -> str:
        return self._env_alias.get(label, label)

    # -- leaves ---------------------------------------------------------

    def leaf(self, text: str, math: bool, path: Path) -> str:
        out = []
        pos = 0
        for m in ENTITY_RE.finditer(text):
            out.append(text[pos : m.start()])
            out.append(self.entity(m.group(1), math, path))
            pos = m.end()
        out.append(text[pos:])
        return "".join(out)

    def entity(self, name: str, math: bool, path: Path) -> str:
        if name == "mathd":
            return "\\mathrm{d}"
        if len(name) == 4 and name.startswith("bbb") and name[3].isalpha():
            return f"\\mathbb{{{name[3]}}}"
        cmd = ENTITY_EXPORT.get(name)
        if cmd is None:
            raise ExportError(f"entity <{name}> has no LaTeX mapping", path)
        return f"\\{cmd}{{}}"

    # -- math mode --------------------------------------------------------

    def math(self, n: Node, path: Path) -> str:
        if isinstance(n, str):
            return self.leaf(n, True, path)
        label = n.label
        kids = n.children
        if label == "concat":
            return "".join(self.math(c, path + (i,)) for i, c in enumerate(kids))
        if label == "frac":
            a = self.math(kids[0], path + (0,))
            b = self.math(kids[1], path + (1,))
            if self.options.frac_as_over:
                return f"{{{a} \\over {b}}}"
            return f"\\frac{{{a}}}{{{b}}}"
        if label == "sqrt":
            return f"\\sqrt{{{self.math(kids[0], path + (0,))}}}"
        if label in ("rsub", "rsup"):
            mark = "_" if label == "rsub" else "^"
            child = kids[0]
            body = self.math(child, path + (0,))
            if (
                self.options.bare_single_scripts
                and isinstance(child, str)
                and len(child) == 1
                and child.isalnum()
            ):
                return f"{mark}{body}"
            return f"{mark}{{{body}}}"
        if label == "big":
            op = kids[0]
            if not isinstance(op, str):
                raise ExportError("big operator must name its operator", path)
            return f"\\{op} "
        if label in ("around", "around*"):
            left, body, right = kids
            body_tex = self.math(body, path + (1,))
            if (
                self.options.plain_delimiters
                and isinstance(left, str)
                and isinstance(right, str)
                and (left, right) in _PLAIN_PAIRS
            ):
                return f"{left}{body_tex}{right}"
            return f"\\left{self.delim(left, path)} {body_tex} \\right{self.delim(right, path)}"
        if label in ("matrix", "cases"):
            env = label
            rows = []
            for i, row in enumerate(kids):
                if not isinstance(row, Compound) or row.label != "row":
                    raise ExportError(f"{label} child must be a row", path + (i,))
                cells = [
                    self.math(cell, path + (i, j)) for j, cell in enumerate(row.children)
                ]
                rows.append(" & ".join(cells))
            body = " \\\\ ".join(rows)
            return f"\\begin{{{env}}} {body} \\end{{{env}}}"
        if label == "label":
            return f"\\label{{{self.name_of(n, path)}}}"
        if label == "reference":
            return self.reference(n, path)
        if label == "math":
            return self.math(kids[0], path + (0,))
        if label == "error":
            return "".join(
                c if isinstance(c, str) else self.math(c, path + (i,))
                for i, c in enumerate(kids)
            )
        if label.startswith(RAW_PREFIX):
            return self.raw(n, path, math=True)
        raise ExportError(f"label {label!r} has no math-mode LaTeX mapping", path)

    def delim(self, d: Node, path: Path) -> str:
        if not isinstance(d, str):
            raise ExportError("delimiter must be a text leaf", path)
        if d == NOBRACKET or d == "":
            return "."
        out = DELIM_EXPORT.get(d)
        if out is None:
            raise ExportError(f"delimiter {d!r} has no LaTeX mapping", path)
        return out

    def name_of(self, n: Compound, path: Path) -> str:
        child = n.children[0]
        if not isinstance(child, str):
            raise ExportError(f"{n.label} name must be a text leaf", path)
        return child

    def reference(self, n: Compound, path: Path) -> str:
        name = self.name_of(n, path)
        if self.aux is not None and name not in self.aux.entries:
            return "??"
        return f"\\ref{{{name}}}"

    def raw(self, n: Compound, path: Path, math: bool) -> str:
        name = n.label[len(RAW_PREFIX) :]
        if name.startswith("cmd-"):
            name = name[4:]
        if name.startswith("env-"):
            env = name[4:]
            body = self.blocks(n.children, path)
            return f"\\begin{{{env}}}\n{body}\n\\end{{{env}}}"
        parts = [f"\\{name}{{}}"]
        for i, c in enumerate(n.children):
            inner = self.math(c, path + (i,)) if math else self.inline(c, path + (i,))
            parts.append(f"{{{inner}}}")
        return "".join(parts)

    # -- text mode --------------------------------------------------------

    def inline(self, n: Node, path: Path) -> str:
        if isinstance(n, str):
            return self.leaf(n, False, path)
        label = n.label
        kids = n.children
        if label == "concat":
            return "".join(self.inline(c, path + (i,)) for i, c in enumerate(kids))
        if label == "math":
            return f"${self.math(kids[0], path + (0,))}$"
        if label in ("section", "subsection"):
            return f"\\{label}{{{self.inline(kids[0], path + (0,))}}}"
        if label == "label":
            return f"\\label{{{self.name_of(n, path)}}}"
        if label == "reference":
            return self.reference(n, path)
        if label == "item":
            return "\\item "
        if label == "image":
            return f"\\includegraphics{{{self.name_of(n, path)}}}"
        if label == "caption":
            return f"\\caption{{{self.inline(kids[0], path + (0,))}}}"
        if label == "error":
            return "".join(
                c if isinstance(c, str) else self.inline(c, path + (i,))
                for i, c in enumerate(kids)
            )
        if label.startswith(RAW_PREFIX):
            return self.raw(n, path, math=False)
        if label in _MATH_LABELS:
            raise ExportError(f"label {label!r} cannot appear in text mode", path)
        raise ExportError(f"label {label!r} has no LaTeX mapping", path)

    # -- blocks -----------------------------------------------------------

    def block(self, n: Node, path: Path) -> str:
        if isinstance(n, Compound):
            if n.label == "equation":
                return (
                    f"\\begin{{equation}}{self.math(n.children[0], path + (0,))}\\end{{equation}}"
                )
            if n.label in THEOREM_ENVS or n.label == "proof":
                env = self.env_name(n.label)
                return (
                    f"\\begin{{{env}}}\n{self.blocks(n.children, path)}\n\\end{{{env}}}"
                )
            if n.label == "itemize":
                inner = n.children[0]
                if not (isinstance(inner, Compound) and inner.label == "document"):
                    raise ExportError("itemize must hold a document of lines", path)
                lines = [
                    self.inline(line, path + (0, i))
                    for i, line in enumerate(inner.children)
                ]
                return "\\begin{itemize}\n" + "\n".join(lines) + "\n\\end{itemize}"
            if n.label == "figure":
                return (
                    f"\\begin{{figure}}\n{self.blocks(n.children, path)}\n\\end{{figure}}"
                )
            if n.label.startswith(RAW_PREFIX) and n.label[len(RAW_PREFIX) :].startswith("env-"):
                return self.raw(n, path, math=False)
            if n.label in _MATH_LABELS:
                return self.math(n, path)  # bare formula fragment
        return self.inline(n, path)

    def blocks(self, nodes, path: Path) -> str:
        # an empty line re-imports from an explicit \\ of its own; a \\
        # also terminates the preceding non-empty block in that case
        parts: list[str] = []
        for i, b in enumerate(nodes):
            if b == "":
                parts.append("\\\\\n")
                continue
            parts.append(self.block(b, path + (i,)))
            if i + 1 < len(nodes):
                parts.append("\\\\\n" if nodes[i + 1] == "" else "\n\n")
        return "".join(parts)


def export_latex(
    d: Document | Node,
    style: MacroTable | None = None,
    options: ExportOptions = ExportOptions(),
) -> str:
    """Emit canonical LaTeX for a document (or a bare node fragment)."""
    if isinstance(d, Document):
        ex = _Exporter(style if style is not None else d.style, d.aux, options)
        return ex.blocks(d.root.children, ()) + "\n"
    ex = _Exporter(style, None, options)
    return ex.block(d, ())


def export_fragment(
    n: Node, style: MacroTable | None = None, options: ExportOptions = ExportOptions()
) -> str:
    """Emit a math-mode source fragment for a bare formula tree."""
    return _Exporter(style, None, options).math(n, ())
