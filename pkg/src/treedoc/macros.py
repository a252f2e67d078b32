"""Macro tables (doc-styles) and the expansion engine.

A MacroTable is the machine form of a doc-style: user macro definitions
plus environment aliases mapping local environment names to canonical
node labels (``thm`` -> ``theorem``).  Redefinitions are recorded, never
silently merged.  Expansion is depth-limited; blowing the limit leaves
the offending call unexpanded and reports a self-recursive macro.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from treedoc.diagnostics import Diagnostic, FaultKind, diag
from treedoc.tokenizer import (
    CHAR,
    CONTROL_WORD,
    GROUP_CLOSE,
    GROUP_OPEN,
    Token,
    tokenize,
)

DEFAULT_DEPTH_LIMIT = 64


@dataclass(frozen=True)
class MacroDef:
    name: str
    params: int
    body: tuple[Token, ...]
    origin: str = ""

    def __post_init__(self):
        if not 0 <= self.params <= 9:
            raise ValueError(f"macro {self.name!r}: parameter count must be in [0, 9]")

    @property
    def body_text(self) -> str:
        return "".join(t.text for t in self.body)


def macro_def(name: str, params: int, body: str, origin: str = "") -> MacroDef:
    return MacroDef(name, params, tuple(tokenize(body)), origin)


@dataclass
class MacroTable:
    macros: dict[str, MacroDef] = field(default_factory=dict)
    environments: dict[str, str] = field(default_factory=dict)  # alias -> canonical label
    redefinitions: list[MacroDef] = field(default_factory=list)

    def copy(self) -> "MacroTable":
        return MacroTable(dict(self.macros), dict(self.environments), list(self.redefinitions))

    def define(self, d: MacroDef, overwrite: bool = False) -> bool:
        """Returns False on a conflicting (kept) prior definition."""
        prior = self.macros.get(d.name)
        if prior is not None:
            self.redefinitions.append(d)
            if not overwrite and prior.body_text != d.body_text:
                return False
            if overwrite:
                self.macros[d.name] = d
            return True
        self.macros[d.name] = d
        return True

    def alias_environment(self, name: str, canonical: str) -> bool:
        prior = self.environments.get(name)
        if prior is not None and prior != canonical:
            return False
        self.environments[name] = canonical
        return True

    def to_json(self) -> str:
        return json.dumps(
            {
                "macros": {
                    name: {"params": d.params, "body": d.body_text}
                    for name, d in sorted(self.macros.items())
                },
                "environments": dict(sorted(self.environments.items())),
            },
            indent=2,
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str, origin: str = "<json>") -> "MacroTable":
        data = json.loads(text)
        table = cls()
        for name, spec in data.get("macros", {}).items():
            table.define(macro_def(name, int(spec.get("params", 0)), spec["body"], origin))
        for name, canonical in data.get("environments", {}).items():
            table.alias_environment(name, canonical)
        return table


@dataclass(frozen=True)
class ExpansionProblem:
    """A diagnostic that still needs a tree anchor (set by the importer)."""

    kind: FaultKind
    macro: str
    span: tuple[int, int]
    message: str
    recovery: str

    def to_diagnostic(self, anchor=()) -> Diagnostic:
        return diag(self.kind, anchor, self.span, self.message, self.recovery)


def _take_argument(tokens: list[Token], i: int):
    """One macro argument: a balanced group or the next non-space token."""
    n = len(tokens)
    while i < n and (tokens[i].is_space() or tokens[i].is_newline()):
        i += 1
    if i >= n or tokens[i].kind == GROUP_CLOSE:
        return None, i
    if tokens[i].kind == GROUP_OPEN:
        depth = 1
        j = i + 1
        start = j
        while j < n:
            if tokens[j].kind == GROUP_OPEN:
                depth += 1
            elif tokens[j].kind == GROUP_CLOSE:
                depth -= 1
                if depth == 0:
                    return tokens[start:j], j + 1
            j += 1
        return None, i  # unbalanced: let the parser report it
    return [tokens[i]], i + 1


def _substitute(body: tuple[Token, ...], args: list[list[Token]]) -> list[Token]:
    out: list[Token] = []
    i = 0
    n = len(body)
    while i < n:
        t = body[i]
        if t.kind == CHAR and t.text == "#" and i + 1 < n and body[i + 1].text.isdigit():
            idx = int(body[i + 1].text) - 1
            if 0 <= idx < len(args):
                out.extend(args[idx])
            i += 2
            continue
        out.append(t)
        i += 1
    return out


def expand_with_problems(
    tokens: list[Token], table: MacroTable, depth_limit: int = DEFAULT_DEPTH_LIMIT
) -> tuple[list[Token], list[ExpansionProblem]]:
    if depth_limit < 1:
        raise ValueError("depth_limit must be >= 1")
    problems: list[ExpansionProblem] = []

    def walk(toks: list[Token], depth: int) -> list[Token]:
        out: list[Token] = []
        i = 0
        n = len(toks)
        while i < n:
            t = toks[i]
            if t.kind != CONTROL_WORD or t.command not in table.macros:
                out.append(t)
                i += 1
                continue
            d = table.macros[t.command]
            args: list[list[Token]] = []
            j = i + 1
            short = False
            for _ in range(d.params):
                arg, j = _take_argument(toks, j)
                if arg is None:
                    short = True
                    break
                args.append(arg)
            if short:
                problems.append(
                    ExpansionProblem(
                        FaultKind.WRONG_COMMAND_USAGE,
                        t.command,
                        (t.offset, t.offset + len(t.text)),
                        f"\\{t.command} expects {d.params} argument(s); call site provides fewer",
                        "call skipped",
                    )
                )
                out.append(t)
                i += 1
                continue
            if depth + 1 > depth_limit:
                problems.append(
                    ExpansionProblem(
                        FaultKind.SELF_RECURSIVE_MACRO,
                        t.command,
                        (t.offset, t.offset + len(t.text)),
                        f"\\{t.command} exceeded the expansion depth limit ({depth_limit})",
                        "left unexpanded",
                    )
                )
                out.append(t)
                i = j
                continue
            out.extend(walk(_substitute(d.body, args), depth + 1))
            i = j
        return out

    return walk(list(tokens), 0), problems


def expand_macros(
    tokens: list[Token], table: MacroTable, depth_limit: int = DEFAULT_DEPTH_LIMIT
) -> tuple[list[Token], list[Diagnostic]]:
    """Expand every table-defined macro; problems become root-anchored
    diagnostics (the importer re-anchors them inside the tree)."""
    out, problems = expand_with_problems(tokens, table, depth_limit)
    return out, [p.to_diagnostic() for p in problems]
