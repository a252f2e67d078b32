"""Localized fault reports.

Every recoverable problem anywhere in the pipeline becomes a Diagnostic
anchored at the nearest enclosing compound of the fault site; nothing
aborts.  The first six kinds mirror the observed illness taxonomy; any
other parse problem is reported as ``generic-syntax``.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass

from treedoc.nodes import Path


class FaultKind(str, enum.Enum):
    UNCLOSED_BRACKET = "unclosed-bracket"
    UNCLOSED_ENVIRONMENT = "unclosed-environment"
    WRONG_COMMAND_USAGE = "wrong-command-usage"
    UNDEFINED_CROSS_REFERENCE = "undefined-cross-reference"
    CONFLICTING_DEFINITION = "conflicting-definition"
    SELF_RECURSIVE_MACRO = "self-recursive-macro"
    GENERIC_SYNTAX = "generic-syntax"


@dataclass(frozen=True)
class Diagnostic:
    code: FaultKind
    anchor: Path
    span: tuple[int, int]  # byte range in the source, (0, 0) when not source-derived
    message: str
    recovery: str

    def to_json(self) -> str:
        return json.dumps(
            {
                "code": self.code.value,
                "anchor": list(self.anchor),
                "span": list(self.span),
                "message": self.message,
                "recovery": self.recovery,
            },
            sort_keys=True,
        )


def diag(
    code: FaultKind,
    anchor: Path = (),
    span: tuple[int, int] = (0, 0),
    message: str = "",
    recovery: str = "",
) -> Diagnostic:
    return Diagnostic(code, tuple(anchor), span, message, recovery)
