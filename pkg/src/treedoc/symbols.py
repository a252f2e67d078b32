"""Command <-> entity and delimiter tables shared by import and export."""
from __future__ import annotations

_GREEK = (
    "alpha beta gamma delta epsilon zeta eta theta iota kappa lambda mu nu xi "
    "pi rho sigma tau upsilon phi chi psi omega "
    "Gamma Delta Theta Lambda Xi Pi Sigma Upsilon Phi Psi Omega"
).split()

#: control word -> entity name (leaf text becomes ``<entity>``)
ENTITY_COMMANDS: dict[str, str] = {name: name for name in _GREEK}
ENTITY_COMMANDS.update(
    {
        "to": "rightarrow",
        "rightarrow": "rightarrow",
        "infty": "infty",
        "cdot": "cdot",
        "cdots": "cdots",
        "ldots": "ldots",
        "times": "times",
        "pm": "pm",
        "leq": "leq",
        "geq": "geq",
        "neq": "neq",
        "forall": "forall",
        "exists": "exists",
        "partial": "partial",
        "in": "in",
        "subset": "subset",
        "cup": "cup",
        "cap": "cap",
    }
)

#: entity name -> canonical control word (inverse, one winner per entity)
ENTITY_EXPORT: dict[str, str] = {}
for _cmd, _ent in ENTITY_COMMANDS.items():
    ENTITY_EXPORT.setdefault(_ent, _cmd)
ENTITY_EXPORT["rightarrow"] = "to"

BIG_OPERATORS = ("int", "sum", "prod", "lim", "oint", "max", "min")

#: named delimiter commands -> display character
DELIM_COMMANDS = {
    "langle": "⟨",
    "rangle": "⟩",
    "lbrace": "{",
    "rbrace": "}",
    "vert": "|",
    "lfloor": "⌊",
    "rfloor": "⌋",
    "lceil": "⌈",
    "rceil": "⌉",
}

OPEN_DELIMS = {"(", "[", "{", "⟨", "⌊", "⌈"}
CLOSE_OF = {"(": ")", "[": "]", "{": "}", "⟨": "⟩", "⌊": "⌋", "⌈": "⌉"}
CLOSE_DELIMS = set(CLOSE_OF.values())

NOBRACKET = "<nobracket>"

#: display character -> LaTeX source for export inside \left / \right
DELIM_EXPORT = {
    "(": "(",
    ")": ")",
    "[": "[",
    "]": "]",
    "|": "|",
    "{": "\\{",
    "}": "\\}",
    "⟨": "\\langle",
    "⟩": "\\rangle",
    "⌊": "\\lfloor",
    "⌋": "\\rfloor",
    "⌈": "\\lceil",
    "⌉": "\\rceil",
    NOBRACKET: ".",
}

#: environment names with built-in canonical labels
THEOREM_ENVS = ("theorem", "lemma", "proposition", "corollary", "definition", "remark", "example")
