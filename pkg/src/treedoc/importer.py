"""LaTeX import with localized error recovery.

Every input produces a Document plus a list of Diagnostics; nothing
aborts.  Faulty regions are wrapped in ``error`` compounds confined to
the nearest enclosing group or environment, so everything outside a
fault parses exactly as the clean source would.

Source-level equivalences collapse structurally here: ``x^2`` and
``x^{2}`` both become a sibling ``rsup``; ``\\frac`` and ``\\over`` both
build a ``frac``; ``\\left( .. \\right)`` and plain ``( .. )`` both
build ``around*``.  Returned trees are canonical (see
:mod:`treedoc.canonical`).
"""
from __future__ import annotations

from dataclasses import dataclass

from treedoc.canonical import assemble_inline
from treedoc.diagnostics import Diagnostic, FaultKind, diag
from treedoc.macros import (
    ExpansionProblem,
    MacroDef,
    MacroTable,
    expand_with_problems,
)
from treedoc.nodes import (
    RAW_PREFIX,
    Compound,
    Document,
    Node,
    iter_with_paths,
    label_arity,
)
from treedoc.symbols import (
    BIG_OPERATORS,
    CLOSE_DELIMS,
    CLOSE_OF,
    DELIM_COMMANDS,
    ENTITY_COMMANDS,
    NOBRACKET,
    OPEN_DELIMS,
    THEOREM_ENVS,
)
from treedoc.tokenizer import (
    ALIGNMENT,
    CHAR,
    COMMENT,
    CONTROL_SYMBOL,
    CONTROL_WORD,
    ENV_BEGIN,
    ENV_END,
    GROUP_CLOSE,
    GROUP_OPEN,
    MATH_SHIFT,
    SUBSCRIPT,
    SUPERSCRIPT,
    Token,
    tokenize,
)

_BLOCK_ENVS = {"itemize", "figure", "proof"} | set(THEOREM_ENVS)
_MATRIX_ENVS = {"matrix", "pmatrix", "bmatrix", "cases"}
_SKIP_COMMANDS = {
    "documentclass": 1,
    "usepackage": 1,
    "maketitle": 0,
    "tableofcontents": 0,
    "newpage": 0,
    "clearpage": 0,
    "noindent": 0,
    "centering": 0,
    "appendix": 0,
    "bibliography": 1,
    "bibliographystyle": 1,
}
_MATH_HINTS = {
    "frac",
    "sqrt",
    "over",
    "left",
    "right",
    "big",
    "mathrm",
    "mathbb",
} | set(BIG_OPERATORS)
_SECTIONING = ("section", "subsection")


@dataclass
class _Pending:
    kind: FaultKind
    span: tuple[int, int]
    message: str
    recovery: str
    node: Compound  # the error compound this fault produced


def _is_linebreak(t: Token) -> bool:
    return t.kind == CONTROL_SYMBOL and t.text == "\\\\"


MAX_NEST = 100  # recovery bound: deeper regions import opaquely


class _Parser:
    def __init__(self, tokens: list[Token], table: MacroTable):
        self.toks = tokens
        self.n = len(tokens)
        self.i = 0
        self.depth = 0
        self.table = table
        self.pending: list[_Pending] = []
        self.diags: list[Diagnostic] = []

    # -- token plumbing --------------------------------------------------

    def peek(self):
        return self.toks[self.i] if self.i < self.n else None

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def at_end(self) -> bool:
        return self.i >= self.n

    def offset(self) -> int:
        if self.i < self.n:
            return self.toks[self.i].offset
        if self.n:
            last = self.toks[-1]
            return last.offset + len(last.text.encode("utf-8"))
        return 0

    def skip_blanks(self):
        while not self.at_end():
            t = self.peek()
            if t.kind == COMMENT or (t.kind == CHAR and t.text in " \t\n\r"):
                self.next()
            else:
                break

    def fault(self, kind, span, message, recovery, content) -> Compound:
        children = tuple(content) if isinstance(content, list) else (content,)
        node = Compound("error", children)
        self.pending.append(_Pending(kind, span, message, recovery, node))
        return node

    def consume_opaque_region(self) -> tuple[str, tuple[int, int]]:
        """Swallow a balanced region verbatim, starting at its opener."""
        start = self.offset()
        level = 0
        parts: list[str] = []
        while not self.at_end():
            t = self.next()
            parts.append(t.text)
            if t.kind in (GROUP_OPEN, ENV_BEGIN):
                level += 1
            elif t.kind in (GROUP_CLOSE, ENV_END):
                level -= 1
                if level <= 0:
                    break
        return "".join(parts), (start, self.offset())

    def nesting_guard(self) -> Node | None:
        """At the nesting bound, import the whole region as opaque text."""
        if self.depth < MAX_NEST:
            return None
        text, span = self.consume_opaque_region()
        return self.fault(
            FaultKind.GENERIC_SYNTAX,
            span,
            f"nesting exceeds the supported depth ({MAX_NEST})",
            "region imported as opaque text",
            text,
        )

    # -- math mode --------------------------------------------------------

    def parse_math_items(self, stop) -> list[Node]:
        """Math content up to (not consuming) a stop token or any token
        that ends the scope ($ , } , & , \\\\, \\end, EOF)."""
        items: list[Node] = []
        buf: list[str] = []
        marks: list[tuple[str, int, bool]] = []  # (open char, items index, opened by \big)
        over_at: list[int] = []

        def flush():
            if buf:
                items.append("".join(buf))
                buf.clear()

        def close_scope() -> list[Node]:
            flush()
            for char, posn, _ in reversed(marks):
                items.insert(posn, char)
            if over_at:
                split = over_at[0] + sum(1 for m in marks if m[1] <= over_at[0])
                left = assemble_inline(items[:split])
                right = assemble_inline(items[split:])
                return [Compound("frac", (left, right))]
            return items

        def close_pair(char: str, big: bool) -> bool:
            if not marks:
                return False
            open_char, posn, was_big = marks[-1]
            if was_big != big or CLOSE_OF.get(open_char) != char:
                return False
            marks.pop()
            flush()
            body = assemble_inline(items[posn:])
            del items[posn:]
            items.append(Compound("around*", (open_char, body, char)))
            return True

        while not self.at_end():
            t = self.peek()
            if stop(t):
                return close_scope()
            kind = t.kind
            if kind == COMMENT:
                self.next()
                continue
            if kind == CHAR:
                self.next()
                c = t.text
                if c in " \t\n\r":
                    continue
                if c in OPEN_DELIMS and c != "{":
                    flush()
                    marks.append((c, len(items), False))
                    continue
                if c in CLOSE_DELIMS and c != "}" and close_pair(c, big=False):
                    continue
                buf.append(c)
                continue
            if kind == GROUP_OPEN:
                flush()
                items.append(self.parse_math_group())
                continue
            if kind in (GROUP_CLOSE, MATH_SHIFT, ALIGNMENT, ENV_END):
                return close_scope()
            if kind in (SUPERSCRIPT, SUBSCRIPT):
                self.next()
                flush()
                arg = self.parse_math_unit()
                if arg is None:
                    arg = self.fault(
                        FaultKind.WRONG_COMMAND_USAGE,
                        (t.offset, self.offset()),
                        f"script {t.text!r} is missing its argument",
                        "argument treated as empty",
                        t.text,
                    )
                items.append(Compound("rsup" if kind == SUPERSCRIPT else "rsub", (arg,)))
                continue
            if kind == ENV_BEGIN:
                flush()
                if t.env_name in _MATRIX_ENVS:
                    items.append(self.parse_matrix())
                else:
                    items.append(self.parse_environment())
                continue
            if kind == CONTROL_SYMBOL:
                sym = t.text[1]
                if sym == "\\":
                    return close_scope()
                self.next()
                if sym == "{":
                    flush()
                    marks.append(("{", len(items), False))
                elif sym == "}":
                    if not close_pair("}", big=False):
                        buf.append("}")
                elif sym in ",;:! ":
                    pass  # spacing commands
                else:
                    buf.append(sym)
                continue
            # control word
            self.next()
            cmd = t.command
            if cmd == "over":
                flush()
                over_at.append(len(items))
            elif cmd in ENTITY_COMMANDS:
                buf.append(f"<{ENTITY_COMMANDS[cmd]}>")
            elif cmd in BIG_OPERATORS:
                flush()
                items.append(Compound("big", (cmd,)))
            elif cmd in ("frac", "sqrt"):
                flush()
                items.append(self.parse_fixed_args(t, cmd, 2 if cmd == "frac" else 1))
            elif cmd == "mathrm":
                arg = self.parse_math_unit()
                if arg is None:
                    flush()
                    items.append(self._missing(t))
                elif arg == "d":
                    buf.append("<mathd>")
                elif isinstance(arg, str):
                    buf.append(arg)
                else:
                    flush()
                    items.append(arg)
            elif cmd == "mathbb":
                arg = self.parse_math_unit()
                if arg is None:
                    flush()
                    items.append(self._missing(t))
                elif isinstance(arg, str) and len(arg) == 1 and arg.isalpha():
                    buf.append(f"<bbb{arg}>")
                elif isinstance(arg, str):
                    buf.append(arg)
                else:
                    flush()
                    items.append(arg)
            elif cmd in DELIM_COMMANDS:
                # bare \langle .. \rangle pairs like plain parentheses
                ch = DELIM_COMMANDS[cmd]
                if ch in OPEN_DELIMS:
                    flush()
                    marks.append((ch, len(items), False))
                elif ch in CLOSE_DELIMS and close_pair(ch, big=False):
                    pass
                else:
                    buf.append(ch)
            elif cmd == "left":
                flush()
                items.append(self.parse_left_right(t))
            elif cmd == "right":
                d = self.read_delimiter()
                flush()
                items.append(
                    self.fault(
                        FaultKind.GENERIC_SYNTAX,
                        (t.offset, self.offset()),
                        "\\right without a matching \\left",
                        "kept the delimiter as text",
                        d if d != NOBRACKET else "",
                    )
                )
            elif cmd in ("big", "bigl", "bigr", "Big", "bigg", "Bigg"):
                d = self.read_delimiter()
                flush()
                if d in OPEN_DELIMS:
                    marks.append((d, len(items), True))
                elif not close_pair(d, big=True):
                    prev: Node = items.pop() if items else ""
                    items.append(Compound("around*", (NOBRACKET, prev, d)))
            elif cmd == "label":
                node = self.named_arg_node("label", t)
                flush()
                items.append(node)
            elif cmd in ("ref", "eqref"):
                node = self.named_arg_node("reference", t)
                flush()
                items.append(node)
            elif cmd == "cite":
                node = self.opaque_cite(t)
                if isinstance(node, str):
                    buf.append(node)
                else:
                    flush()
                    items.append(node)
            elif cmd in ("text", "mbox"):
                node = self.text_group_arg()
                flush()
                items.append(node)
            else:
                buf.append(t.text)  # unknown command: opaque source text
        return close_scope()

    def _missing(self, cmd_tok: Token) -> Compound:
        return self.fault(
            FaultKind.WRONG_COMMAND_USAGE,
            (cmd_tok.offset, self.offset()),
            f"{cmd_tok.text} is missing an argument",
            "call skipped",
            cmd_tok.text,
        )

    def parse_math_group(self) -> Node:
        deep = self.nesting_guard()
        if deep is not None:
            return deep
        open_tok = self.next()  # the {
        self.depth += 1
        items = self.parse_math_items(lambda t: t.kind == GROUP_CLOSE)
        self.depth -= 1
        t = self.peek()
        if t is not None and t.kind == GROUP_CLOSE:
            self.next()
            return assemble_inline(items)
        return self.fault(
            FaultKind.UNCLOSED_BRACKET,
            (open_tok.offset, self.offset()),
            "group opened here is never closed",
            "closed at the end of the enclosing scope",
            assemble_inline(items),
        )

    def parse_math_unit(self):
        """One command argument: a group or a single atom; None if the
        scope ends first."""
        self.skip_blanks()
        t = self.peek()
        if t is None or t.kind in (GROUP_CLOSE, MATH_SHIFT, ENV_END, ENV_BEGIN, ALIGNMENT):
            return None
        if _is_linebreak(t):
            return None
        if t.kind == GROUP_OPEN:
            return self.parse_math_group()
        if t.kind == CHAR:
            self.next()
            return t.text
        if t.kind == CONTROL_SYMBOL:
            self.next()
            return t.text[1]
        if t.kind == CONTROL_WORD:
            cmd = t.command
            if cmd in ENTITY_COMMANDS:
                self.next()
                return f"<{ENTITY_COMMANDS[cmd]}>"
            if cmd in BIG_OPERATORS:
                self.next()
                return Compound("big", (cmd,))
            if cmd in ("frac", "sqrt"):
                self.next()
                if self.depth >= MAX_NEST:
                    return t.text  # depth bound: keep the call opaque
                self.depth += 1
                node = self.parse_fixed_args(t, cmd, 2 if cmd == "frac" else 1)
                self.depth -= 1
                return node
            self.next()
            return t.text  # unknown command: opaque source text
        self.next()
        return t.text

    def parse_fixed_args(self, cmd_tok: Token, label: str, count: int) -> Node:
        args: list[Node] = []
        for _ in range(count):
            arg = self.parse_math_unit()
            if arg is None:
                content: list[Node] = [cmd_tok.text]
                content.extend(args)
                return self.fault(
                    FaultKind.WRONG_COMMAND_USAGE,
                    (cmd_tok.offset, self.offset()),
                    f"{cmd_tok.text} expects {count} argument(s)",
                    "call skipped",
                    content,
                )
            args.append(arg)
        return Compound(label, tuple(args))

    def read_delimiter(self) -> str:
        self.skip_blanks()
        t = self.peek()
        if t is None:
            return NOBRACKET
        if t.kind == CHAR:
            self.next()
            return NOBRACKET if t.text == "." else t.text
        if t.kind == CONTROL_SYMBOL and t.text[1] in "{}|":
            self.next()
            return t.text[1]
        if t.kind == CONTROL_WORD and t.command in DELIM_COMMANDS:
            self.next()
            return DELIM_COMMANDS[t.command]
        return NOBRACKET

    def parse_left_right(self, left_tok: Token) -> Node:
        d_open = self.read_delimiter()
        if self.depth >= MAX_NEST:
            return self.fault(
                FaultKind.GENERIC_SYNTAX,
                (left_tok.offset, self.offset()),
                f"nesting exceeds the supported depth ({MAX_NEST})",
                "delimiter kept as opaque text",
                left_tok.text + d_open,
            )
        self.depth += 1
        items = self.parse_math_items(
            lambda t: t.kind == CONTROL_WORD and t.command == "right"
        )
        self.depth -= 1
        body = assemble_inline(items)
        t = self.peek()
        if t is not None and t.kind == CONTROL_WORD and t.command == "right":
            self.next()
            return Compound("around*", (d_open, body, self.read_delimiter()))
        return self.fault(
            FaultKind.UNCLOSED_BRACKET,
            (left_tok.offset, self.offset()),
            "\\left has no matching \\right",
            "closed at the end of the enclosing scope",
            Compound("around*", (d_open, body, NOBRACKET)),
        )

    def parse_math_region(self, is_close, close_desc: str, hard_stop=None):
        """Collect math items, consuming stray scope enders until the
        region's own closer arrives.  Returns (items, closed)."""
        parts: list[Node] = []
        while True:
            items = self.parse_math_items(
                lambda t: is_close(t) or (hard_stop is not None and hard_stop(t))
            )
            parts.extend(items)
            t = self.peek()
            if t is None:
                return parts, False
            if is_close(t):
                return parts, True
            if hard_stop is not None and hard_stop(t):
                return parts, False
            if t.kind in (MATH_SHIFT, GROUP_CLOSE, ALIGNMENT) or _is_linebreak(t):
                self.next()
                parts.append(
                    self.fault(
                        FaultKind.GENERIC_SYNTAX,
                        (t.offset, t.offset + len(t.text)),
                        f"unexpected {t.text!r} before {close_desc}",
                        "ignored",
                        t.text,
                    )
                )
                continue
            return parts, False

    def parse_matrix(self) -> Node:
        deep = self.nesting_guard()
        if deep is not None:
            return deep
        begin = self.next()
        name = begin.env_name
        rows: list[Node] = []
        cells: list[Node] = []

        def stop(t: Token) -> bool:
            return t.kind in (ALIGNMENT, ENV_END) or _is_linebreak(t)

        closed = False
        self.depth += 1
        while True:
            items = self.parse_math_items(stop)
            t = self.peek()
            if t is not None and t.kind == ALIGNMENT:
                self.next()
                cells.append(assemble_inline(items))
                continue
            if t is not None and _is_linebreak(t):
                self.next()
                cells.append(assemble_inline(items))
                rows.append(Compound("row", tuple(cells)))
                cells = []
                continue
            if t is not None and t.kind == ENV_END and t.env_name == name:
                self.next()
                closed = True
            node = assemble_inline(items)
            if cells or node != "":
                cells.append(node)
                rows.append(Compound("row", tuple(cells)))
            break

        self.depth -= 1
        body = Compound("cases" if name == "cases" else "matrix", tuple(rows))
        wrapped: Node = body
        if name == "pmatrix":
            wrapped = Compound("around*", ("(", body, ")"))
        elif name == "bmatrix":
            wrapped = Compound("around*", ("[", body, "]"))
        if closed:
            return wrapped
        return self.fault(
            FaultKind.UNCLOSED_ENVIRONMENT,
            (begin.offset, self.offset()),
            f"environment {name!r} is never closed",
            "closed at the end of the enclosing scope",
            wrapped,
        )

    # -- text mode ----------------------------------------------------------

    def parse_inline_math(self) -> Node:
        dollar = self.next()
        display = False
        t = self.peek()
        if t is not None and t.kind == MATH_SHIFT:
            self.next()
            display = True
        items, closed = self.parse_math_region(
            lambda t: t.kind == MATH_SHIFT,
            "the closing $",
            hard_stop=lambda t: t.kind == ENV_END,  # a stray \end ends the region
        )
        node = Compound("math", (assemble_inline(items),))
        if closed:
            self.next()
            if display:
                t2 = self.peek()
                if t2 is not None and t2.kind == MATH_SHIFT:
                    self.next()
            return node
        return self.fault(
            FaultKind.GENERIC_SYNTAX,
            (dollar.offset, self.offset()),
            "math opened with $ is never closed",
            "closed at the end of the enclosing scope",
            node,
        )

    def parse_display_math(self) -> Node:
        start = self.offset()
        items, closed = self.parse_math_region(
            lambda t: t.kind == CONTROL_SYMBOL and t.text == "\\]",
            "the closing \\]",
            hard_stop=lambda t: t.kind == ENV_END,  # a stray \end ends the region
        )
        node = Compound("math", (assemble_inline(items),))
        if closed:
            self.next()
            return node
        return self.fault(
            FaultKind.UNCLOSED_BRACKET,
            (start, self.offset()),
            "\\[ display math is never closed",
            "closed at the end of the enclosing scope",
            node,
        )

    def named_arg_node(self, label: str, cmd_tok: Token) -> Node:
        text, ok = self.read_brace_text()
        if not ok:
            return self.fault(
                FaultKind.WRONG_COMMAND_USAGE,
                (cmd_tok.offset, self.offset()),
                f"{cmd_tok.text} expects a braced name",
                "call skipped",
                cmd_tok.text + text,
            )
        return Compound(label, (text,))

    def read_brace_text(self) -> tuple[str, bool]:
        self.skip_blanks()
        t = self.peek()
        if t is None or t.kind != GROUP_OPEN:
            return "", False
        self.next()
        out: list[str] = []
        while not self.at_end():
            t = self.peek()
            if t.kind == GROUP_CLOSE:
                self.next()
                return "".join(out), True
            if t.kind in (ENV_BEGIN, ENV_END, MATH_SHIFT):
                break
            self.next()
            if t.kind != COMMENT:
                out.append(t.text)
        return "".join(out), False

    def opaque_cite(self, cmd_tok: Token):
        text, ok = self.read_brace_text()
        if not ok:
            return self.fault(
                FaultKind.WRONG_COMMAND_USAGE,
                (cmd_tok.offset, self.offset()),
                "\\cite expects a braced key",
                "call skipped",
                cmd_tok.text,
            )
        return f"\\cite{{{text}}}"

    def text_group_arg(self) -> Node:
        self.skip_blanks()
        t = self.peek()
        if t is None or t.kind != GROUP_OPEN:
            return ""
        deep = self.nesting_guard()
        if deep is not None:
            return deep
        open_tok = self.next()
        self.depth += 1
        items = self.parse_inline(lambda t: t.kind == GROUP_CLOSE, block_breaks=False)
        self.depth -= 1
        node = _strip_edges(assemble_inline(items))
        t = self.peek()
        if t is not None and t.kind == GROUP_CLOSE:
            self.next()
            return node
        return self.fault(
            FaultKind.UNCLOSED_BRACKET,
            (open_tok.offset, self.offset()),
            "group opened here is never closed",
            "closed at the end of the enclosing scope",
            node,
        )

    def parse_inline(self, stop, block_breaks: bool = True) -> list[Node]:
        """Inline text content; stops (without consuming) at stop tokens,
        paragraph breaks, line breaks, environment boundaries and \\item."""
        items: list[Node] = []
        buf: list[str] = []

        def flush():
            if buf:
                text = "".join(buf)
                if text.strip():
                    items.append(text)
                buf.clear()

        def space():
            if not buf or buf[-1] != " ":
                buf.append(" ")

        while not self.at_end():
            t = self.peek()
            if stop(t):
                break
            kind = t.kind
            if kind == COMMENT:
                self.next()
                continue
            if kind == CHAR:
                if t.text == "\n":
                    if block_breaks and self._blank_line_ahead():
                        break
                    self.next()
                    space()
                    continue
                self.next()
                if t.text in " \t":
                    space()
                else:
                    buf.append(t.text)
                continue
            if kind in (ENV_BEGIN, ENV_END):
                break
            if kind == MATH_SHIFT:
                flush()
                items.append(self.parse_inline_math())
                continue
            if kind == GROUP_OPEN:
                deep = self.nesting_guard()
                if deep is not None:
                    flush()
                    items.append(deep)
                    continue
                open_tok = self.next()
                self.depth += 1
                inner = self.parse_inline(lambda t: t.kind == GROUP_CLOSE, block_breaks=False)
                self.depth -= 1
                flush()
                t2 = self.peek()
                if t2 is not None and t2.kind == GROUP_CLOSE:
                    self.next()
                    items.extend(inner)  # grouping is transparent in text
                else:
                    items.append(
                        self.fault(
                            FaultKind.UNCLOSED_BRACKET,
                            (open_tok.offset, self.offset()),
                            "group opened here is never closed",
                            "closed at the end of the enclosing scope",
                            assemble_inline(inner),
                        )
                    )
                continue
            if kind == GROUP_CLOSE:
                self.next()
                flush()
                items.append(
                    self.fault(
                        FaultKind.GENERIC_SYNTAX,
                        (t.offset, t.offset + 1),
                        "stray '}' with no open group",
                        "ignored",
                        "}",
                    )
                )
                continue
            if kind == CONTROL_SYMBOL:
                sym = t.text[1]
                if sym == "\\":
                    break  # line break ends the block
                self.next()
                if sym == "[":
                    flush()
                    items.append(self.parse_display_math())
                elif sym in "{}$%&#_^~":
                    buf.append(sym)
                elif sym in " ,;:!":
                    space()
                else:
                    buf.append(sym)
                continue
            if kind in (SUPERSCRIPT, SUBSCRIPT, ALIGNMENT):
                self.next()
                buf.append(t.text)
                continue
            cmd = t.command
            if cmd == "item":
                flush()
                if items:
                    break  # \item starts a new block
                self.next()
                items.append(Compound("item", ()))
                while not self.at_end():
                    nxt = self.peek()
                    if nxt.kind == CHAR and nxt.text in " \t":
                        self.next()
                    else:
                        break
                continue
            if cmd.rstrip("*") in _SECTIONING:
                self.next()
                flush()
                items.append(Compound(cmd.rstrip("*"), (self.text_group_arg(),)))
                continue
            if cmd == "label":
                self.next()
                node = self.named_arg_node("label", t)
                flush()
                items.append(node)
                continue
            if cmd in ("ref", "eqref"):
                self.next()
                node = self.named_arg_node("reference", t)
                flush()
                items.append(node)
                continue
            if cmd == "cite":
                self.next()
                node = self.opaque_cite(t)
                if isinstance(node, str):
                    buf.append(node)
                else:
                    flush()
                    items.append(node)
                continue
            if cmd == "includegraphics":
                self.next()
                self._skip_optional()
                text, ok = self.read_brace_text()
                flush()
                if ok:
                    items.append(Compound("image", (text,)))
                else:
                    items.append(
                        self.fault(
                            FaultKind.WRONG_COMMAND_USAGE,
                            (t.offset, self.offset()),
                            "\\includegraphics expects a braced path",
                            "call skipped",
                            t.text,
                        )
                    )
                continue
            if cmd == "caption":
                self.next()
                node = Compound("caption", (self.text_group_arg(),))
                flush()
                items.append(node)
                continue
            if cmd in ENTITY_COMMANDS:
                self.next()
                buf.append(f"<{ENTITY_COMMANDS[cmd]}>")
                continue
            if cmd in _SKIP_COMMANDS:
                self.next()
                self._skip_optional()
                for _ in range(_SKIP_COMMANDS[cmd]):
                    self.read_brace_text()
                continue
            self.next()
            buf.append(t.text)  # unknown command: opaque source text
        flush()
        return items

    def _blank_line_ahead(self) -> bool:
        j = self.i + 1
        while j < self.n:
            t = self.toks[j]
            if t.kind == CHAR and t.text in " \t":
                j += 1
                continue
            return t.kind == CHAR and t.text == "\n"
        return False

    def _skip_optional(self):
        t = self.peek()
        if t is not None and t.kind == CHAR and t.text == "[":
            while not self.at_end():
                t = self.next()
                if t.kind == CHAR and t.text == "]":
                    break

    def parse_blocks(self, stop) -> list[Node]:
        blocks: list[Node] = []
        last_boundary = "linebreak"  # a leading \\ yields an explicit empty line

        while not self.at_end():
            t = self.peek()
            if stop(t):
                break
            if t.kind == COMMENT or (t.kind == CHAR and t.text in " \t\n\r"):
                self.next()
                continue
            if t.kind == ENV_END:
                if t.env_name == "document":
                    self.next()
                    continue
                self.next()
                blocks.append(
                    self.fault(
                        FaultKind.GENERIC_SYNTAX,
                        (t.offset, t.offset + len(t.text)),
                        f"stray \\end{{{t.env_name}}}",
                        "ignored",
                        t.text,
                    )
                )
                last_boundary = "par"
                continue
            if t.kind == ENV_BEGIN:
                if t.env_name == "document":
                    self.next()
                    continue
                blocks.append(self.parse_environment())
                last_boundary = "env"
                continue
            items = self.parse_inline(stop)
            node = _strip_edges(assemble_inline(items))
            t = self.peek()
            if t is not None and not stop(t) and _is_linebreak(t):
                self.next()
                if node != "":
                    blocks.append(node)
                elif last_boundary == "linebreak":
                    blocks.append("")
                last_boundary = "linebreak"
                continue
            if node != "":
                blocks.append(node)
            last_boundary = "par"
        return blocks

    def parse_environment(self) -> Node:
        begin = self.peek()
        name = begin.env_name
        if name in _MATRIX_ENVS:
            return self.parse_matrix()
        deep = self.nesting_guard()
        if deep is not None:
            return deep
        self.next()
        if name in ("equation", "equation*"):
            return self._finish_math_env(begin, "equation")
        canonical = None
        if name in _BLOCK_ENVS:
            canonical = name
        else:
            alias = self.table.environments.get(name)
            if alias is not None:
                if alias == "equation":
                    return self._finish_math_env(begin, "equation")
                if label_is_block(alias):
                    canonical = alias
        label = canonical if canonical is not None else RAW_PREFIX + "env-" + name

        def stop(t: Token) -> bool:
            if t.kind == ENV_END:
                return True
            return t.kind == CONTROL_WORD and t.command.rstrip("*") in _SECTIONING

        self.depth += 1
        blocks = self.parse_blocks(stop)
        self.depth -= 1
        t = self.peek()
        if t is not None and t.kind == ENV_END and t.env_name == name:
            self.next()
            return self._build_env(label, blocks)
        return self.fault(
            FaultKind.UNCLOSED_ENVIRONMENT,
            (begin.offset, self.offset()),
            f"environment {name!r} is never closed",
            "closed at the next sectional boundary",
            self._build_env(label, blocks),
        )

    def _build_env(self, label: str, blocks: list[Node]) -> Compound:
        if label == "itemize":
            return Compound("itemize", (Compound("document", tuple(blocks)),))
        if label.startswith(RAW_PREFIX) and not blocks:
            return Compound(label, ("",))
        return Compound(label, tuple(blocks))

    def _finish_math_env(self, begin: Token, label: str) -> Node:
        name = begin.env_name

        def hard(t: Token) -> bool:
            if t.kind == ENV_END:
                return True
            return t.kind == CONTROL_WORD and t.command.rstrip("*") in _SECTIONING

        self.depth += 1
        items, _ = self.parse_math_region(
            lambda t: t.kind == ENV_END and t.env_name == name,
            f"\\end{{{name}}}",
            hard_stop=hard,
        )
        self.depth -= 1
        node = Compound(label, (assemble_inline(items),))
        t = self.peek()
        if t is not None and t.kind == ENV_END and t.env_name == name:
            self.next()
            return node
        return self.fault(
            FaultKind.UNCLOSED_ENVIRONMENT,
            (begin.offset, self.offset()),
            f"environment {name!r} is never closed",
            "closed at the next sectional boundary",
            node,
        )


def label_is_block(label: str) -> bool:
    """True when an aliased environment may hold a block list."""
    try:
        return label_arity(label) is None
    except Exception:
        return False


def _strip_edges(node: Node) -> Node:
    if isinstance(node, str):
        return node.strip()
    if node.label != "concat":
        return node
    kids = list(node.children)
    if kids and isinstance(kids[0], str):
        kids[0] = kids[0].lstrip()
    if kids and isinstance(kids[-1], str):
        kids[-1] = kids[-1].rstrip()
    return assemble_inline(kids)


# -- preamble definitions -------------------------------------------------


def _take_group(tokens: list[Token], i: int):
    if i >= len(tokens) or tokens[i].kind != GROUP_OPEN:
        return None, i
    depth = 0
    j = i
    while j < len(tokens):
        if tokens[j].kind == GROUP_OPEN:
            depth += 1
        elif tokens[j].kind == GROUP_CLOSE:
            depth -= 1
            if depth == 0:
                return tokens[i + 1 : j], j + 1
        j += 1
    return None, i


def _skip_ws_tokens(tokens: list[Token], i: int) -> int:
    while i < len(tokens) and (
        tokens[i].kind == COMMENT
        or (tokens[i].kind == CHAR and tokens[i].text in " \t\n\r")
    ):
        i += 1
    return i


def _group_text(group: list[Token]) -> str:
    return "".join(t.text for t in group)


def collect_definitions(
    tokens: list[Token], base: MacroTable
) -> tuple[list[Token], MacroTable, list[Diagnostic], str]:
    """Strip \\newcommand / \\renewcommand / \\newtheorem / \\title out of
    the stream, merging the definitions into a copy of ``base``."""
    table = base.copy()
    out: list[Token] = []
    diags: list[Diagnostic] = []
    title = ""
    i = 0
    n = len(tokens)
    while i < n:
        t = tokens[i]
        if t.kind != CONTROL_WORD or t.command not in (
            "newcommand",
            "renewcommand",
            "newtheorem",
            "title",
        ):
            out.append(t)
            i += 1
            continue
        cmd = t.command
        span = (t.offset, t.offset + len(t.text))
        j = _skip_ws_tokens(tokens, i + 1)
        if cmd == "title":
            group, j2 = _take_group(tokens, j)
            if group is None:
                out.append(t)
                i += 1
                continue
            title = _group_text(group).strip()
            i = j2
            continue
        if cmd == "newtheorem":
            g1, j2 = _take_group(tokens, j)
            g2, j3 = (None, j2)
            if g1 is not None:
                g2, j3 = _take_group(tokens, _skip_ws_tokens(tokens, j2))
            if g1 is None or g2 is None:
                out.append(t)
                i += 1
                continue
            env = _group_text(g1).strip()
            title_text = _group_text(g2).strip().lower()
            canonical = title_text if title_text in THEOREM_ENVS else "theorem"
            if not table.alias_environment(env, canonical):
                diags.append(
                    diag(
                        FaultKind.CONFLICTING_DEFINITION,
                        (),
                        span,
                        f"environment {env!r} is already aliased differently",
                        "kept the first alias",
                    )
                )
            i = j3
            continue
        # \newcommand{\name}[k]{body} or bare \newcommand\name...
        name = None
        if j < n and tokens[j].kind == GROUP_OPEN:
            group, j2 = _take_group(tokens, j)
            if group is not None and len(group) == 1 and group[0].kind == CONTROL_WORD:
                name = group[0].command
                j = j2
        elif j < n and tokens[j].kind == CONTROL_WORD:
            name = tokens[j].command
            j += 1
        if name is None:
            out.append(t)
            i += 1
            continue
        j = _skip_ws_tokens(tokens, j)
        params = 0
        if (
            j + 2 < n
            and tokens[j].kind == CHAR
            and tokens[j].text == "["
            and tokens[j + 1].text.isdigit()
            and tokens[j + 2].text == "]"
        ):
            params = int(tokens[j + 1].text)
            j += 3
        j = _skip_ws_tokens(tokens, j)
        body, j2 = _take_group(tokens, j)
        if body is None:
            diags.append(
                diag(
                    FaultKind.WRONG_COMMAND_USAGE,
                    (),
                    span,
                    f"\\{cmd} for \\{name} has no body",
                    "definition skipped",
                )
            )
            i = j
            continue
        i = j2
        d = MacroDef(name, params, tuple(body), origin=f"offset {t.offset}")
        if not table.define(d, overwrite=(cmd == "renewcommand")):
            diags.append(
                diag(
                    FaultKind.CONFLICTING_DEFINITION,
                    (),
                    span,
                    f"\\{name} is already defined with a different body",
                    "kept the first definition",
                )
            )
    return out, table, diags, title


# -- entry points -----------------------------------------------------------


def _anchor_pending(root: Compound, pending: list[_Pending]) -> list[Diagnostic]:
    id_to_path = {}
    for path, node in iter_with_paths(root):
        if isinstance(node, Compound):
            id_to_path[id(node)] = path
    out = []
    for p in pending:
        path = id_to_path.get(id(p.node), ())
        anchor = path[:-1] if path else ()
        out.append(diag(p.kind, anchor, p.span, p.message, p.recovery))
    return out


def _anchor_problems(root: Compound, problems: list[ExpansionProblem]) -> list[Diagnostic]:
    """Expansion problems anchor at the parent of the leaf that kept the
    macro's source text (k-th problem of a macro matches its k-th relic)."""
    import re as _re

    want: dict[tuple[str, int], int] = {}
    seen: dict[str, int] = {}
    patterns: dict[str, object] = {}
    for pos, p in enumerate(problems):
        idx = seen.get(p.macro, 0)
        seen[p.macro] = idx + 1
        want[(p.macro, idx)] = pos
        patterns.setdefault(p.macro, _re.compile(r"\\" + _re.escape(p.macro) + r"(?![a-zA-Z])"))
    anchors: dict[int, tuple] = {}
    counts: dict[str, int] = {}
    if patterns:
        for path, node in iter_with_paths(root):
            if not isinstance(node, str):
                continue
            for macro, pat in patterns.items():
                for _ in pat.finditer(node):
                    idx = counts.get(macro, 0)
                    counts[macro] = idx + 1
                    pos = want.get((macro, idx))
                    if pos is not None:
                        anchors[pos] = path[:-1] if path else ()
    return [p.to_diagnostic(anchors.get(pos, ())) for pos, p in enumerate(problems)]


def import_latex(
    src: str, table: MacroTable | None = None
) -> tuple[Document, list[Diagnostic]]:
    """Import a LaTeX document; every input yields a Document."""
    base = table if table is not None else MacroTable()
    tokens = tokenize(src)
    tokens, merged, def_diags, title = collect_definitions(tokens, base)
    tokens, problems = expand_with_problems(tokens, merged)
    parser = _Parser(tokens, merged)
    blocks = parser.parse_blocks(lambda t: False)
    root = Compound("document", tuple(blocks))
    diags = (
        def_diags
        + _anchor_problems(root, problems)
        + _anchor_pending(root, parser.pending)
        + parser.diags
    )
    diags.sort(key=lambda d: (d.span[0], d.code.value))
    return Document(root=root, title=title, style=merged), diags


def _import_math_items(src: str, table: MacroTable | None):
    base = table if table is not None else MacroTable()
    tokens = tokenize(src)
    tokens, merged, def_diags, _ = collect_definitions(tokens, base)
    tokens, problems = expand_with_problems(tokens, merged)
    parser = _Parser(tokens, merged)
    items, _ = parser.parse_math_region(lambda t: False, "end of input")
    node = assemble_inline(items)
    wrapper = Compound("document", (Compound("math", (node,)),))
    diags = (
        def_diags
        + _anchor_problems(wrapper, problems)
        + _anchor_pending(wrapper, parser.pending)
        + parser.diags
    )
    diags.sort(key=lambda d: (d.span[0], d.code.value))
    return node, diags


def import_math(src: str, table: MacroTable | None = None) -> tuple[Node, list[Diagnostic]]:
    """Import bare math-mode source as a ``math`` tree (Listing-style)."""
    node, diags = _import_math_items(src, table)
    return Compound("math", (node,)), diags


def import_math_fragment(
    src: str, table: MacroTable | None = None
) -> tuple[Node, list[Diagnostic]]:
    """Import math-mode source as a bare formula node (no math wrapper)."""
    return _import_math_items(src, table)


def source_kind(src: str) -> str:
    """Classify input as "document" or "math" (fragment) for the CLI."""
    tokens = tokenize(src)
    for t in tokens:
        if t.kind in (ENV_BEGIN, ENV_END, MATH_SHIFT):
            return "document"
        if t.kind == CONTROL_WORD and t.command.rstrip("*") in (
            "section",
            "subsection",
            "item",
            "documentclass",
            "title",
            "newcommand",
        ):
            return "document"
    for t in tokens:
        if t.kind in (SUPERSCRIPT, SUBSCRIPT):
            return "math"
        if t.kind == CONTROL_WORD and (
            t.command in _MATH_HINTS or t.command in ENTITY_COMMANDS
        ):
            return "math"
    return "document"
