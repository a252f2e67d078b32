"""Seeded corpus generation.

Everything here is a pure function of its parameters.  The PRNG is
splitmix64 (Steele et al.'s finalizer), fixed and documented so corpora
are bit-reproducible across platforms and implementations: state steps
by the golden-gamma constant 0x9E3779B97F4A7C15 and each output is the
64-bit mix ``z ^= z>>30, *0xBF58476D1CE4E5B9; z ^= z>>27,
*0x94D049BB133111EB; z ^= z>>31``.

Ten formula categories mirror the corpus the fine-tuning experiment was
built on: fraction, radical, scripts, matrix, piecewise,
integral-summation, limit, quantifier, composite-function and
nested-parentheses.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

from treedoc.canonical import assemble_inline, canonicalize
from treedoc.diagnostics import FaultKind
from treedoc.exporter import ExportOptions, export_fragment
from treedoc.importer import import_latex
from treedoc.nodes import Compound, Document, Node, iter_nodes
from treedoc.resolver import LayoutParams, resolve_full
from treedoc.sexp import write_sexp
from treedoc.tmu import write_node
from treedoc.tokenizer import tokenize

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


class SplitMix64:
    """splitmix64; deterministic across platforms."""

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return (z ^ (z >> 31)) & _MASK

    def below(self, n: int) -> int:
        return self.next_u64() % n

    def choice(self, seq):
        return seq[self.below(len(seq))]

    def chance(self, num: int, den: int) -> bool:
        return self.below(den) < num


def derive_seed(seed: int, *salts: int) -> int:
    mixed = seed & _MASK
    for s in salts:
        mixed = (mixed * 0x9E3779B97F4A7C15 + s + 1) & _MASK
    return mixed


@dataclass(frozen=True)
class GenParams:
    seed: int
    max_depth: int = 6
    count: int = 1000


@dataclass(frozen=True)
class FaultSpec:
    kind: FaultKind
    site: tuple[int, int]
    description: str


class InapplicableFaultError(Exception):
    pass


CATEGORIES = (
    "fraction",
    "radical",
    "scripts",
    "matrix",
    "piecewise",
    "integral-summation",
    "limit",
    "quantifier",
    "composite-function",
    "nested-parentheses",
)

_LETTERS = "abcfgknmxyz"
_DIGITS = "0123456789"
_GREEK = ("<alpha>", "<beta>", "<gamma>", "<lambda>", "<mu>", "<pi>", "<sigma>", "<phi>", "<omega>")
_OPS = "+-="


def _atom(rng: SplitMix64) -> str:
    roll = rng.below(10)
    if roll < 5:
        return rng.choice(_LETTERS)
    if roll < 8:
        return rng.choice(_DIGITS)
    return rng.choice(_GREEK)


def _run(rng: SplitMix64) -> str:
    parts = [_atom(rng)]
    while rng.chance(1, 3) and len(parts) < 3:
        parts.append(rng.choice(_OPS))
        parts.append(_atom(rng))
    return "".join(parts)


def _expr(rng: SplitMix64, depth: int) -> Node:
    if depth <= 1:
        return _run(rng)
    roll = rng.below(10)
    if roll < 3:
        return _run(rng)
    if roll < 5:
        return Compound("frac", (_expr(rng, depth - 1), _expr(rng, depth - 1)))
    if roll < 6:
        return Compound("sqrt", (_expr(rng, depth - 1),))
    if roll < 8:
        return _scripted(rng, depth - 1)
    return Compound("around*", ("(", _expr(rng, depth - 1), ")"))


def _scripted(rng: SplitMix64, depth: int) -> Node:
    base: list[Node] = [rng.choice(_LETTERS)]
    if rng.chance(1, 2):
        base.append(Compound("rsub", (_atom(rng),)))
    if rng.chance(1, 2) or len(base) == 1:
        base.append(Compound("rsup", (_expr(rng, min(depth, 2)),)))
    return Compound("concat", tuple(base))


def _rows(rng: SplitMix64, depth: int, nrows: int, ncols: int) -> tuple[Node, ...]:
    return tuple(
        Compound("row", tuple(_expr(rng, min(depth, 2)) for _ in range(ncols)))
        for _ in range(nrows)
    )


def gen_formula(params: GenParams, category: str) -> Node:
    """Deterministic canonical formula of the requested category."""
    if category not in CATEGORIES:
        raise ValueError(f"unknown category {category!r}")
    if params.max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    rng = SplitMix64(derive_seed(params.seed, CATEGORIES.index(category)))
    d = max(params.max_depth - 1, 1)
    if category == "fraction":
        node: Node = Compound("frac", (_expr(rng, d - 1), _expr(rng, d - 1)))
    elif category == "radical":
        node = Compound("sqrt", (_expr(rng, d - 1),))
    elif category == "scripts":
        node = _scripted(rng, d - 1)
    elif category == "matrix":
        shape = rng.choice(((2, 2), (2, 3), (3, 2)))
        left = rng.choice("([")
        right = ")" if left == "(" else "]"
        node = Compound("around*", (left, Compound("matrix", _rows(rng, d - 2, *shape)), right))
    elif category == "piecewise":
        rows = tuple(
            Compound("row", (_expr(rng, min(d - 2, 2)), f"{rng.choice(_LETTERS)}{rng.choice('<>=')}{rng.choice(_DIGITS)}"))
            for _ in range(2 + rng.below(2))
        )
        node = Compound("cases", rows)
    elif category == "integral-summation":
        op = rng.choice(("int", "sum"))
        node = Compound(
            "concat",
            (
                Compound("big", (op,)),
                Compound("rsub", (_atom(rng),)),
                Compound("rsup", (_atom(rng),)),
                _expr(rng, d - 1),
            ),
        )
    elif category == "limit":
        node = Compound(
            "concat",
            (
                Compound("big", ("lim",)),
                Compound("rsub", (f"{rng.choice(_LETTERS)}<rightarrow>{rng.choice(_DIGITS)}",)),
                Compound("frac", (_expr(rng, min(d - 2, 2)), _expr(rng, min(d - 2, 2)))),
            ),
        )
    elif category == "quantifier":
        head = f"{rng.choice(('<forall>', '<exists>'))}{rng.choice(_LETTERS)},"
        node = Compound("concat", (head, Compound("frac", (_expr(rng, min(d - 2, 2)), _expr(rng, min(d - 2, 2))))))
    elif category == "composite-function":
        inner = Compound("around*", ("(", _expr(rng, min(d - 2, 2)), ")"))
        g = Compound("concat", (rng.choice(_LETTERS), inner))
        node = Compound("concat", (rng.choice(_LETTERS), Compound("around*", ("(", g, ")"))))
    else:  # nested-parentheses
        core: Node = _expr(rng, min(d - 2, 2))
        for _ in range(2 + rng.below(max(d - 2, 1))):
            mid = assemble_inline([_run(rng), core]) if rng.chance(1, 2) else core
            core = Compound("around*", ("(", mid, ")"))
        node = core
    return canonicalize(node)


# -- render-equivalent LaTeX variants -----------------------------------


def _has(n: Node, pred) -> bool:
    return any(pred(x) for x in iter_nodes(n))


def _single_char_script(x: Node) -> bool:
    return (
        isinstance(x, Compound)
        and x.label in ("rsub", "rsup")
        and isinstance(x.children[0], str)
        and len(x.children[0]) == 1
        and x.children[0].isalnum()
    )


def _plain_pair(x: Node) -> bool:
    return (
        isinstance(x, Compound)
        and x.label == "around*"
        and (x.children[0], x.children[2]) in (("(", ")"), ("[", "]"))
    )


def gen_latex_variants(n: Node, params: GenParams | None = None) -> list[str]:
    """Distinct source strings that import and canonicalize back to n.

    One string per applicable rewrite-rule combination (frac <-> over,
    braced <-> bare single-token scripts, \\left pairs <-> plain pairs),
    capped at 8.
    """
    toggles = []
    if _has(n, lambda x: isinstance(x, Compound) and x.label == "frac"):
        toggles.append("frac_as_over")
    if _has(n, _single_char_script):
        toggles.append("bare_single_scripts")
    if _has(n, _plain_pair):
        toggles.append("plain_delimiters")
    out: list[str] = []
    for combo in itertools.product((False, True), repeat=len(toggles)):
        opts = ExportOptions(**dict(zip(toggles, combo)))
        tex = export_fragment(n, options=opts)
        if tex not in out:
            out.append(tex)
        if len(out) >= 8:
            break
    return out


# -- fault injection -----------------------------------------------------


def _verify(kind: FaultKind, faulty: str):
    doc, diags = import_latex(faulty)
    if kind == FaultKind.UNDEFINED_CROSS_REFERENCE:
        if diags:
            return False
        aux = resolve_full(doc, LayoutParams())
        hits = [d for d in aux.diagnostics if d.code == kind]
        return len(hits) == 1 and len(aux.diagnostics) == 1
    return len(diags) == 1 and diags[0].code == kind


def _find_all(src: str, needle: str) -> list[int]:
    out = []
    i = src.find(needle)
    while i != -1:
        out.append(i)
        i = src.find(needle, i + 1)
    return out


def _group_span(src: str, open_idx: int) -> tuple[int, int] | None:
    depth = 0
    for j in range(open_idx, len(src)):
        if src[j] == "{":
            depth += 1
        elif src[j] == "}":
            depth -= 1
            if depth == 0:
                return open_idx, j + 1
    return None


def inject_fault(clean: str, kind: FaultKind, params: GenParams) -> tuple[str, FaultSpec]:
    """Produce a variant of ``clean`` exhibiting exactly one fault of the
    requested kind; candidate sites are tried in seeded random order and
    the result is verified by re-importing."""
    rng = SplitMix64(derive_seed(params.seed, 101, list(FaultKind).index(kind)))
    candidates: list[tuple[str, tuple[int, int], str]] = []

    if kind == FaultKind.UNCLOSED_BRACKET:
        for i in _find_all(clean, "}"):
            candidates.append((clean[:i] + clean[i + 1 :], (i, i + 1), "deleted a closing brace"))
    elif kind == FaultKind.UNCLOSED_ENVIRONMENT:
        import re

        for m in re.finditer(r"\\end\{[A-Za-z*]+\}\n?", clean):
            candidates.append(
                (clean[: m.start()] + clean[m.end() :], (m.start(), m.end()), "deleted an \\end line")
            )
    elif kind == FaultKind.WRONG_COMMAND_USAGE:
        for cmd in ("\\frac", "\\sqrt"):
            for i in _find_all(clean, cmd):
                j = i + len(cmd)
                span1 = _group_span(clean, j) if j < len(clean) and clean[j] == "{" else None
                if span1 is None:
                    continue
                if cmd == "\\frac":
                    k = span1[1]
                    span2 = _group_span(clean, k) if k < len(clean) and clean[k] == "{" else None
                    if span2 is None:
                        continue
                    target = span2
                else:
                    target = span1
                candidates.append(
                    (clean[: target[0]] + clean[target[1] :], target, f"deleted the argument of {cmd}")
                )
    elif kind == FaultKind.UNDEFINED_CROSS_REFERENCE:
        import re

        for m in re.finditer(r"\\ref\{([^}]*)\}", clean):
            broken = clean[: m.start(1)] + m.group(1) + "-nolabel" + clean[m.end(1) :]
            candidates.append((broken, (m.start(1), m.end(1)), "retargeted a \\ref to a fresh label"))
    elif kind == FaultKind.CONFLICTING_DEFINITION:
        import re

        for m in re.finditer(r"\\newcommand\{\\([A-Za-z]+)\}(?:\[\d\])?", clean):
            span = _group_span(clean, clean.find("{", m.end()))
            insert_at = span[1] if span else m.end()
            dup = f"\n\\newcommand{{\\{m.group(1)}}}{{\\mathrm{{zz}}}}"
            candidates.append(
                (clean[:insert_at] + dup + clean[insert_at:], (insert_at, insert_at), "inserted a conflicting definition")
            )
        pair = "\\newcommand{\\zzdup}{a}\n\\newcommand{\\zzdup}{b}\n"
        candidates.append((pair + clean, (0, 0), "inserted a conflicting definition pair"))
    elif kind == FaultKind.SELF_RECURSIVE_MACRO:
        probe = "\\newcommand{\\zzloop}{\\zzloop}\n"
        lines = clean.split("\n\n")
        for bi in range(len(lines)):
            if not lines[bi].strip() or lines[bi].lstrip().startswith("\\begin"):
                continue
            patched = list(lines)
            patched[bi] = patched[bi] + " \\zzloop"
            faulty = probe + "\n\n".join(patched)
            pos = len(probe) + len("\n\n".join(lines[: bi + 1]))
            candidates.append((faulty, (pos, pos), "defined and used a self-recursive macro"))
    else:
        raise InapplicableFaultError(f"{kind.value} cannot be injected")

    order = list(range(len(candidates)))
    for i in range(len(order) - 1, 0, -1):
        j = rng.below(i + 1)
        order[i], order[j] = order[j], order[i]
    for idx in order:
        faulty, site, desc = candidates[idx]
        if _verify(kind, faulty):
            return faulty, FaultSpec(kind, site, desc)
    raise InapplicableFaultError(f"no verifiable site for {kind.value} in this source")


# -- synthetic benchmark documents -------------------------------------


_WORDS = tuple(
    (
        "the model keeps a tree for every block and updates only the parts "
        "touched by an edit so rendering stays local and fast"
    ).split()
)


def _sentence(rng: SplitMix64, n: int) -> str:
    return " ".join(rng.choice(_WORDS) for _ in range(n))


def gen_document(params: GenParams, sections: int, refs_per_section: int) -> Document:
    """Synthetic document with labeled sections, theorems and equations
    plus uniformly seeded cross-references; imports and exports cleanly."""
    if sections < 1:
        raise ValueError("sections must be >= 1")
    rng = SplitMix64(derive_seed(params.seed, 7))
    fig_flags = [rng.chance(1, 4) for _ in range(sections)]
    pool: list[str] = []
    for s in range(1, sections + 1):
        pool.extend((f"sec:{s}", f"thm:{s}", f"eq:{s}"))
        if fig_flags[s - 1]:
            pool.append(f"fig:{s}")

    blocks: list[Node] = []
    for s in range(1, sections + 1):
        blocks.append(
            Compound("concat", (Compound("section", (f"Section {s}",)), Compound("label", (f"sec:{s}",))))
        )
        for _ in range(1 + rng.below(2)):
            blocks.append(_sentence(rng, 5 + rng.below(5)))
        blocks.append(
            Compound(
                "theorem",
                (
                    Compound(
                        "concat",
                        (
                            Compound("label", (f"thm:{s}",)),
                            f"Claim {s} states ",
                            Compound("math", (canonicalize(_expr(rng, 3)),)),
                            ".",
                        ),
                    ),
                ),
            )
        )
        blocks.append(
            Compound(
                "equation",
                (
                    Compound(
                        "concat",
                        (canonicalize(_expr(rng, 3)), Compound("label", (f"eq:{s}",))),
                    ),
                ),
            )
        )
        if fig_flags[s - 1]:
            blocks.append(
                Compound(
                    "figure",
                    (
                        Compound(
                            "concat",
                            (
                                Compound("image", (f"fig{s}.png",)),
                                Compound("caption", (f"Figure {s}",)),
                                Compound("label", (f"fig:{s}",)),
                            ),
                        ),
                    ),
                )
            )
        if refs_per_section > 0:
            parts: list[Node] = ["See "]
            for r in range(refs_per_section):
                if r:
                    parts.append(" and ")
                parts.append(Compound("reference", (rng.choice(pool),)))
            parts.append(".")
            blocks.append(Compound("concat", tuple(parts)))
    root = Compound("document", tuple(blocks))
    return Document(root=root, title=f"Synthetic {params.seed}", aux=None, style=None)


# -- corpus records -------------------------------------------------------


def formula_records(params: GenParams):
    """JSON-lines records for the seeded formula corpus.

    The prefix/suffix split of the canonical LaTeX at 50% of its tokens
    is a convention of this corpus, recorded for completion-style use.
    """
    for i in range(params.count):
        category = CATEGORIES[i % len(CATEGORIES)]
        fp = GenParams(seed=derive_seed(params.seed, i), max_depth=params.max_depth, count=1)
        node = gen_formula(fp, category)
        tex = export_fragment(node)
        toks = [t.text for t in tokenize(tex)]
        cut = (len(toks) + 1) // 2
        yield {
            "id": i,
            "category": category,
            "canonical_sexp": write_sexp(node),
            "tmu": write_node(node),
            "latex_variants": gen_latex_variants(node, fp),
            "prefix_split_50": {"prefix": "".join(toks[:cut]), "suffix": "".join(toks[cut:])},
        }


def write_corpus(params: GenParams, fp) -> int:
    count = 0
    for rec in formula_records(params):
        fp.write(json.dumps(rec, sort_keys=True) + "\n")
        count += 1
    return count
