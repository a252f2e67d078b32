"""Corpus entropy, equivalence-class multiplicity and task scoring.

Token units per format: LaTeX streams use the lexer's tokens (comments
and pure whitespace dropped); tmu and sexp streams split on markup
delimiters with each leaf a single token.  Entropy is empirical Shannon
entropy in bits per token: order 1 over the token distribution, order 2
the conditional entropy of a token given its predecessor, with a
boundary marker standing in as the context at each stream start
(markers are contexts only, never predicted).

The entropy direction (tex above tmu on the variant-injected corpus) is
a corpus-level proxy for next-token predictability; no training loss is
computed or claimed here.
"""
from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable

from treedoc.nodes import is_registered
from treedoc.tokenizer import CHAR, COMMENT, tokenize

_BOUNDARY = None  # context marker between streams; never itself predicted


@dataclass(frozen=True)
class EntropyReport:
    format: str
    order: int
    bits_per_token: float
    vocab_size: int
    token_count: int

    def __post_init__(self):
        if self.vocab_size >= 1 and not (
            -1e-9 <= self.bits_per_token <= math.log2(self.vocab_size) + 1e-9
        ):
            raise ValueError("entropy outside [0, log2(vocab)]")


@dataclass(frozen=True)
class MultiplicityReport:
    format: str
    classes: int
    mean_forms_per_class: float
    max_forms: int

    def __post_init__(self):
        if self.classes and self.mean_forms_per_class > self.max_forms + 1e-12:
            raise ValueError("mean multiplicity exceeds max")


@dataclass(frozen=True)
class ScoreInput:
    tokens: int  # T: tokens spent on input, thinking, output and tools
    correct: bool = False
    try_index: object = 1  # 1 | 2 | "fail"
    e_ref: int = 0  # reference failures ("??" in output)
    e_sty: int = 0  # doc-style violations in merged output


# -- tokenizers ------------------------------------------------------------


def tex_tokens(src: str) -> list[str]:
    out = []
    for t in tokenize(src):
        if t.kind == COMMENT:
            continue
        if t.kind == CHAR and t.text.strip() == "":
            continue
        out.append(t.text)
    return out


def tmu_tokens(text: str) -> list[str]:
    """Markup delimiters and tag names are tokens; each leaf is one token."""
    out: list[str] = []
    buf: list[str] = []
    i = 0
    n = len(text)

    def flush():
        if buf:
            tok = "".join(buf)
            if tok.strip("\n"):
                out.append(tok)
            buf.clear()

    name_re = re.compile(r"[a-zA-Z][a-zA-Z0-9*-]*")
    while i < n:
        c = text[i]
        if c == "\\" and i + 1 < n:
            buf.append(text[i : i + 2])
            i += 2
            continue
        if c == "<":
            m = name_re.match(text, i + 1)
            if m and m.end() < n and text[m.end()] == ">" and not is_registered(m.group(0)):
                buf.append(text[i : m.end() + 1])  # entity: part of the leaf
                i = m.end() + 1
                continue
            flush()
            out.append("<")
            if m:
                out.append(m.group(0))
                i = m.end()
            else:
                i += 1
            continue
        if c in "|>":
            flush()
            out.append(c)
            i += 1
            continue
        if c == "\n":
            flush()
            i += 1
            continue
        buf.append(c)
        i += 1
    flush()
    return out


def sexp_tokens(text: str) -> list[str]:
    out: list[str] = []
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c in "()":
            out.append(c)
            i += 1
        elif c == '"':
            j = i + 1
            while j < n:
                if text[j] == "\\":
                    j += 2
                elif text[j] == '"':
                    j += 1
                    break
                else:
                    j += 1
            out.append(text[i:j])
            i = j
        elif c in " \t\n\r":
            i += 1
        else:
            j = i
            while j < n and text[j] not in ' \t\n\r()"':
                j += 1
            out.append(text[i:j])
            i = j
    return out


# -- entropy ----------------------------------------------------------------


def token_entropy(streams: list[list[str]], order: int, format: str = "") -> EntropyReport:
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    total = sum(len(s) for s in streams)
    if total == 0:
        raise ValueError("empty corpus")
    vocab = {tok for s in streams for tok in s}
    if order == 1:
        counts = Counter(tok for s in streams for tok in s)
        h = -sum((c / total) * math.log2(c / total) for c in counts.values())
    else:
        bigrams: Counter = Counter()
        ctx: Counter = Counter()
        for s in streams:
            prev = _BOUNDARY
            for tok in s:
                bigrams[(prev, tok)] += 1
                ctx[prev] += 1
                prev = tok
        h = 0.0
        for (a, _b), c in bigrams.items():
            h -= (c / total) * math.log2(c / ctx[a])
    return EntropyReport(format, order, max(h, 0.0), len(vocab), total)


# -- multiplicity -------------------------------------------------------------


def class_multiplicity(records: Iterable[dict]) -> dict[str, MultiplicityReport]:
    """Distinct source forms per rendered-equivalent class, per format."""
    counts = {"tex": [], "tmu": [], "sexp": []}
    for idx, rec in enumerate(records):
        rid = rec.get("id", idx)
        try:
            variants = rec["latex_variants"]
            tmu = rec["tmu"]
            sexp = rec["canonical_sexp"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed corpus record {rid!r}: missing {exc}") from None
        if not isinstance(variants, list) or not variants:
            raise ValueError(f"malformed corpus record {rid!r}: no latex variants")
        counts["tex"].append(len(set(variants)))
        counts["tmu"].append(len({tmu}))
        counts["sexp"].append(len({sexp}))
    out = {}
    for fmt, forms in counts.items():
        classes = len(forms)
        mean = sum(forms) / classes if classes else 0.0
        out[fmt] = MultiplicityReport(fmt, classes, mean, max(forms, default=0))
    return out


# -- scoring ------------------------------------------------------------------


def score_item(s: ScoreInput) -> int:
    """Per-question structure/debug score: 5 minus one point per 10k
    tokens for a right answer, zero for a wrong one, floored at zero."""
    if not s.correct:
        return 0
    return max(0, 5 - s.tokens // 10_000)


def score_merge(s: ScoreInput) -> int:
    """Merge-task score: 20/10/0 base for first try, second try or
    failure, minus 2 per reference failure, one per 10k tokens and one
    per doc-style violation, floored at zero."""
    if s.try_index == 1:
        base = 20
    elif s.try_index == 2:
        base = 10
    else:
        return 0
    return max(0, base - 2 * s.e_ref - s.tokens // 10_000 - s.e_sty)
