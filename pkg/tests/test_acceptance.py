"""Acceptance suite: one test per criterion, one printed line each."""
import dataclasses
import statistics
import time
from contextlib import contextmanager

from conftest import find_error_paths, outside_matches

from treedoc.bench import EditScript, make_step_edits
from treedoc.corpus import (
    GenParams,
    SplitMix64,
    formula_records,
    gen_document,
    gen_formula,
    inject_fault,
)
from treedoc.diagnostics import FaultKind
from treedoc.exporter import export_fragment, export_latex
from treedoc.importer import import_latex, import_math, import_math_fragment
from treedoc.merge import merge_documents
from treedoc.metrics import (
    ScoreInput,
    class_multiplicity,
    score_item,
    score_merge,
    tex_tokens,
    tmu_tokens,
    token_entropy,
)
from treedoc.nodes import (
    Compound,
    Document,
    EditRecord,
    apply_edit,
    count_nodes,
    iter_nodes,
    make_node,
    struct_eq,
)
from treedoc.resolver import LayoutParams, lookup, resolve_full, resolve_incremental
from treedoc.sexp import read_sexp, write_sexp
from treedoc.tmu import read_tmu, write_tmu
from treedoc.corpus import CATEGORIES


@contextmanager
def criterion(n: int, desc: str):
    try:
        yield
    except BaseException:
        print(f"[criterion {n:02d}] FAIL  {desc}")
        raise
    print(f"[criterion {n:02d}] PASS  {desc}")


EQ1_SOURCE = r"\int_{a}^{b} f(x) \mathrm{d}x = \left[ F(x) \right] \big|_{a}^{b}"
LISTING1 = (
    '(math (concat (big "int") (rsub "a") (rsup "b") "f" (around* "(" "x" ")")'
    ' "<mathd>x=" (around* "<nobracket>" (around* "[" (concat "F"'
    ' (around* "(" "x" ")")) "]") "|") (rsub "a") (rsup "b")))'
)


def test_criterion_01_listing1_golden():
    with criterion(1, "Eq.(1) imports to the exact printed S-expression"):
        t0 = time.perf_counter()
        node, diags = import_math(EQ1_SOURCE)
        elapsed = time.perf_counter() - t0
        assert diags == []
        assert write_sexp(node) == LISTING1
        assert elapsed < 1.0


_FRAC_PAIRS = [
    (rf"\frac{{{a}}}{{{b}}}", rf"{{{a} \over {b}}}")
    for a, b in [
        ("a", "b"), ("x", "y"), ("1", "2"), ("x+1", "2"), ("a", "b+c"),
        ("u", "v"), ("p", "q"), ("m", "n"), ("0", "1"), ("z", "w"),
    ]
]
_SCRIPT_PAIRS = [(f"{b}^{e}", f"{b}^{{{e}}}") for b, e in [("x", "2"), ("y", "3"), ("z", "k"), ("t", "9"), ("q", "j")]]
_SCRIPT_PAIRS += [(f"{b}_{e}", f"{b}_{{{e}}}") for b, e in [("a", "1"), ("b", "2"), ("w", "n"), ("s", "0"), ("r", "m")]]
_DELIM_PAIRS = [
    (rf"\left({x}\right)", f"({x})")
    for x in ["x", "a+b", "u", "pq", "k"]
] + [
    (rf"\left[{x}\right]", f"[{x}]")
    for x in ["y", "c-d", "v", "rs", "t"]
]
EQUIV_TABLE = _FRAC_PAIRS + _SCRIPT_PAIRS + _DELIM_PAIRS


def test_criterion_02_equivalence_table():
    with criterion(2, "30 enumerated render-equivalent pairs import to one tree"):
        assert len(EQUIV_TABLE) == 30
        for a, b in EQUIV_TABLE:
            na, da = import_math_fragment(a)
            nb, db = import_math_fragment(b)
            assert da == [] and db == [], (a, b)
            assert struct_eq(na, nb), (a, b)


def test_criterion_03_roundtrip_suite():
    with criterion(3, "1000-formula corpus round-trips sexp, tmu and LaTeX"):
        t0 = time.perf_counter()
        params = GenParams(seed=2024, count=1000)
        seen_sexp = {}
        seen_tmu = {}
        for i in range(params.count):
            cat = CATEGORIES[i % len(CATEGORIES)]
            n = gen_formula(GenParams(seed=i ^ params.seed), cat)
            s = write_sexp(n)
            assert read_sexp(s) == n
            doc = Document(root=make_node("document", [n]))
            t = write_tmu(doc)
            back = read_tmu(t)
            assert back.root == doc.root
            tex = export_fragment(n)
            n2, diags = import_math_fragment(tex)
            assert diags == [], (tex, diags)
            assert struct_eq(n2, n)
            # injectivity: one serialization per distinct tree, both formats
            if s in seen_sexp:
                assert seen_sexp[s] == n
            if t in seen_tmu:
                assert struct_eq(seen_tmu[t], n)
            seen_sexp[s] = n
            seen_tmu[t] = n
        assert time.perf_counter() - t0 < 30.0


def test_criterion_04_associate_fidelity():
    with criterion(4, "labeled subsection 5.1 on page 13 serializes the printed associate line"):
        blocks = []
        for s in range(4):
            blocks.append(make_node("section", [f"S{s + 1}"]))
            blocks.extend(f"paragraph {s}.{i}" for i in range(119))
        blocks.append(make_node("section", ["S5"]))
        blocks.append(
            make_node(
                "concat",
                [make_node("subsection", ["Tree Structure"]), make_node("label", ["sec:tree-struc-on-mogan"])],
            )
        )
        doc = Document(root=make_node("document", blocks))
        aux = resolve_full(doc, LayoutParams())
        assert lookup(aux, "sec:tree-struc-on-mogan") is not None
        text = write_tmu(dataclasses.replace(doc, aux=aux))
        assert "<associate|sec:tree-struc-on-mogan|<tuple|5.1|13>>" in text.splitlines()


def test_criterion_05_incremental_equals_batch():
    with criterion(5, "200 random edit scripts: incremental table == full recompute at every step"):
        t0 = time.perf_counter()
        kinds = ("edit-text", "add-section", "add-figure", "relabel-reference", "move-block")
        rng = SplitMix64(0xACCE5)
        scripts_run = 0
        steps_checked = 0
        for script_i in range(200):
            doc = gen_document(GenParams(seed=script_i % 20), sections=6, refs_per_section=2)
            aux = resolve_full(doc)
            script = EditScript.of(
                [kinds[rng.below(len(kinds))] for _ in range(2)], seed=script_i
            )
            counter = 0
            for step in script.steps:
                edits = make_step_edits(doc, aux, step, rng, counter)
                counter += 1
                for edit in edits:
                    doc = apply_edit(doc, edit)
                    aux, _ = resolve_incremental(doc, aux, edit)
                    full = resolve_full(doc)
                    assert aux.entries == full.entries
                    assert aux.diagnostics == full.diagnostics
                    steps_checked += 1
            scripts_run += 1
        assert scripts_run == 200
        assert steps_checked >= 400
        assert time.perf_counter() - t0 < 60.0


def test_criterion_06_locality_on_thousand_sections():
    with criterion(6, "intra-paragraph edit on a 1000-section doc touches <5% and is >=5x faster"):
        doc = gen_document(GenParams(seed=1000), sections=1000, refs_per_section=2)
        aux = resolve_full(doc)
        total = count_nodes(doc.root)
        idx = next(
            i for i, b in enumerate(doc.root.children) if isinstance(b, str) and i > len(doc.root.children) // 2
        )
        edit = EditRecord(path=(idx,), kind="replace", old=doc.root.children[idx], new="a reworded paragraph")
        edited = apply_edit(doc, edit)

        aux2, stats = resolve_incremental(edited, aux, edit)
        oracle = resolve_full(edited)
        assert aux2.entries == oracle.entries
        assert stats.touched_nodes < 0.05 * total

        full_times, inc_times = [], []
        for _ in range(5):
            t0 = time.perf_counter()
            resolve_full(edited)
            full_times.append(time.perf_counter() - t0)
            t0 = time.perf_counter()
            resolve_incremental(edited, aux, edit)
            inc_times.append(time.perf_counter() - t0)
        speedup = statistics.median(full_times) / statistics.median(inc_times)
        assert speedup >= 5.0, f"speedup {speedup:.1f}x"


FAULT_BASE = r"""\newcommand{\R}{\mathbb{R}}
\newcommand{\half}{\frac{1}{2}}
\newtheorem{thm}{Theorem}
\section{Model}\label{sec:model}

Documents form trees and a fraction $\frac{1}{2}$ stays local, see \ref{eq:one}.

\begin{equation}x^{2} + y^{2} = z^{2}\label{eq:one}\end{equation}

\begin{thm}\label{thm:sq}
Each $x \in \R$ gives $\sqrt{x^{2}}$ back, compare \ref{eq:one}.
\end{thm}

\begin{proof}
Expand $\frac{x}{2}$ and use \ref{thm:sq} twice.
\end{proof}

\section{Layout}\label{sec:layout}

\begin{itemize}
\item lines are leaves
\item figures are blocks
\end{itemize}

\begin{figure}
\includegraphics{tree.png}
\caption{A block figure}\label{fig:tree}
\end{figure}

Final remarks cite \ref{fig:tree} and \ref{sec:model}.
"""

TABLE5_COUNTS = [
    (FaultKind.UNCLOSED_BRACKET, 4),
    (FaultKind.UNCLOSED_ENVIRONMENT, 5),
    (FaultKind.WRONG_COMMAND_USAGE, 4),
    (FaultKind.UNDEFINED_CROSS_REFERENCE, 3),
    (FaultKind.CONFLICTING_DEFINITION, 2),
    (FaultKind.SELF_RECURSIVE_MACRO, 2),
]


def test_criterion_07_fault_localization_suite():
    with criterion(7, "20-sample fault suite: one diagnostic each, confined to its compound"):
        clean_doc, clean_diags = import_latex(FAULT_BASE)
        assert clean_diags == []
        assert resolve_full(clean_doc).diagnostics == ()
        samples = 0
        for kind, count in TABLE5_COUNTS:
            for seed in range(count):
                faulty_src, spec = inject_fault(FAULT_BASE, kind, GenParams(seed=seed))
                assert spec.kind == kind
                doc, diags = import_latex(faulty_src)
                if kind == FaultKind.UNDEFINED_CROSS_REFERENCE:
                    assert diags == []
                    aux = resolve_full(doc)
                    assert [d.code for d in aux.diagnostics] == [kind]
                    region = aux.diagnostics[0].anchor
                    assert outside_matches(clean_doc.root, doc.root, region)
                elif kind == FaultKind.CONFLICTING_DEFINITION:
                    assert [d.code for d in diags] == [kind]
                    assert struct_eq(doc.root, clean_doc.root)  # preamble-only fault
                elif kind == FaultKind.SELF_RECURSIVE_MACRO:
                    assert [d.code for d in diags] == [kind]
                    region = diags[0].anchor
                    assert region, "anchor must name the enclosing compound"
                    assert outside_matches(clean_doc.root, doc.root, region)
                else:
                    assert [d.code for d in diags] == [kind], (kind, faulty_src)
                    errors = find_error_paths(doc.root)
                    assert len(errors) == 1
                    assert outside_matches(clean_doc.root, doc.root, errors[0])
                samples += 1
        assert samples == 20


def test_criterion_08_entropy_direction_and_multiplicity():
    with criterion(8, "order-2 entropy: tex > tmu; tmu multiplicity exactly 1.0"):
        recs = list(formula_records(GenParams(seed=2024, count=1000)))
        tex_streams = [tex_tokens(v) for r in recs for v in r["latex_variants"]]
        tmu_streams = [tmu_tokens(r["tmu"]) for r in recs]
        h_tex = token_entropy(tex_streams, 2, "tex")
        h_tmu = token_entropy(tmu_streams, 2, "tmu")
        assert h_tex.bits_per_token > h_tmu.bits_per_token
        mult = class_multiplicity(recs)
        assert mult["tmu"].mean_forms_per_class == 1.0
        assert mult["tmu"].max_forms == 1
        print(
            f"    tex order-2 {h_tex.bits_per_token:.4f} bits/token vs "
            f"tmu {h_tmu.bits_per_token:.4f}; tex multiplicity {mult['tex'].mean_forms_per_class:.2f}"
        )


SCORE_TABLE = [
    ("item", dict(tokens=8_000, correct=True), 5),
    ("item", dict(tokens=23_000, correct=True), 3),
    ("item", dict(tokens=1, correct=False), 0),
    ("item", dict(tokens=60_000, correct=True), 0),
    ("item", dict(tokens=49_999, correct=True), 1),
    ("item", dict(tokens=10_000, correct=True), 4),
    ("merge", dict(tokens=15_000, try_index=1, e_ref=1, e_sty=0), 17),
    ("merge", dict(tokens=5_000, try_index=2, e_ref=0, e_sty=3), 7),
    ("merge", dict(tokens=1, try_index="fail"), 0),
    ("merge", dict(tokens=0, try_index=1), 20),
    ("merge", dict(tokens=100_000, try_index=1, e_ref=3, e_sty=5), 0),
    ("merge", dict(tokens=0, try_index=2, e_ref=5), 0),
]


def test_criterion_09_scoring_formulas():
    with criterion(9, "12-case hand-computed scoring table matches exactly"):
        for kind, kwargs, expected in SCORE_TABLE:
            s = ScoreInput(correct=kwargs.pop("correct", True), **kwargs)
            got = score_item(s) if kind == "item" else score_merge(s)
            assert got == expected, (kind, s, got, expected)


def _merge_fixture():
    lead_parts = [
        "\\newtheorem{thm}{Theorem}",
        "\\newcommand{\\R}{\\mathbb{R}}",
        "\\section{Results}\\label{sec:results}",
        "",
    ]
    for k in range(1, 11):
        lead_parts += [
            f"\\begin{{thm}}\\label{{thm:t{k}}}",
            f"Claim {k} holds over $\\R$ with \\ref{{eq:e{k}}}.",
            "\\end{thm}",
            "",
            f"\\begin{{equation}}x_{{{k}}} = {k}\\label{{eq:e{k}}}\\end{{equation}}",
            "",
        ]
    lead_src = "\n".join(lead_parts)

    order = list(range(1, 11))
    rng = SplitMix64(99)
    for i in range(len(order) - 1, 0, -1):
        j = rng.below(i + 1)
        order[i], order[j] = order[j], order[i]
    fol_parts = ["\\newcommand{\\R}{\\mathbf{R}}", ""]
    for k in order:
        fol_parts += [
            "\\begin{proof}",
            f"Proof of \\ref{{thm:t{k}}} uses \\ref{{eq:e{k}}}.",
            "\\end{proof}",
            "",
        ]
    return lead_src, "\n".join(fol_parts)


def test_criterion_10_merge_places_proofs():
    with criterion(10, "10 shuffled proofs merge adjacent to their theorems, zero ??, lead style"):
        lead_src, fol_src = _merge_fixture()
        lead, d1 = import_latex(lead_src)
        follower, d2 = import_latex(fol_src)
        assert d1 == [] and d2 == []
        merged, diags = merge_documents(lead, follower)
        unmatched = [d for d in diags if d.code == FaultKind.UNDEFINED_CROSS_REFERENCE]
        assert unmatched == []

        blocks = list(merged.root.children)
        proofs_seen = 0
        for i, b in enumerate(blocks):
            if isinstance(b, Compound) and b.label == "theorem":
                label = next(
                    n.children[0] for n in iter_nodes(b) if isinstance(n, Compound) and n.label == "label"
                )
                nxt = blocks[i + 1]
                assert isinstance(nxt, Compound) and nxt.label == "proof", label
                ref = next(
                    n.children[0]
                    for n in iter_nodes(nxt)
                    if isinstance(n, Compound) and n.label == "reference"
                )
                assert ref == label
                proofs_seen += 1
        assert proofs_seen == 10

        aux = resolve_full(merged)
        assert not [d for d in aux.diagnostics if d.code == FaultKind.UNDEFINED_CROSS_REFERENCE]
        tex = export_latex(dataclasses.replace(merged, aux=aux), style=merged.style)
        assert "??" not in tex
        assert tex.count("\\begin{thm}") == 10
        assert "\\begin{theorem}" not in tex
