import pytest

from treedoc.bench import EditScript, make_step_edits
from treedoc.corpus import GenParams, SplitMix64, gen_document
from treedoc.diagnostics import FaultKind
from treedoc.nodes import (
    Compound,
    Document,
    EditRecord,
    apply_edit,
    count_nodes,
    make_node,
    subtree_at,
)
from treedoc.resolver import (
    AuxTable,
    LayoutParams,
    RefValue,
    lookup,
    resolve_full,
    resolve_incremental,
)


def section(title, label=None):
    node = make_node("section", [title])
    if label is None:
        return node
    return make_node("concat", [node, make_node("label", [label])])


def doc_of(*blocks):
    return Document(root=make_node("document", list(blocks)))


def tables_equal(a: AuxTable, b: AuxTable) -> bool:
    return a.entries == b.entries and a.diagnostics == b.diagnostics


def test_empty_document_resolves_empty():
    aux = resolve_full(doc_of())
    assert aux.entries == {}
    assert aux.diagnostics == ()


def test_section_equation_theorem_numbering():
    d = doc_of(
        section("One", "sec:1"),
        make_node("equation", [make_node("concat", ["x", make_node("label", ["eq:a"])])]),
        make_node("theorem", [make_node("concat", [make_node("label", ["thm:a"]), "claim"])]),
        make_node("equation", [make_node("concat", ["y", make_node("label", ["eq:b"])])]),
        section("Two", "sec:2"),
        make_node("equation", [make_node("concat", ["z", make_node("label", ["eq:c"])])]),
    )
    aux = resolve_full(d)
    assert aux.entries["sec:1"] == RefValue("1", 1, "section")
    assert aux.entries["eq:a"] == RefValue("1.1", 1, "equation")
    assert aux.entries["thm:a"] == RefValue("1.1", 1, "theorem")
    assert aux.entries["eq:b"] == RefValue("1.2", 1, "equation")
    assert aux.entries["sec:2"] == RefValue("2", 1, "section")
    assert aux.entries["eq:c"] == RefValue("2.1", 1, "equation")


def test_subsection_numbering_and_pages():
    blocks = [section("S1", "sec:1")]
    blocks += [f"p{i}" for i in range(39)]  # fills page 1
    blocks += [make_node("concat", [make_node("subsection", ["T"]), make_node("label", ["sub:1"])])]
    aux = resolve_full(doc_of(*blocks))
    assert aux.entries["sub:1"] == RefValue("1.1", 2, "section")


def test_figure_lines_advance_pages():
    fig = make_node("figure", [make_node("image", ["x.png"])])
    blocks = [fig] * 4 + [make_node("concat", [section("S"), make_node("label", ["sec:s"])])]
    aux = resolve_full(doc_of(*blocks), LayoutParams(lines_per_page=40, figure_lines=10))
    assert aux.entries["sec:s"].page == 2  # 40 figure lines fill page 1


def test_duplicate_label_first_binding_wins():
    d = doc_of(
        section("A", "dup"),
        section("B", "dup"),
    )
    aux = resolve_full(d)
    assert aux.entries["dup"].number == "1"
    assert [x.code for x in aux.diagnostics] == [FaultKind.CONFLICTING_DEFINITION]


def test_undefined_reference_reported():
    d = doc_of(make_node("concat", ["see ", make_node("reference", ["ghost"])]))
    aux = resolve_full(d)
    assert [x.code for x in aux.diagnostics] == [FaultKind.UNDEFINED_CROSS_REFERENCE]
    assert lookup(aux, "ghost") is None


def test_lookup():
    d = doc_of(section("A", "sec:a"))
    aux = resolve_full(d)
    assert lookup(aux, "sec:a") == RefValue("1", 1, "section")
    assert lookup(aux, "absent") is None


def test_monotone_section_numbers():
    d = gen_document(GenParams(seed=9), sections=12, refs_per_section=1)
    aux = resolve_full(d)
    numbers = [int(rv.number) for name, rv in aux.entries.items() if name.startswith("sec:")]
    assert numbers == sorted(numbers)


def test_incremental_requires_cache():
    d = doc_of(section("A", "sec:a"))
    bogus = AuxTable(entries={"sec:a": RefValue("1", 1, "section")})
    edit = EditRecord(path=(0,), kind="replace", old=d.root.children[0], new="text")
    d2 = apply_edit(d, edit)
    with pytest.raises(ValueError):
        resolve_incremental(d2, bogus, edit)


def test_incremental_content_edit_fast_path():
    d = gen_document(GenParams(seed=1), sections=10, refs_per_section=2)
    aux = resolve_full(d)
    # find a paragraph leaf
    idx = next(i for i, b in enumerate(d.root.children) if isinstance(b, str))
    edit = EditRecord(path=(idx,), kind="replace", old=d.root.children[idx], new="replaced words")
    d2 = apply_edit(d, edit)
    aux2, stats = resolve_incremental(d2, aux, edit)
    assert tables_equal(aux2, resolve_full(d2))
    assert stats.touched_nodes == 1  # the replaced leaf only
    assert stats.recomputed_refs == 0
    assert stats.total_nodes == count_nodes(d2.root)


def test_incremental_insert_section_shifts_numbers():
    d = gen_document(GenParams(seed=2), sections=6, refs_per_section=1)
    aux = resolve_full(d)
    block = make_node("concat", [make_node("section", ["Zed"]), make_node("label", ["sec:zed"])])
    edit = EditRecord(path=(0,), kind="insert", new=block)
    d2 = apply_edit(d, edit)
    aux2, stats = resolve_incremental(d2, aux, edit)
    full = resolve_full(d2)
    assert tables_equal(aux2, full)
    assert aux2.entries["sec:zed"].number == "1"
    assert aux2.entries["sec:1"].number == "2"
    assert stats.touched_nodes > 1


def test_incremental_on_empty_document():
    d = doc_of()
    aux = resolve_full(d)
    edit = EditRecord(path=(0,), kind="insert", new=section("First", "sec:f"))
    d2 = apply_edit(d, edit)
    aux2, _ = resolve_incremental(d2, aux, edit)
    assert tables_equal(aux2, resolve_full(d2))
    assert aux2.entries["sec:f"].number == "1"


def test_incremental_delete_block():
    d = gen_document(GenParams(seed=3), sections=5, refs_per_section=1)
    aux = resolve_full(d)
    old = d.root.children[0]
    edit = EditRecord(path=(0,), kind="delete", old=old)
    d2 = apply_edit(d, edit)
    aux2, _ = resolve_incremental(d2, aux, edit)
    assert tables_equal(aux2, resolve_full(d2))


def test_incremental_chain_matches_full_on_random_scripts():
    kinds = ("edit-text", "add-section", "add-figure", "relabel-reference", "move-block")
    rng = SplitMix64(77)
    for script_i in range(12):
        doc = gen_document(GenParams(seed=script_i), sections=5, refs_per_section=2)
        aux = resolve_full(doc)
        script = EditScript.of([kinds[rng.below(len(kinds))] for _ in range(3)], seed=script_i)
        counter = 0
        for step in script.steps:
            edits = make_step_edits(doc, aux, step, rng, counter)
            counter += 1
            for edit in edits:
                doc = apply_edit(doc, edit)
                aux, _ = resolve_incremental(doc, aux, edit)
                assert tables_equal(aux, resolve_full(doc))


def independent_recount(doc: Document, lp: LayoutParams) -> dict:
    """Deliberately plain single-pass counter walk, kept separate from the
    resolver's event machinery, used as its oracle."""
    entries = {}
    st = {"sec": 0, "sub": 0, "eq": 0, "thm": 0, "fig": 0, "lines": 0, "page": 1}
    current = {"number": "0", "kind": "section"}
    theorem_labels = {"theorem", "lemma", "proposition", "corollary", "definition", "remark", "example"}

    def walk(node, parent_is_doc):
        if parent_is_doc:
            st["page"] = st["lines"] // lp.lines_per_page + 1
            is_fig = isinstance(node, Compound) and node.label == "figure"
            st["lines"] += lp.figure_lines if is_fig else 1
        if isinstance(node, str):
            return
        if node.label == "section":
            st["sec"] += 1
            st["sub"] = st["eq"] = st["thm"] = st["fig"] = 0
            current.update(number=str(st["sec"]), kind="section")
        elif node.label == "subsection":
            st["sub"] += 1
            current.update(number=f"{st['sec']}.{st['sub']}", kind="section")
        elif node.label == "equation":
            st["eq"] += 1
            current.update(number=f"{st['sec']}.{st['eq']}", kind="equation")
        elif node.label in theorem_labels:
            st["thm"] += 1
            current.update(number=f"{st['sec']}.{st['thm']}", kind="theorem")
        elif node.label == "figure":
            st["fig"] += 1
            current.update(number=f"{st['sec']}.{st['fig']}", kind="figure")
        elif node.label == "label" and isinstance(node.children[0], str):
            entries.setdefault(
                node.children[0], RefValue(current["number"], st["page"], current["kind"])
            )
        for child in node.children:
            walk(child, node.label == "document")

    walk(doc.root, False)
    return entries


def test_resolve_full_matches_independent_recount_at_scale():
    lp = LayoutParams()
    doc = gen_document(GenParams(seed=44), sections=1000, refs_per_section=2)
    aux = resolve_full(doc, lp)
    assert aux.entries == independent_recount(doc, lp)


def test_edit_inside_equation_body_bounded_by_equation_size():
    d = gen_document(GenParams(seed=12), sections=8, refs_per_section=1)
    aux = resolve_full(d)
    eq_idx, eq = next(
        (i, b) for i, b in enumerate(d.root.children)
        if isinstance(b, Compound) and b.label == "equation"
    )
    # replace the equation's expression part (no labels touched)
    path = (eq_idx, 0, 0)
    edit = EditRecord(path=path, kind="replace", old=subtree_at(d.root, path), new="q+1")
    d2 = apply_edit(d, edit)
    aux2, stats = resolve_incremental(d2, aux, edit)
    assert aux2.entries == aux.entries  # table unchanged
    assert tables_equal(aux2, resolve_full(d2))
    assert stats.touched_nodes <= count_nodes(eq)


def test_incremental_root_replace_equals_full():
    d = gen_document(GenParams(seed=21), sections=4, refs_per_section=1)
    aux = resolve_full(d)
    other = gen_document(GenParams(seed=22), sections=3, refs_per_section=1)
    edit = EditRecord(path=(), kind="replace", old=d.root, new=other.root)
    d2 = apply_edit(d, edit)
    aux2, stats = resolve_incremental(d2, aux, edit)
    assert tables_equal(aux2, resolve_full(d2))
    assert stats.total_nodes == count_nodes(other.root)


def test_incremental_insert_into_nested_document():
    itemize = make_node(
        "itemize",
        [make_node("document", [make_node("concat", [make_node("item", []), "one"])])],
    )
    d = doc_of(section("S", "sec:s"), itemize, *[f"p{i}" for i in range(45)], section("T", "sec:t"))
    aux = resolve_full(d)
    line = make_node("concat", [make_node("item", []), "two"])
    edit = EditRecord(path=(1, 0, 1), kind="insert", new=line)
    d2 = apply_edit(d, edit)
    aux2, _ = resolve_incremental(d2, aux, edit)
    full = resolve_full(d2)
    assert tables_equal(aux2, full)
    # the extra line moved the later section across a page boundary
    assert aux2.entries["sec:t"].page == full.entries["sec:t"].page


def test_incremental_leaf_to_figure_shifts_pages():
    d = doc_of(*[f"p{i}" for i in range(39)], section("End", "sec:end"))
    aux = resolve_full(d)
    assert aux.entries["sec:end"].page == 1
    fig = make_node("figure", [make_node("image", ["x.png"])])
    edit = EditRecord(path=(0,), kind="replace", old="p0", new=fig)
    d2 = apply_edit(d, edit)
    aux2, _ = resolve_incremental(d2, aux, edit)
    assert tables_equal(aux2, resolve_full(d2))
    assert aux2.entries["sec:end"].page == 2


def test_parallel_resolve_identical_to_sequential():
    for seed in range(5):
        d = gen_document(GenParams(seed=seed), sections=7, refs_per_section=2)
        seq = resolve_full(d)
        par = resolve_full(d, parallel=True)
        assert seq.entries == par.entries
        assert seq.diagnostics == par.diagnostics


def test_locality_bound_for_content_edit():
    d = gen_document(GenParams(seed=4), sections=30, refs_per_section=2)
    aux = resolve_full(d)
    idx = next(i for i, b in enumerate(d.root.children) if isinstance(b, str))
    edit = EditRecord(path=(idx,), kind="replace", old=d.root.children[idx], new="tiny")
    d2 = apply_edit(d, edit)
    _, stats = resolve_incremental(d2, aux, edit)
    edited_size = count_nodes("tiny")
    assert stats.touched_nodes <= edited_size  # no labels changed, no refs recomputed
