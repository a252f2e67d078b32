import csv
import io

import pytest

from treedoc.bench import (
    EditScript,
    EditStep,
    StepError,
    run_full,
    run_incremental,
    write_csv,
)
from treedoc.corpus import GenParams, gen_document
from treedoc.nodes import Document, make_node


def small_doc(seed=0, sections=6):
    return gen_document(GenParams(seed=seed), sections=sections, refs_per_section=2)


def test_run_full_reports_all_phases():
    rep = run_full(small_doc(), trials=2, doc_id="d0")
    assert rep.mode == "full"
    assert rep.t_compiling > 0
    assert rep.t_rendering > 0
    assert rep.t_io > 0
    assert rep.trials == 2
    assert len(rep.samples) == 2
    assert rep.touched.touched_nodes == rep.touched.total_nodes


def test_run_full_empty_document():
    rep = run_full(Document(root=make_node("document", [])), trials=1)
    assert rep.touched.recomputed_refs == 0
    assert rep.touched.total_nodes == 1


def test_touched_counts_deterministic_across_runs():
    script = EditScript.of(["edit-text", "add-section", "relabel-reference"], seed=5)
    a = run_incremental(small_doc(), script, trials=1, verify=True)
    b = run_incremental(small_doc(), script, trials=1, verify=True)
    assert [r.touched for r in a] == [r.touched for r in b]


def test_incremental_io_is_zero_and_verified():
    script = EditScript.of(["edit-text", "add-figure", "move-block"], seed=1)
    reports = run_incremental(small_doc(1), script, trials=1, verify=True)
    assert len(reports) == 3
    for r in reports:
        assert r.mode == "incremental"
        assert r.t_io == 0.0
        assert r.t_compiling == 0.0
        assert r.touched.touched_nodes < r.touched.total_nodes


def test_relabel_step_recomputes_only_the_reference():
    reports = run_incremental(
        small_doc(3), EditScript.of(["relabel-reference"], seed=2), trials=1, verify=True
    )
    assert len(reports) == 1
    # the replaced reference subtree is two nodes; no labels changed
    assert reports[0].touched.touched_nodes <= 2
    assert reports[0].touched.recomputed_refs == 0


def test_empty_script_gives_empty_reports():
    assert run_incremental(small_doc(), EditScript(()), trials=1) == []


def test_inapplicable_step_raises_with_index():
    doc = Document(root=make_node("document", []))
    with pytest.raises(StepError):
        run_incremental(doc, EditScript.of(["relabel-reference"]), trials=1)


def test_unknown_step_kind_rejected():
    with pytest.raises(ValueError):
        EditStep("reticulate")


def test_csv_columns():
    rep = run_full(small_doc(), trials=2, doc_id="docX")
    buf = io.StringIO()
    write_csv([rep], buf)
    rows = list(csv.reader(io.StringIO(buf.getvalue())))
    assert rows[0] == [
        "doc_id",
        "mode",
        "trial",
        "t_compiling",
        "t_rendering",
        "t_io",
        "touched",
        "total",
    ]
    assert len(rows) == 3  # one per trial
    assert rows[1][0] == "docX"


def test_csv_incremental_step_folds_into_doc_id():
    script = EditScript.of(["edit-text"], seed=0)
    reports = run_incremental(small_doc(), script, trials=1)
    buf = io.StringIO()
    write_csv(reports, buf)
    rows = list(csv.reader(io.StringIO(buf.getvalue())))
    assert rows[1][0] == "doc/0:edit-text"
    assert rows[1][1] == "incremental"
