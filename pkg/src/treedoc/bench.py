"""Full-vs-incremental benchmark harness.

The time decomposition is t_compiling (LaTeX import of a pre-exported
source), t_rendering (reference resolution) and t_io (tmu write + read).
Reported values are means over the trials (default 3) after one
discarded warm-up; the monotonic clock does the timing.  Incremental
runs never touch the disk form, so t_io is zero by construction, and in
verification mode every step's table is asserted equal to a full
recompute.

Absolute times from external toolchains are out of scope here; the
harness reproduces the experiment's shape (full vs incremental cost and
the zero-IO property), not anyone's wall-clock numbers.
"""
from __future__ import annotations

import csv
import dataclasses
import time
from dataclasses import dataclass
from typing import Iterable, Optional

from treedoc.corpus import SplitMix64, derive_seed
from treedoc.exporter import export_latex
from treedoc.importer import import_latex
from treedoc.nodes import (
    Compound,
    Document,
    EditRecord,
    apply_edit,
    iter_with_paths,
    subtree_at,
)
from treedoc.resolver import (
    AuxTable,
    LayoutParams,
    TouchStats,
    resolve_full,
    resolve_incremental,
)
from treedoc.tmu import read_tmu, write_tmu

STEP_KINDS = ("edit-text", "add-section", "add-figure", "relabel-reference", "move-block")


@dataclass(frozen=True)
class EditStep:
    kind: str

    def __post_init__(self):
        if self.kind not in STEP_KINDS:
            raise ValueError(f"unknown step kind {self.kind!r}")


@dataclass(frozen=True)
class EditScript:
    steps: tuple[EditStep, ...]
    seed: int = 0

    @classmethod
    def of(cls, kinds: Iterable[str], seed: int = 0) -> "EditScript":
        return cls(tuple(EditStep(k) for k in kinds), seed)


@dataclass(frozen=True)
class BenchReport:
    doc_id: str
    mode: str  # "full" | "incremental"
    t_compiling: float
    t_rendering: float
    t_io: float
    touched: TouchStats
    trials: int
    step: str = ""
    samples: tuple[tuple[float, float, float], ...] = ()


class StepError(Exception):
    def __init__(self, index: int, message: str):
        super().__init__(f"script step {index}: {message}")
        self.index = index


def _text_leaf_paths(doc: Document) -> list[tuple]:
    out = []
    for path, node in iter_with_paths(doc.root):
        if not path or not isinstance(node, str):
            continue
        parent = subtree_at(doc.root, path[:-1])
        if isinstance(parent, Compound) and parent.label in ("document", "concat"):
            if node.strip() and not node.startswith("<"):
                out.append(path)
    return out


def _reference_paths(doc: Document) -> list[tuple]:
    return [
        path
        for path, node in iter_with_paths(doc.root)
        if isinstance(node, Compound) and node.label == "reference"
    ]


def make_step_edits(
    doc: Document, aux: AuxTable, step: EditStep, rng: SplitMix64, counter: int
) -> list[EditRecord]:
    """Concrete EditRecords for one script step against the current doc."""
    top = len(doc.root.children)
    if step.kind == "edit-text":
        paths = _text_leaf_paths(doc)
        if not paths:
            raise StepError(counter, "no text leaves to edit")
        path = paths[rng.below(len(paths))]
        old = subtree_at(doc.root, path)
        return [EditRecord(path=path, kind="replace", old=old, new=f"rewritten passage {counter}")]
    if step.kind == "add-section":
        idx = rng.below(top + 1)
        block = Compound(
            "concat",
            (
                Compound("section", (f"Inserted {counter}",)),
                Compound("label", (f"sec:new{counter}",)),
            ),
        )
        return [EditRecord(path=(idx,), kind="insert", new=block)]
    if step.kind == "add-figure":
        idx = rng.below(top + 1)
        block = Compound(
            "figure",
            (
                Compound(
                    "concat",
                    (
                        Compound("image", (f"new{counter}.png",)),
                        Compound("caption", (f"Inserted figure {counter}",)),
                        Compound("label", (f"fig:new{counter}",)),
                    ),
                ),
            ),
        )
        return [EditRecord(path=(idx,), kind="insert", new=block)]
    if step.kind == "relabel-reference":
        refs = _reference_paths(doc)
        labels = sorted(aux.entries)
        if not refs or not labels:
            raise StepError(counter, "no references to retarget")
        path = refs[rng.below(len(refs))]
        old = subtree_at(doc.root, path)
        new = Compound("reference", (labels[rng.below(len(labels))],))
        return [EditRecord(path=path, kind="replace", old=old, new=new)]
    # move-block: delete one top-level block, reinsert elsewhere
    if top < 2:
        raise StepError(counter, "too few blocks to move")
    src = rng.below(top)
    dst = rng.below(top - 1)
    block = doc.root.children[src]
    return [
        EditRecord(path=(src,), kind="delete", old=block),
        EditRecord(path=(dst,), kind="insert", new=block),
    ]


def _mean(values: list[float]) -> float:
    return sum(values) / len(values) if values else 0.0


def run_full(
    doc: Document,
    trials: int = 3,
    lp: LayoutParams = LayoutParams(),
    doc_id: str = "doc",
    parallel: bool = False,
) -> BenchReport:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    src = export_latex(doc)
    aux = resolve_full(doc, lp)
    if parallel:
        check = resolve_full(doc, lp, parallel=True)
        if check.entries != aux.entries or check.diagnostics != aux.diagnostics:
            raise AssertionError("parallel resolve diverged from sequential")
    filled = dataclasses.replace(doc, aux=aux)
    samples = []
    for trial in range(trials + 1):
        t0 = time.perf_counter()
        import_latex(src)
        t1 = time.perf_counter()
        aux = resolve_full(doc, lp, parallel=parallel)
        t2 = time.perf_counter()
        text = write_tmu(filled)
        read_tmu(text)
        t3 = time.perf_counter()
        if trial > 0:  # first pass is warm-up
            samples.append((t1 - t0, t2 - t1, t3 - t2))
    touched = TouchStats(aux._total_nodes, sum(1 for nb in aux._numbered if nb.event.kind == "ref"), aux._total_nodes)
    return BenchReport(
        doc_id,
        "full",
        _mean([s[0] for s in samples]),
        _mean([s[1] for s in samples]),
        _mean([s[2] for s in samples]),
        touched,
        trials,
        samples=tuple(samples),
    )


def run_incremental(
    doc: Document,
    script: EditScript,
    trials: int = 3,
    lp: LayoutParams = LayoutParams(),
    doc_id: str = "doc",
    verify: bool = False,
) -> list[BenchReport]:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = SplitMix64(derive_seed(script.seed, 23))
    aux = resolve_full(doc, lp)
    reports: list[BenchReport] = []
    counter = 0
    for si, step in enumerate(script.steps):
        try:
            edits = make_step_edits(doc, aux, step, rng, counter)
        except StepError:
            raise
        except Exception as exc:
            raise StepError(si, str(exc)) from exc
        counter += 1
        step_samples: list[tuple[float, float, float]] = []
        touched_total = 0
        refs_total = 0
        for edit in edits:
            new_doc = apply_edit(doc, edit)
            stats: Optional[TouchStats] = None
            new_aux: Optional[AuxTable] = None
            times = []
            for _ in range(trials + 1):
                t0 = time.perf_counter()
                new_aux, stats = resolve_incremental(new_doc, aux, edit, lp)
                times.append(time.perf_counter() - t0)
            times = times[1:]  # warm-up
            if verify:
                oracle = resolve_full(new_doc, lp)
                if new_aux.entries != oracle.entries or new_aux.diagnostics != oracle.diagnostics:
                    raise AssertionError(
                        f"incremental table diverged from full recompute at step {si}"
                    )
            touched_total += stats.touched_nodes
            refs_total += stats.recomputed_refs
            doc, aux = new_doc, new_aux
            step_samples.append((0.0, _mean(times), 0.0))
        total = aux._total_nodes
        reports.append(
            BenchReport(
                doc_id,
                "incremental",
                0.0,
                sum(s[1] for s in step_samples),
                0.0,  # no file round-trip happens on the incremental path
                TouchStats(touched_total, refs_total, total),
                trials,
                step=f"{si}:{step.kind}",
                samples=tuple(step_samples),
            )
        )
    return reports


def write_csv(reports: list[BenchReport], fp) -> None:
    w = csv.writer(fp)
    w.writerow(["doc_id", "mode", "trial", "t_compiling", "t_rendering", "t_io", "touched", "total"])
    for r in reports:
        doc_id = f"{r.doc_id}/{r.step}" if r.step else r.doc_id
        samples = r.samples or ((r.t_compiling, r.t_rendering, r.t_io),)
        for trial, (tc, tr, tio) in enumerate(samples, start=1):
            w.writerow(
                [
                    doc_id,
                    r.mode,
                    trial,
                    f"{tc:.6f}",
                    f"{tr:.6f}",
                    f"{tio:.6f}",
                    r.touched.touched_nodes,
                    r.touched.total_nodes,
                ]
            )
