"""Command-line entry point.

Subcommands are thin adapters over the library; results are identical to
calling the module functions directly.  ``-`` means stdin/stdout for any
file argument, seeds are always explicit flags, and report paths that
write CSV also render a matplotlib figure next to it (suppress with
--no-plot).  Exit status: 0 success, 1 the inputs carried document
faults (outputs are still written), 2 usage errors.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from treedoc import bench as bench_mod
from treedoc.canonical import canonicalize
from treedoc.corpus import GenParams, gen_document, write_corpus
from treedoc.exporter import export_latex
from treedoc.importer import import_latex, import_math, source_kind
from treedoc.macros import MacroTable
from treedoc.metrics import (
    ScoreInput,
    class_multiplicity,
    score_item,
    score_merge,
    sexp_tokens,
    tex_tokens,
    tmu_tokens,
    token_entropy,
)
from treedoc.nodes import Compound, Document, EditRecord, apply_edit, subtree_at
from treedoc.resolver import LayoutParams, resolve_full, resolve_incremental
from treedoc.sexp import read_sexp, write_sexp
from treedoc.tmu import read_tmu, write_node, write_tmu


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, "r", encoding="utf-8") as f:
        return f.read()


def _write(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def _style(args) -> MacroTable | None:
    if getattr(args, "style", None):
        return MacroTable.from_json(_read(args.style))
    return None


def _emit_diags(diags, as_json: bool) -> None:
    for d in diags:
        if as_json:
            sys.stderr.write(d.to_json() + "\n")
        else:
            sys.stderr.write(
                f"{d.code.value} at {list(d.anchor)} bytes {list(d.span)}: {d.message} ({d.recovery})\n"
            )


def _load_tree(path: str, text: str, style: MacroTable | None = None):
    """Returns (document_or_node, diagnostics) for any input format."""
    stripped = text.lstrip()
    if path.endswith(".tmu") or stripped.startswith("<"):
        return read_tmu(text), []
    if path.endswith(".sexp") or stripped.startswith("(") or stripped.startswith('"'):
        node = read_sexp(text)
        if isinstance(node, Compound) and node.label == "document":
            return Document(root=node), []
        return node, []
    if source_kind(text) == "math":
        return import_math(text, style)
    return import_latex(text, style)


def _lp(args) -> LayoutParams:
    return LayoutParams(args.lines_per_page, args.figure_lines)


def _add_lp(p):
    p.add_argument("--lines-per-page", type=int, default=40)
    p.add_argument("--figure-lines", type=int, default=10)


def _plot_path(args) -> str | None:
    if getattr(args, "no_plot", False):
        return None
    if getattr(args, "plot", None):
        return args.plot
    csv_path = getattr(args, "csv", None)
    if csv_path and csv_path != "-":
        stem = csv_path[:-4] if csv_path.endswith(".csv") else csv_path
        return stem + ".png"
    return None


# -- subcommands -------------------------------------------------------------


def cmd_import(args) -> int:
    src = _read(args.input)
    style = _style(args)
    if source_kind(src) == "math":
        node, diags = import_math(src, style)
        doc = Document(root=Compound("document", (node,)))
        sexp_text = write_sexp(node) + "\n"
        tmu_text = write_node(node) + "\n"
    else:
        doc, diags = import_latex(src, style)
        sexp_text = write_sexp(doc.root) + "\n"
        tmu_text = write_tmu(doc)
    wrote = False
    if args.sexp:
        _write(args.sexp, sexp_text)
        wrote = True
    if args.tmu:
        _write(args.tmu, tmu_text)
        wrote = True
    if args.out:
        _write(args.out, tmu_text if args.out.endswith(".tmu") else sexp_text)
        wrote = True
    if not wrote:
        sys.stdout.write(sexp_text)
    _emit_diags(diags, args.json)
    return 1 if diags else 0


def cmd_export(args) -> int:
    style = _style(args)
    tree, diags = _load_tree(args.input, _read(args.input), style)
    _write(args.out, export_latex(tree, style=style))
    _emit_diags(diags, args.json)
    return 1 if diags else 0


def cmd_canon(args) -> int:
    text = _read(args.input)
    tree, diags = _load_tree(args.input, text)
    if isinstance(tree, Document):
        root = canonicalize(tree.root)
        out = (
            write_tmu(dataclasses.replace(tree, root=root))
            if args.format == "tmu"
            else write_sexp(root) + "\n"
        )
    else:
        node = canonicalize(tree)
        out = write_node(node) + "\n" if args.format == "tmu" else write_sexp(node) + "\n"
    _write(args.out, out)
    _emit_diags(diags, args.json)
    return 1 if diags else 0


def cmd_sexp(args) -> int:
    tree, diags = _load_tree(args.input, _read(args.input))
    node = tree.root if isinstance(tree, Document) else tree
    _write(args.out, write_sexp(node) + "\n")
    _emit_diags(diags, args.json)
    return 1 if diags else 0


def cmd_tmu(args) -> int:
    tree, diags = _load_tree(args.input, _read(args.input))
    if isinstance(tree, Document):
        _write(args.out, write_tmu(tree))
    else:
        _write(args.out, write_node(tree) + "\n")
    _emit_diags(diags, args.json)
    return 1 if diags else 0


def cmd_resolve(args) -> int:
    tree, diags = _load_tree(args.input, _read(args.input), _style(args))
    doc = tree if isinstance(tree, Document) else Document(root=Compound("document", (tree,)))
    aux = resolve_full(doc, _lp(args))
    doc = dataclasses.replace(doc, aux=aux)
    if args.out:
        _write(args.out, write_tmu(doc))
    payload = {
        name: {"number": rv.number, "page": rv.page, "kind": rv.kind}
        for name, rv in sorted(aux.entries.items())
    }
    _write(args.aux_json, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    all_diags = list(diags) + list(aux.diagnostics)
    _emit_diags(all_diags, args.json)
    return 1 if all_diags else 0


def _edit_from_json(doc: Document, payload: dict) -> EditRecord:
    path = tuple(int(i) for i in payload["path"])
    kind = payload["kind"]
    old = read_sexp(payload["old_sexp"]) if "old_sexp" in payload else None
    if old is None and kind in ("replace", "delete"):
        old = subtree_at(doc.root, path)
    new = read_sexp(payload["new_sexp"]) if "new_sexp" in payload else None
    return EditRecord(path=path, kind=kind, old=old, new=new)


def cmd_edit(args) -> int:
    tree, diags = _load_tree(args.input, _read(args.input))
    doc = tree if isinstance(tree, Document) else Document(root=Compound("document", (tree,)))
    lp = _lp(args)
    aux = resolve_full(doc, lp)
    edit = _edit_from_json(doc, json.loads(_read(args.edit)))
    new_doc = apply_edit(doc, edit)
    new_aux, stats = resolve_incremental(new_doc, aux, edit, lp)
    new_doc = dataclasses.replace(new_doc, aux=new_aux)
    if args.out:
        _write(args.out, write_tmu(new_doc))
    sys.stdout.write(
        json.dumps(
            {
                "touched_nodes": stats.touched_nodes,
                "recomputed_refs": stats.recomputed_refs,
                "total_nodes": stats.total_nodes,
            },
            sort_keys=True,
        )
        + "\n"
    )
    all_diags = list(diags) + list(new_aux.diagnostics)
    _emit_diags(all_diags, args.json)
    return 1 if all_diags else 0


def cmd_merge(args) -> int:
    from treedoc.merge import merge_documents

    style = _style(args)
    lead_tree, d1 = _load_tree(args.lead, _read(args.lead), style)
    fol_tree, d2 = _load_tree(args.follower, _read(args.follower))
    if not isinstance(lead_tree, Document) or not isinstance(fol_tree, Document):
        raise SystemExit("merge expects two documents")
    if style is not None:
        lead_tree = dataclasses.replace(lead_tree, style=style)
    merged, d3 = merge_documents(lead_tree, fol_tree)
    aux = resolve_full(merged, _lp(args))
    merged = dataclasses.replace(merged, aux=aux)
    if args.out.endswith(".tex"):
        _write(args.out, export_latex(merged, style=merged.style))
    else:
        _write(args.out, write_tmu(merged))
    all_diags = list(d1) + list(d2) + list(d3) + list(aux.diagnostics)
    _emit_diags(all_diags, args.json)
    return 1 if all_diags else 0


def cmd_lint(args) -> int:
    src = _read(args.input)
    doc, diags = import_latex(src, _style(args))
    aux = resolve_full(doc, _lp(args))
    all_diags = list(diags) + list(aux.diagnostics)
    if args.out:
        _write(args.out, write_tmu(dataclasses.replace(doc, aux=aux)))
    _emit_diags(all_diags, args.json)
    if not args.json:
        sys.stdout.write(f"{len(all_diags)} diagnostic(s)\n")
    return 1 if all_diags else 0


def cmd_corpus(args) -> int:
    params = GenParams(seed=args.seed, max_depth=args.max_depth, count=args.count)
    if args.out == "-":
        write_corpus(params, sys.stdout)
    else:
        with open(args.out, "w", encoding="utf-8", newline="\n") as f:
            write_corpus(params, f)
    return 0


def _corpus_records(path: str) -> list[dict]:
    out = []
    for line in _read(path).splitlines():
        if line.strip():
            out.append(json.loads(line))
    return out


def cmd_entropy(args) -> int:
    records = _corpus_records(args.corpus)
    tex_streams = [tex_tokens(v) for rec in records for v in rec["latex_variants"]]
    tmu_streams = [tmu_tokens(rec["tmu"]) for rec in records]
    sexp_streams = [sexp_tokens(rec["canonical_sexp"]) for rec in records]
    reports = [
        token_entropy(tex_streams, args.order, "tex"),
        token_entropy(tmu_streams, args.order, "tmu"),
        token_entropy(sexp_streams, args.order, "sexp"),
    ]
    mult = class_multiplicity(records)
    payload = {
        "entropy": [dataclasses.asdict(r) for r in reports],
        "multiplicity": {k: dataclasses.asdict(v) for k, v in mult.items()},
    }
    sys.stdout.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    if args.csv:
        lines = ["format,order,bits_per_token,vocab,tokens"]
        for r in reports:
            lines.append(f"{r.format},{r.order},{r.bits_per_token:.9f},{r.vocab_size},{r.token_count}")
        _write(args.csv, "\n".join(lines) + "\n")
    plot = _plot_path(args)
    if plot:
        from treedoc.plotting import render_entropy_figure

        render_entropy_figure(reports, plot)
    return 0


def cmd_score(args) -> int:
    try_index: object = 2 if args.second else 1
    if args.fail:
        try_index = "fail"
    s = ScoreInput(
        tokens=args.tokens,
        correct=args.correct,
        try_index=try_index,
        e_ref=args.eref,
        e_sty=args.esty,
    )
    value = score_item(s) if args.kind == "item" else score_merge(s)
    sys.stdout.write(f"{value}\n")
    return 0


def cmd_bench(args) -> int:
    params = GenParams(seed=args.seed)
    doc = gen_document(params, sections=args.sections, refs_per_section=args.refs)
    lp = _lp(args)
    reports: list[bench_mod.BenchReport] = []
    if args.mode in ("full", "both"):
        reports.append(
            bench_mod.run_full(
                doc, trials=args.trials, lp=lp, doc_id=f"synthetic-{args.seed}", parallel=args.parallel
            )
        )
    if args.mode in ("incremental", "both"):
        kinds = args.script.split(",") if args.script else ["edit-text", "add-section", "relabel-reference"]
        script = bench_mod.EditScript.of(kinds, seed=args.seed)
        reports.extend(
            bench_mod.run_incremental(
                doc, script, trials=args.trials, lp=lp, doc_id=f"synthetic-{args.seed}", verify=args.verify
            )
        )
    if args.csv:
        if args.csv == "-":
            bench_mod.write_csv(reports, sys.stdout)
        else:
            with open(args.csv, "w", encoding="utf-8", newline="") as f:
                bench_mod.write_csv(reports, f)
    else:
        for r in reports:
            sys.stdout.write(
                f"{r.doc_id} {r.mode} {r.step or '-'} compiling={r.t_compiling:.6f}s "
                f"rendering={r.t_rendering:.6f}s io={r.t_io:.6f}s "
                f"touched={r.touched.touched_nodes}/{r.touched.total_nodes}\n"
            )
    plot = _plot_path(args)
    if plot:
        from treedoc.plotting import render_bench_figure

        render_bench_figure(reports, plot)
    return 0


# -- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="treedoc", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, style=False):
        sp.add_argument("--json", action="store_true", help="diagnostics as JSON-lines on stderr")
        if style:
            sp.add_argument("--style", help="macro table JSON (doc-style)")

    sp = sub.add_parser("import", help="LaTeX -> tree (sexp/tmu)")
    sp.add_argument("input")
    sp.add_argument("--out", help="output path (.tmu or .sexp)")
    sp.add_argument("--sexp", help="write S-expression form here")
    sp.add_argument("--tmu", help="write tmu form here")
    common(sp, style=True)
    sp.set_defaults(func=cmd_import)

    sp = sub.add_parser("export", help="tree -> LaTeX")
    sp.add_argument("input")
    sp.add_argument("--out", default="-")
    common(sp, style=True)
    sp.set_defaults(func=cmd_export)

    sp = sub.add_parser("canon", help="canonicalize a tree")
    sp.add_argument("input")
    sp.add_argument("--out", default="-")
    sp.add_argument("--format", choices=("sexp", "tmu"), default="sexp")
    common(sp)
    sp.set_defaults(func=cmd_canon)

    sp = sub.add_parser("sexp", help="any input -> S-expression")
    sp.add_argument("input")
    sp.add_argument("--out", default="-")
    common(sp)
    sp.set_defaults(func=cmd_sexp)

    sp = sub.add_parser("tmu", help="any input -> tmu")
    sp.add_argument("input")
    sp.add_argument("--out", default="-")
    common(sp)
    sp.set_defaults(func=cmd_tmu)

    sp = sub.add_parser("resolve", help="number and resolve references")
    sp.add_argument("input")
    sp.add_argument("--out", help="write tmu with associate lines")
    sp.add_argument("--aux-json", default="-", help="write the table as JSON here")
    _add_lp(sp)
    common(sp, style=True)
    sp.set_defaults(func=cmd_resolve)

    sp = sub.add_parser("edit", help="apply one edit and resolve incrementally")
    sp.add_argument("input")
    sp.add_argument("--edit", required=True, help="edit record JSON file")
    sp.add_argument("--out", help="write the edited tmu here")
    _add_lp(sp)
    common(sp)
    sp.set_defaults(func=cmd_edit)

    sp = sub.add_parser("merge", help="merge follower proofs into the lead document")
    sp.add_argument("lead")
    sp.add_argument("follower")
    sp.add_argument("--out", default="-")
    _add_lp(sp)
    common(sp, style=True)
    sp.set_defaults(func=cmd_merge)

    sp = sub.add_parser("lint", help="diagnose faults without aborting")
    sp.add_argument("input")
    sp.add_argument("--out", help="still write the partial tree here")
    _add_lp(sp)
    common(sp, style=True)
    sp.set_defaults(func=cmd_lint)

    sp = sub.add_parser("corpus", help="emit the seeded formula corpus (JSON-lines)")
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--count", type=int, default=1000)
    sp.add_argument("--max-depth", type=int, default=6)
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_corpus)

    sp = sub.add_parser("entropy", help="token entropy + multiplicity report")
    sp.add_argument("corpus", help="corpus JSON-lines file")
    sp.add_argument("--order", type=int, choices=(1, 2), default=2)
    sp.add_argument("--csv", help="write the report CSV here")
    sp.add_argument("--plot", help="figure path (default: next to the CSV)")
    sp.add_argument("--no-plot", action="store_true")
    sp.set_defaults(func=cmd_entropy)

    sp = sub.add_parser("score", help="task scoring formulas")
    sp.add_argument("--kind", choices=("item", "merge"), required=True)
    sp.add_argument("--tokens", type=int, required=True)
    sp.add_argument("--correct", action="store_true")
    sp.add_argument("--second", action="store_true", help="success on the second try")
    sp.add_argument("--fail", action="store_true", help="failed within two tries")
    sp.add_argument("--eref", type=int, default=0)
    sp.add_argument("--esty", type=int, default=0)
    sp.set_defaults(func=cmd_score)

    sp = sub.add_parser("bench", help="full vs incremental benchmark")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--sections", type=int, default=100)
    sp.add_argument("--refs", type=int, default=2)
    sp.add_argument("--trials", type=int, default=3)
    sp.add_argument("--mode", choices=("full", "incremental", "both"), default="both")
    sp.add_argument("--script", help="comma list of step kinds")
    sp.add_argument("--verify", action="store_true", help="assert incremental == full per step")
    sp.add_argument("--parallel", action="store_true", help="use the parallel resolve path (identical tables)")
    sp.add_argument("--csv", help="write per-trial CSV here")
    sp.add_argument("--plot", help="figure path (default: next to the CSV)")
    sp.add_argument("--no-plot", action="store_true")
    _add_lp(sp)
    sp.set_defaults(func=cmd_bench)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"treedoc: {exc}\n")
        return 2
    except Exception as exc:
        from treedoc.exporter import ExportError
        from treedoc.nodes import TreeError
        from treedoc.sexp import SexpParseError
        from treedoc.tmu import TmuParseError

        if isinstance(exc, (SexpParseError, TmuParseError, ExportError, TreeError, ValueError)):
            sys.stderr.write(f"treedoc: {exc}\n")
            return 2
        raise


if __name__ == "__main__":
    sys.exit(main())
