"""Serialization round-trip identity at scale: >= 10^4 generated trees."""
import dataclasses

from treedoc.corpus import CATEGORIES, GenParams, gen_formula
from treedoc.nodes import Document, make_node
from treedoc.resolver import AuxTable
from treedoc.sexp import read_sexp, write_sexp
from treedoc.tmu import read_tmu, write_tmu

CASES = 10_000


def test_ten_thousand_roundtrips_both_formats():
    checked = 0
    for i in range(CASES // len(CATEGORIES)):
        for cat in CATEGORIES:
            n = gen_formula(GenParams(seed=i, max_depth=4), cat)
            assert read_sexp(write_sexp(n)) == n
            doc = dataclasses.replace(
                Document(root=make_node("document", [n])), aux=AuxTable()
            )
            assert read_tmu(write_tmu(doc)).root == doc.root
            checked += 1
    assert checked == CASES
