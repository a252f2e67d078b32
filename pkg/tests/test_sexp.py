import pytest
from hypothesis import given, strategies as st

from treedoc.nodes import Compound, make_node
from treedoc.sexp import SexpParseError, read_sexp, write_sexp

LISTING1 = (
    '(math (concat (big "int") (rsub "a") (rsup "b") "f" (around* "(" "x" ")")'
    ' "<mathd>x=" (around* "<nobracket>" (around* "[" (concat "F"'
    ' (around* "(" "x" ")")) "]") "|") (rsub "a") (rsup "b")))'
)


def listing1_tree():
    return make_node(
        "math",
        [
            make_node(
                "concat",
                [
                    make_node("big", ["int"]),
                    make_node("rsub", ["a"]),
                    make_node("rsup", ["b"]),
                    "f",
                    make_node("around*", ["(", "x", ")"]),
                    "<mathd>x=",
                    make_node(
                        "around*",
                        [
                            "<nobracket>",
                            make_node(
                                "around*",
                                ["[", make_node("concat", ["F", make_node("around*", ["(", "x", ")"])]), "]"],
                            ),
                            "|",
                        ],
                    ),
                    make_node("rsub", ["a"]),
                    make_node("rsup", ["b"]),
                ],
            )
        ],
    )


def test_write_fig4_fraction():
    assert write_sexp(make_node("frac", ["1", "2"])) == '(frac "1" "2")'


def test_write_listing1_exact():
    assert write_sexp(listing1_tree()) == LISTING1


def test_quote_escaping():
    assert write_sexp('a"b') == '"a\\"b"'
    assert read_sexp('"a\\"b"') == 'a"b'
    assert write_sexp("a\\b\nc") == '"a\\\\b\\nc"'


def test_read_simple():
    assert read_sexp('(frac "1" "2")') == make_node("frac", ["1", "2"])
    assert read_sexp('"x"') == "x"


def test_read_errors_carry_offsets():
    with pytest.raises(SexpParseError) as e:
        read_sexp('(frac "1"')
    assert e.value.offset == 9
    with pytest.raises(SexpParseError):
        read_sexp('(frac "1" "2") junk')
    with pytest.raises(SexpParseError):
        read_sexp('"unterminated')
    with pytest.raises(SexpParseError):
        read_sexp(")")


_leaf = st.text(alphabet='ab"\\\n()<> |', max_size=8)
_node = st.recursive(
    _leaf,
    lambda kids: st.one_of(
        st.builds(lambda a, b: Compound("frac", (a, b)), kids, kids),
        st.builds(lambda xs: Compound("concat", tuple(xs)), st.lists(kids, max_size=4)),
        st.builds(lambda a: Compound("rsub", (a,)), kids),
    ),
    max_leaves=24,
)


@given(_node)
def test_roundtrip(n):
    assert read_sexp(write_sexp(n)) == n


@given(_node, _node)
def test_injective_on_distinct_trees(a, b):
    if a != b:
        assert write_sexp(a) != write_sexp(b)
