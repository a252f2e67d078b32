from hypothesis import given, strategies as st

from treedoc.tokenizer import (
    CHAR,
    COMMENT,
    CONTROL_SYMBOL,
    CONTROL_WORD,
    ENV_BEGIN,
    ENV_END,
    GROUP_CLOSE,
    GROUP_OPEN,
    MATH_SHIFT,
    SUPERSCRIPT,
    tokenize,
)


def kinds(src):
    return [t.kind for t in tokenize(src)]


def test_frac_example():
    assert kinds(r"\frac{1}{2}") == [
        CONTROL_WORD,
        GROUP_OPEN,
        CHAR,
        GROUP_CLOSE,
        GROUP_OPEN,
        CHAR,
        GROUP_CLOSE,
    ]


def test_superscript_example():
    assert kinds("x^2") == [CHAR, SUPERSCRIPT, CHAR]


def test_comment_then_char():
    toks = tokenize("% c\nx")
    assert [t.kind for t in toks] == [COMMENT, CHAR]
    assert toks[0].text == "% c\n"
    assert toks[1].text == "x"


def test_environment_tokens():
    toks = tokenize(r"\begin{thm}x\end{thm}")
    assert [t.kind for t in toks] == [ENV_BEGIN, CHAR, ENV_END]
    assert toks[0].env_name == "thm"
    assert toks[2].env_name == "thm"


def test_control_symbol_and_math_shift():
    toks = tokenize(r"$\{a\}$")
    assert [t.kind for t in toks] == [MATH_SHIFT, CONTROL_SYMBOL, CHAR, CONTROL_SYMBOL, MATH_SHIFT]


def test_offsets_strictly_increase():
    toks = tokenize(r"\alpha $x^2$ % tail")
    offsets = [t.offset for t in toks]
    assert offsets == sorted(offsets)
    assert len(set(offsets)) == len(offsets)


def test_offsets_are_bytes_for_multibyte_text():
    toks = tokenize("⟨x")
    assert toks[0].offset == 0
    assert toks[1].offset == len("⟨".encode("utf-8"))


@given(st.text(alphabet="a\\{}$^_&%~ \n#[]()begind", max_size=60))
def test_lossless(src):
    assert "".join(t.text for t in tokenize(src)) == src


@given(st.text(max_size=60))
def test_lossless_arbitrary(src):
    assert "".join(t.text for t in tokenize(src)) == src
