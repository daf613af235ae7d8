import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pmx.errors import BadToken, UnbalancedDelimiter, Unprintable
from pmx.evaluator import BUILTINS
from pmx.sexpr import (
    NIL,
    Pair,
    StructInstance,
    StructTag,
    make_list,
    print_value,
    read_all,
    read_one,
    read_spanned,
    sym,
    to_pylist,
    values_equal,
)

POINT = StructTag("point", 2)


def test_read_list():
    assert values_equal(read_one("(1 2 3)"), make_list([1, 2, 3]))


def test_quote_sugar():
    assert values_equal(read_one("'cart"), make_list([sym("quote"), sym("cart")]))


def test_match_clause_reads_as_nested_lists():
    datum = read_one("(match n [(list 'cart x y) x])")
    items = to_pylist(datum)
    assert items[0] is sym("match")
    clause = to_pylist(items[2])
    pattern = to_pylist(clause[0])
    assert pattern[0] is sym("list")
    assert values_equal(pattern[1], make_list([sym("quote"), sym("cart")]))


def test_atoms():
    assert read_all("#t #f 1 1.0 -2 1e3 \"a\\nb\" |two words|") == [
        True, False, 1, 1.0, -2, 1000.0, "a\nb", sym("two words")
    ]
    assert isinstance(read_one("1.0"), float)
    assert isinstance(read_one("12"), int)


def test_comments_and_brackets():
    assert values_equal(read_one("; skip\n[a (b) ; trailing\n]"), make_list([sym("a"), make_list([sym("b")])]))


def test_dotted_pair():
    assert values_equal(read_one("(1 . 2)"), Pair(1, 2))
    assert values_equal(read_one("(1 2 . ())"), make_list([1, 2]))


@pytest.mark.parametrize("text", ["(1 2", "(]", ")", "\"open"])
def test_unbalanced(text):
    with pytest.raises(UnbalancedDelimiter) as info:
        read_all(text)
    assert info.value.span is not None


@pytest.mark.parametrize("text", ["(1 . 2 3)", "#q", "(. 1)"])
def test_bad_token(text):
    with pytest.raises(BadToken) as info:
        read_all(text)
    assert info.value.span is not None


def test_print_examples():
    assert print_value(make_list([1, 2])) == "(1 2)"
    assert print_value(sym("yes")) == "yes"
    assert print_value(StructInstance(POINT, (1, 2))) == "#(struct point 1 2)"
    assert print_value(math.inf) == "+inf.0"
    assert print_value(2.0) == "2.0"


def test_struct_reads_back():
    v = read_one("#(struct point 1 2)")
    assert values_equal(v, StructInstance(POINT, (1, 2)))


def test_callable_is_unprintable():
    with pytest.raises(Unprintable):
        print_value(make_list([BUILTINS["add1"]]))


def test_equality_examples():
    assert values_equal(make_list([1, 2]), make_list([1, 2]))
    assert not values_equal(sym("cart"), sym("polar"))
    assert values_equal(StructInstance(POINT, (1, 2)), StructInstance(POINT, (1, 2)))
    assert not values_equal(StructInstance(POINT, (1, 2)), StructInstance(StructTag("other", 2), (1, 2)))
    assert not values_equal(1, 1.0)
    assert not values_equal(1, True)
    assert values_equal(math.nan, math.nan)
    f = BUILTINS["add1"]
    assert values_equal(f, f) and not values_equal(f, BUILTINS["sub1"])


def test_struct_arity_checked():
    with pytest.raises(ValueError):
        StructInstance(POINT, (1,))


def test_spans_nest():
    text = "(a (b c) \"d\") 'e"
    for top in read_spanned(text):
        for node in top.walk():
            assert 0 <= node.span.start <= node.span.end <= len(text)
            for child in node.children:
                assert node.span.start <= child.span.start <= child.span.end <= node.span.end


symbols = st.text(alphabet="abcxyz-?!<>=*/+|\\ ().'\"", min_size=1, max_size=6).map(sym)
atoms = st.one_of(
    st.integers(),
    st.floats(allow_nan=True),
    st.booleans(),
    st.text(max_size=6),
    symbols,
    st.just(NIL),
)


def _compound(children):
    return st.one_of(
        st.lists(children, max_size=4).map(make_list),
        st.tuples(children, children).map(lambda t: Pair(*t)),
        st.tuples(children, children).map(lambda t: StructInstance(POINT, t)),
    )


values = st.recursive(atoms, _compound, max_leaves=20)


@settings(max_examples=300)
@given(values)
def test_round_trip(v):
    data = read_all(print_value(v))
    assert len(data) == 1
    assert values_equal(data[0], v)


@settings(max_examples=200)
@given(values, values, values)
def test_equality_is_an_equivalence(a, b, c):
    assert values_equal(a, a)
    assert values_equal(a, b) == values_equal(b, a)
    if values_equal(a, b) and values_equal(b, c):
        assert values_equal(a, c)


@settings(max_examples=100)
@given(values)
def test_equal_to_reread_copy(v):
    copy = read_one(print_value(v))
    assert values_equal(v, copy) and values_equal(copy, v)


def test_deep_list_equality_is_iterative():
    deep = NIL
    for _ in range(50_000):
        deep = Pair(deep, NIL)
    other = NIL
    for _ in range(50_000):
        other = Pair(other, NIL)
    assert values_equal(deep, other)
