import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atcdp.errors import ParseError
from atcdp.markup import LABELS, parse_markup, render_markup, strip_markup
from atcdp.textnorm import MAX_PASSES, Rule, RuleTable, default_rules, load_rules, normalize_text, verbalize_digits
from conftest import NORMALIZATION_ROWS


def test_bundle_contains_examples():
    t = default_rules()
    assert t.lookup("niner") == "nine"
    assert t.lookup("take off") == "takeoff"


def test_bundle_rows_present():
    t = default_rules()
    for left, right in NORMALIZATION_ROWS:
        assert t.lookup(left) == right, left


def test_duplicate_rejected():
    doc = "klm\tk_l_m\tairline_designator\nKLM\tk_l_m\tairline_designator\n"
    with pytest.raises(ParseError) as ei:
        load_rules(doc)
    assert ei.value.line_no == 2


@pytest.mark.parametrize("doc", [
    "niner\t\ticao_alphabet\n",
    "niner\tnine\n",
    "niner\tNine\ticao_alphabet\n",
    "niner\tnine\tweather\n",
])
def test_bad_rule_lines(doc):
    with pytest.raises(ParseError):
        load_rules(doc)


@pytest.mark.parametrize("text,expected", [
    ("niner", "nine"),
    ("klm", "k_l_m"),
    ("KLM", "k_l_m"),
    ("K L M", "k_l_m"),
    ("takeoff", "takeoff"),
    ("Cleared for Take Off", "cleared for takeoff"),
    ("clear for takeoff", "cleared for takeoff"),
    ("[unk] Oskar Kilo", "[unk] oscar kilo"),
    ("", ""),
])
def test_normalize(text, expected):
    assert normalize_text(text) == expected


@pytest.mark.parametrize("text,expected", [
    ("0", "zero"),
    ("134", "one three four"),
    ("runway one four", "runway one four"),
    ("FL120", "FL one two zero"),
    ("[#value]runway 14[/#value]", "[#value]runway one four[/#value]"),
])
def test_verbalize(text, expected):
    assert verbalize_digits(text) == expected


def test_markup_moves_with_rewrite():
    assert normalize_text("[#command]Take Off[/#command] now") == "[#command]takeoff[/#command] now"


def test_markup_across_rewrite_stays_nested():
    out = normalize_text("[#value]x take[/#value] [#command]off y[/#command]")
    parse_markup(out)
    assert strip_markup(out) == "x takeoff y"


def test_fixed_point_bounded():
    # a cycle never settles; the pass limit stops it
    table = RuleTable([Rule(("a",), ("b",), "common_expression"), Rule(("b",), ("a",), "common_expression")])
    assert normalize_text("a", table) == ("a" if MAX_PASSES % 2 == 0 else "b")


def test_chain_reaches_fixed_point():
    table = RuleTable([Rule(("a",), ("b",), "common_expression"), Rule(("b",), ("c",), "common_expression")])
    assert normalize_text("a b", table) == "c c"


def test_longest_match_first():
    table = RuleTable([Rule(("k",), ("kilo",), "icao_alphabet"), Rule(("k", "l", "m"), ("k_l_m",), "airline_designator")])
    assert normalize_text("k l m k", table) == "k_l_m kilo"


VOCAB = sorted({w for left, _ in NORMALIZATION_ROWS for w in left.split()} | {"runway", "[unk]", "X", "7"})


@st.composite
def texts(draw):
    tokens = draw(st.lists(st.sampled_from(VOCAB), max_size=12))
    spans = []
    i = 0
    from atcdp.markup import EntitySpan

    while i < len(tokens):
        if draw(st.integers(0, 3)) == 0:
            j = draw(st.integers(i + 1, len(tokens)))
            spans.append(EntitySpan(draw(st.sampled_from(LABELS)), i, j))
            i = j
        else:
            i += 1
    return render_markup(tokens, spans)


@settings(max_examples=300, deadline=None)
@given(texts(), st.booleans())
def test_idempotent(text, digits):
    once = normalize_text(text, digits=digits)
    assert normalize_text(once, digits=digits) == once


@settings(max_examples=300, deadline=None)
@given(texts(), st.booleans())
def test_strip_commutes(text, digits):
    out = normalize_text(text, digits=digits)
    parse_markup(out)  # still well-formed
    assert strip_markup(out) == normalize_text(strip_markup(text), digits=digits)


@settings(max_examples=100, deadline=None)
@given(texts())
def test_output_lowercase(text):
    for w in strip_markup(normalize_text(text)).split():
        assert w == w.lower()
