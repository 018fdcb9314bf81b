import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from addrner.bio import (
    TAGS,
    Corpus,
    EntitySpan,
    Tag,
    TaggedSentence,
    dumps_corpus,
    extract_entities,
    loads_corpus,
    read_corpus,
    validate_bio,
    write_corpus,
)
from addrner.errors import BioValidationError, CorpusFormatError, UnknownTagError

from conftest import tagged_sentences

B, I = Tag.begin, Tag.inside


def test_nine_tags_in_fixed_order():
    assert [t.value for t in TAGS] == [
        "O", "B-Street", "I-Street", "B-Housenumber", "I-Housenumber",
        "B-Municipality", "I-Municipality", "B-Postcode", "I-Postcode",
    ]
    assert [t.index for t in TAGS] == list(range(9))


class TestValidateBio:
    def test_b_then_i(self):
        assert validate_bio([Tag.B_STREET, Tag.I_STREET]) is None

    def test_i_without_b(self):
        assert validate_bio([Tag.O, Tag.I_STREET]) == 1

    def test_street_address_row(self):
        assert validate_bio([Tag.B_MUNICIPALITY, Tag.B_STREET, Tag.B_HOUSENUMBER]) is None

    def test_i_at_start(self):
        assert validate_bio([Tag.I_POSTCODE]) == 0

    def test_type_change_inside(self):
        assert validate_bio([Tag.B_STREET, Tag.I_MUNICIPALITY]) == 1

    def test_empty(self):
        assert validate_bio([]) is None


class TestExtractEntities:
    def test_noisy_lowercase_example(self):
        s = TaggedSentence(
            ("Ďalšie", "bauerová", "44", "Košice"),
            (Tag.O, Tag.B_STREET, Tag.B_HOUSENUMBER, Tag.B_MUNICIPALITY),
        )
        assert [tuple(sp) for sp in extract_entities(s)] == [
            ("Street", 1, 1), ("Housenumber", 2, 2), ("Municipality", 3, 3),
        ]

    def test_all_o(self):
        assert extract_entities([Tag.O, Tag.O]) == []

    def test_two_token_postcode(self):
        assert extract_entities([Tag.B_POSTCODE, Tag.I_POSTCODE]) == [EntitySpan("Postcode", 0, 1)]

    def test_adjacent_same_type(self):
        spans = extract_entities([Tag.B_MUNICIPALITY, Tag.B_MUNICIPALITY, Tag.I_MUNICIPALITY])
        assert spans == [EntitySpan("Municipality", 0, 0), EntitySpan("Municipality", 1, 2)]

    def test_rejects_invalid(self):
        with pytest.raises(BioValidationError) as exc:
            extract_entities([Tag.O, Tag.O, Tag.I_STREET])
        assert exc.value.index == 2


class TestTaggedSentence:
    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            TaggedSentence(("a", "b"), (Tag.O,))

    def test_empty(self):
        with pytest.raises(ValueError):
            TaggedSentence((), ())

    @pytest.mark.parametrize("tok", ["", "a b", " a", "a\tb"])
    def test_bad_tokens(self, tok):
        with pytest.raises(ValueError):
            TaggedSentence((tok,), (Tag.O,))

    def test_invalid_bio(self):
        with pytest.raises(BioValidationError):
            TaggedSentence(("x",), (Tag.I_STREET,))

    def test_accepts_tag_strings(self):
        s = TaggedSentence(("Košice",), ("B-Municipality",))
        assert s.tags == (Tag.B_MUNICIPALITY,)


def _demo_corpus():
    return Corpus(
        (
            TaggedSentence(("Stupava", "Záhumenská", "834"), (B("Municipality"), B("Street"), B("Housenumber"))),
            TaggedSentence(("Ďalšie", "bauerová", "44", "Košice"), (Tag.O, B("Street"), B("Housenumber"), B("Municipality"))),
            TaggedSentence(("PSČ", "841", "04"), (Tag.O, B("Postcode"), I("Postcode"))),
        ),
        "demo",
    )


class TestCorpusIO:
    @pytest.mark.parametrize("fmt", ["jsonl", "conll"])
    def test_round_trip(self, tmp_path, fmt):
        c = _demo_corpus()
        path = tmp_path / f"demo.{fmt}"
        write_corpus(c, path, fmt)
        back = read_corpus(path, fmt)
        assert back == c
        assert back.name == "demo"

    def test_jsonl_shape(self):
        line = dumps_corpus(_demo_corpus(), "jsonl").splitlines()[0]
        assert json.loads(line) == {
            "tokens": ["Stupava", "Záhumenská", "834"],
            "tags": ["B-Municipality", "B-Street", "B-Housenumber"],
        }
        assert "Záhumenská" in line  # written as UTF-8, not \u escapes

    def test_conll_shape(self):
        text = dumps_corpus(_demo_corpus(), "conll")
        assert text.startswith("Stupava\tB-Municipality\nZáhumenská\tB-Street\n834\tB-Housenumber\n\nĎalšie\tO\n")
        assert text.endswith("04\tI-Postcode\n")

    def test_conll_three_columns(self):
        with pytest.raises(CorpusFormatError) as exc:
            loads_corpus("a\tO\nb\tO\tX\n", "conll")
        assert exc.value.line == 2

    def test_unknown_tag_jsonl(self):
        with pytest.raises(UnknownTagError) as exc:
            loads_corpus('{"tokens": ["Košice"], "tags": ["B-City"]}\n', "jsonl")
        assert exc.value.tag == "B-City"
        assert "B-City" in str(exc.value)

    def test_unknown_tag_conll(self):
        with pytest.raises(UnknownTagError, match="B-City"):
            loads_corpus("Košice\tB-City\n", "conll")

    def test_length_mismatch_line_number(self):
        text = '{"tokens": ["a"], "tags": ["O"]}\n{"tokens": ["a", "b"], "tags": ["O"]}\n'
        with pytest.raises(CorpusFormatError) as exc:
            loads_corpus(text, "jsonl")
        assert exc.value.line == 2
        assert "length mismatch" in exc.value.reason

    def test_bio_violation_in_file(self):
        with pytest.raises(CorpusFormatError, match="BIO"):
            loads_corpus('{"tokens": ["a"], "tags": ["I-Street"]}\n', "jsonl")

    def test_invalid_json(self):
        with pytest.raises(CorpusFormatError) as exc:
            loads_corpus('{"tokens": ["a"], "tags": ["O"]}\n{oops\n', "jsonl")
        assert exc.value.line == 2

    def test_invalid_utf8(self, tmp_path):
        p = tmp_path / "bad.jsonl"
        p.write_bytes(b'{"tokens": ["a"], "tags": ["O"]}\n{"tokens": ["\xff"], "tags": ["O"]}\n')
        with pytest.raises(CorpusFormatError) as exc:
            read_corpus(p)
        assert exc.value.line == 2

    def test_conll_tolerates_extra_blank_lines(self):
        c = loads_corpus("\n\na\tO\n\n\n\nb\tB-Street\n\n", "conll")
        assert len(c) == 2


# --- properties ----------------------------------------------------------------


@settings(max_examples=200)
@given(tagged_sentences())
def test_span_view_round_trip(s):
    rebuilt = [Tag.O] * len(s)
    for span in extract_entities(s):
        rebuilt[span.start] = B(span.entity_type)
        for k in range(span.start + 1, span.end + 1):
            rebuilt[k] = I(span.entity_type)
    assert tuple(rebuilt) == s.tags


@settings(max_examples=200)
@given(tagged_sentences())
def test_spans_do_not_overlap(s):
    spans = extract_entities(s)
    for a, b in zip(spans, spans[1:]):
        assert 0 <= a.start <= a.end < b.start <= b.end < len(s)


@settings(max_examples=300)
@given(st.lists(st.sampled_from(TAGS), max_size=8))
def test_validate_agrees_with_extract(tags):
    verdict = validate_bio(tags)
    try:
        extract_entities(tags)
        accepted = True
    except BioValidationError as exc:
        accepted = False
        assert exc.index == verdict
    assert accepted == (verdict is None)


@settings(max_examples=100)
@given(st.lists(tagged_sentences(), min_size=1, max_size=6), st.sampled_from(["jsonl", "conll"]))
def test_io_byte_stable(sentences, fmt):
    c = Corpus(tuple(sentences))
    first = dumps_corpus(c, fmt)
    again = dumps_corpus(loads_corpus(first, fmt), fmt)
    assert again == first
    assert loads_corpus(first, fmt) == c
