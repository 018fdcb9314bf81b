import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from addrner.bio import Corpus, Tag, TaggedSentence, dumps_corpus, extract_entities, validate_bio
from addrner.errors import TemplateError
from addrner.gazetteer import Gazetteer
from addrner.generate import (
    DEFAULT_CORPUS_SIZE,
    PATTERNS,
    GenerationConfig,
    NoiseLexicon,
    TemplateElement,
    default_bank,
    default_noise,
    generate_mixed_corpus,
    generate_pattern,
    generate_sharded,
    lowercase_duplicate,
    parse_template,
    render_template,
    split_corpus,
    template_entities,
    template_text,
)
from addrner.numerals import verbalize_house_number

# Standard Slovak cardinals, typed in from a reference table rather than
# derived from the module's lexicon.
SLOVAK_CARDINALS = {
    1: "jeden", 2: "dva", 3: "tri", 4: "štyri", 5: "päť", 7: "sedem", 9: "deväť",
    10: "desať", 11: "jedenásť", 12: "dvanásť", 14: "štrnásť", 15: "pätnásť",
    19: "devätnásť", 20: "dvadsať", 21: "dvadsaťjeden", 40: "štyridsať",
    44: "štyridsaťštyri", 58: "päťdesiatosem", 66: "šesťdesiatšesť",
    90: "deväťdesiat", 99: "deväťdesiatdeväť", 100: "sto", 101: "stojeden",
    110: "stodesať", 115: "stopätnásť", 200: "dvesto", 234: "dvestotridsaťštyri",
    300: "tristo", 412: "štyristodvanásť", 555: "päťstopäťdesiatpäť",
    607: "šesťstosedem", 760: "sedemstošesťdesiat", 834: "osemstotridsaťštyri",
    999: "deväťstodeväťdesiatdeväť",
}


class TestNumerals:
    @pytest.mark.parametrize("n,word", sorted(SLOVAK_CARDINALS.items()))
    def test_reference_table(self, n, word):
        assert verbalize_house_number(n) == [word]

    def test_known_examples(self):
        assert verbalize_house_number(7) == ["sedem"]
        assert verbalize_house_number(44) == ["štyridsaťštyri"]
        assert verbalize_house_number(834) == ["osemstotridsaťštyri"]

    def test_spaced(self):
        assert verbalize_house_number(834, spaced=True) == ["osemsto", "tridsať", "štyri"]
        assert verbalize_house_number(112, spaced=True) == ["sto", "dvanásť"]
        assert verbalize_house_number(7, spaced=True) == ["sedem"]

    @pytest.mark.parametrize("bad", [0, 1000, -3, 2.0, True])
    def test_out_of_range(self, bad):
        with pytest.raises(ValueError):
            verbalize_house_number(bad)

    def test_injective(self):
        words = {verbalize_house_number(n)[0] for n in range(1, 1000)}
        assert len(words) == 999

    def test_spaced_joins_to_written(self):
        for n in range(1, 1000):
            assert "".join(verbalize_house_number(n, spaced=True)) == verbalize_house_number(n)[0]


class TestTemplateGrammar:
    def test_llm_style_line(self):
        t = parse_template("bývam na streetname 12 municipalityname")
        assert [e.kind for e in t] == ["literal", "literal", "placeholder", "literal", "placeholder"]
        assert t[0].tag is Tag.O and t[1].tag is Tag.O
        assert t[3] == TemplateElement.literal("12", Tag.B_HOUSENUMBER)
        assert t[2].slot == "streetname" and t[4].slot == "municipalityname"

    def test_brackets(self):
        t = parse_template("bývam [na streetname] [v municipalityname]")
        assert [e.block for e in t] == [None, 0, 0, 1, 1]

    def test_list_marker_stripped(self):
        assert parse_template("3. streetname 5") == parse_template("streetname 5")

    def test_postcode_literals(self):
        t = parse_template("PSČ 841 04 municipalityname")
        assert [e.tag for e in t[:3]] == [Tag.O, Tag.B_POSTCODE, Tag.I_POSTCODE]
        assert parse_template("84104 municipalityname")[0].tag is Tag.B_POSTCODE

    def test_trailing_punctuation_dropped(self):
        t = parse_template("moja adresa je [streetname housenumber], [v municipalityname].")
        assert [e.block for e in t] == [None, None, None, 0, 0, 1, 1]
        assert parse_template("municipalityname, streetname 5.") == parse_template("municipalityname streetname 5")

    @pytest.mark.parametrize(
        "line,reason",
        [
            ("streetname I-Street", "stray tag token"),
            ("B-Municipality municipalityname", "stray tag token"),
            ("bývam na {streetname}", "malformed placeholder"),
            ("bývam na StreetName", "malformed placeholder"),
            ("dobrý deň ako sa máte", "no placeholders"),
            ("[streetname", "unbalanced bracket"),
            ("[[streetname]]", "nested bracket"),
            ("   ", "empty template"),
        ],
    )
    def test_rejections(self, line, reason):
        with pytest.raises(TemplateError, match=reason):
            parse_template(line)

    def test_text_round_trip(self):
        for templates in default_bank().values():
            for t in templates:
                assert parse_template(template_text(t)) == t


def _gaz(street="Záhumenská", muni="Stupava"):
    return Gazetteer(frozenset({street}), frozenset({muni}))


class TestRender:
    def test_stupava_example(self):
        t = (
            TemplateElement.placeholder("municipalityname"),
            TemplateElement.placeholder("streetname"),
            TemplateElement.literal("834", Tag.B_HOUSENUMBER),
        )
        s = render_template(t, _gaz(), GenerationConfig(4, 1), random.Random(0))
        assert s.tokens == ("Stupava", "Záhumenská", "834")
        assert s.tags == (Tag.B_MUNICIPALITY, Tag.B_STREET, Tag.B_HOUSENUMBER)

    def test_multiword_street(self):
        t = (TemplateElement.placeholder("streetname"),)
        s = render_template(t, _gaz(street="Nábrežie mládeže"), GenerationConfig(4, 1), random.Random(0))
        assert s.tokens == ("Nábrežie", "mládeže")
        assert s.tags == (Tag.B_STREET, Tag.I_STREET)

    def test_noise_slot(self):
        t = parse_template("noise streetname")
        lex = NoiseLexicon((("ďalšie",),))
        cfg = GenerationConfig(4, 1, with_noise=True)
        s = render_template(t, _gaz(street="bauerová"), cfg, random.Random(3), noise=lex)
        assert s.tokens[0] == "ďalšie" and s.tags[0] is Tag.O
        for tok, tag in zip(s.tokens, s.tags):
            if tok == "ďalšie":
                assert tag is Tag.O
        assert s.tokens.count("bauerová") == 1

    def test_noise_slot_dropped_without_noise(self):
        s = render_template(parse_template("noise streetname"), _gaz(), GenerationConfig(4, 1), random.Random(0))
        assert s.tokens == ("Záhumenská",)

    def test_noise_injection_count(self, gaz):
        cfg = GenerationConfig(4, 1, with_noise=True)
        t = parse_template("[municipalityname] [housenumber] [postcode]")
        lex = NoiseLexicon((("ehm",),))
        rng = random.Random(11)
        counts = Counter(render_template(t, gaz, cfg, rng, lex).tokens.count("ehm") for _ in range(300))
        assert set(counts) == {1, 2}

    def test_noise_never_splits_entities(self, gaz):
        rng = random.Random(2)
        c = generate_pattern(1, 300, gaz, rng, with_noise=True)
        filler_words = {w for f in default_noise().fillers for w in f}
        for s in c:
            for span in extract_entities(s):
                inner = s.tokens[span.start : span.end + 1]
                assert not (set(inner) & filler_words - {"no"})

    def test_zero_tokens(self):
        t = (TemplateElement.placeholder("noise"),)
        with pytest.raises(TemplateError, match="zero tokens"):
            render_template(t, _gaz(), GenerationConfig(4, 1), random.Random(0))


class TestPatterns:
    def test_bank_has_ten_frames_per_pattern(self):
        bank = default_bank()
        for pid in PATTERNS:
            assert len(bank[pid]) >= 10

    def test_bank_frames_follow_pattern_order(self):
        for pid, templates in default_bank().items():
            for t in templates:
                assert tuple(template_entities(t)) == PATTERNS[pid].parts, template_text(t)

    def test_pattern4_exact_components(self, gaz):
        c = generate_pattern(4, 200, gaz, random.Random(1))
        for s in c:
            assert [sp.entity_type for sp in extract_entities(s)] == ["Municipality", "Housenumber", "Postcode"]

    def test_pattern5_verbal_house_numbers(self, gaz):
        c = generate_pattern(5, 300, gaz, random.Random(4))
        multi = 0
        for s in c:
            spans = [sp for sp in extract_entities(s) if sp.entity_type == "Housenumber"]
            assert len(spans) == 1
            words = s.tokens[spans[0].start : spans[0].end + 1]
            assert all(w.isalpha() for w in words)
            if len(words) > 1:
                multi += 1
                assert s.tags[spans[0].start + 1] is Tag.I_HOUSENUMBER
        assert multi > 0

    def test_pattern6_municipality_twice(self, gaz):
        c = generate_pattern(6, 200, gaz, random.Random(5))
        for s in c:
            munis = [s.tokens[sp.start : sp.end + 1] for sp in extract_entities(s) if sp.entity_type == "Municipality"]
            assert len(munis) == 2 and munis[0] == munis[1]

    def test_shuffle_changes_order(self, gaz):
        c = generate_pattern(5, 200, gaz, random.Random(6))
        orders = {tuple(sp.entity_type for sp in extract_entities(s)) for s in c}
        assert len(orders) > 5

    def test_omit_drops_parts(self, gaz):
        c = generate_pattern(2, 400, gaz, random.Random(7))
        sizes = Counter(len(extract_entities(s)) for s in c)
        assert sizes[4] > 0 and sizes[3] > 0
        assert 0 not in sizes
        # omission without shuffle keeps the declared relative order
        parts = PATTERNS[2].parts
        for s in c:
            ents = [sp.entity_type for sp in extract_entities(s)]
            it = iter(parts)
            assert all(e in it for e in ents)

    def test_omit_rate(self, gaz):
        c = generate_pattern(3, 2000, gaz, random.Random(8))
        kept = sum(len(extract_entities(s)) for s in c)
        # each of 4 parts kept with probability 0.75 (plus the keep-one floor)
        assert 0.72 < kept / (4 * 2000) < 0.78

    @pytest.mark.parametrize("bad", [0, 7, 8])
    def test_invalid_pattern(self, gaz, bad):
        with pytest.raises(ValueError):
            generate_pattern(bad, 1, gaz, random.Random(0))

    def test_config_enforces_flags(self):
        with pytest.raises(ValueError):
            GenerationConfig(5, 10, shuffle=True)  # missing verbal_housenumber
        cfg = GenerationConfig.for_pattern(5, 10)
        assert cfg.verbal_housenumber and cfg.shuffle and not cfg.omit
        with pytest.raises(ValueError):
            GenerationConfig(9, 1)

    def test_sharded(self, gaz):
        a = generate_sharded(1, 25, gaz, seed=3, shards=3)
        b = generate_sharded(1, 25, gaz, seed=3, shards=3)
        assert a == b and len(a) == 25
        first = generate_pattern(1, 9, gaz, random.Random(3 ^ 0))
        assert a.sentences[:9] == first.sentences

    def test_default_corpus_size(self, gaz):
        c = generate_mixed_corpus(gaz, seed=1)
        assert len(c) == DEFAULT_CORPUS_SIZE == 11306
        assert all(validate_bio(s.tags) is None for s in c)


class TestLowercaseDuplicate:
    def test_single(self):
        c = Corpus((TaggedSentence(("Košice",), (Tag.B_MUNICIPALITY,)),))
        out = lowercase_duplicate(c)
        assert len(out) == 2
        assert out[1].tokens == ("košice",) and out[1].tags == (Tag.B_MUNICIPALITY,)

    def test_empty(self):
        assert len(lowercase_duplicate(Corpus(()))) == 0

    def test_training_scale(self, gaz):
        c = generate_mixed_corpus(gaz, total=9492, seed=2)
        out = lowercase_duplicate(c)
        assert len(out) == 18984
        assert all(validate_bio(s.tags) is None for s in out)
        assert out.sentences[:9492] == c.sentences


def _corpus(n):
    return Corpus(tuple(TaggedSentence((f"w{i}",), (Tag.O,)) for i in range(n)), "c")


class TestSplit:
    @pytest.mark.parametrize("n,sizes", [(100, (80, 15, 5)), (20, (16, 3, 1)), (11306, (9044, 1695, 567))])
    def test_sizes(self, n, sizes):
        assert tuple(len(p) for p in split_corpus(_corpus(n), seed=0)) == sizes

    def test_partition(self):
        c = _corpus(57)
        parts = split_corpus(c, seed=4)
        toks = sorted(s.tokens[0] for p in parts for s in p)
        assert toks == sorted(s.tokens[0] for s in c)

    def test_deterministic(self):
        assert split_corpus(_corpus(50), seed=9) == split_corpus(_corpus(50), seed=9)
        assert split_corpus(_corpus(50), seed=9) != split_corpus(_corpus(50), seed=10)

    def test_too_small(self):
        with pytest.raises(ValueError, match="too small"):
            split_corpus(_corpus(19))

    def test_bad_ratios(self):
        with pytest.raises(ValueError):
            split_corpus(_corpus(30), (0.5, 0.3, 0.1))


# --- properties ----------------------------------------------------------------


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(sorted(PATTERNS)), st.integers(0, 2**63), st.integers(1, 30), st.booleans())
def test_generated_sentences_are_bio_valid(pid, seed, count, noise):
    from addrner.gazetteer import load_bundled

    c = generate_pattern(pid, count, load_bundled(), random.Random(seed), with_noise=noise)
    assert len(c) == count
    assert all(validate_bio(s.tags) is None for s in c)


@settings(max_examples=100, deadline=None)
@given(st.sampled_from([4, 5, 6]), st.integers(0, 2**63), st.booleans())
def test_entity_multiset_without_omission(pid, seed, noise):
    from addrner.gazetteer import load_bundled

    c = generate_pattern(pid, 10, load_bundled(), random.Random(seed), with_noise=noise)
    for s in c:
        assert Counter(sp.entity_type for sp in extract_entities(s)) == Counter(PATTERNS[pid].parts)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**63), st.integers(1, 20))
def test_lowercase_half_is_idempotent(seed, n):
    from addrner.gazetteer import load_bundled

    c = generate_pattern(1, n, load_bundled(), random.Random(seed))
    lower_half = lowercase_duplicate(c).sentences[n:]
    assert tuple(s.lowercased() for s in lower_half) == lower_half


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(sorted(PATTERNS)), st.integers(0, 2**63), st.integers(1, 20))
def test_fixed_seed_gives_identical_bytes(pid, seed, count):
    from addrner.gazetteer import load_bundled

    g = load_bundled()
    a = dumps_corpus(generate_pattern(pid, count, g, random.Random(seed)))
    b = dumps_corpus(generate_pattern(pid, count, g, random.Random(seed)))
    assert a == b
