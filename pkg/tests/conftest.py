from __future__ import annotations

import re
from collections import defaultdict
from pathlib import Path

import pytest
from hypothesis import strategies as st

from addrner.bio import ENTITY_TYPES, Tag, TaggedSentence
from addrner.gazetteer import Gazetteer, load_bundled

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"


@pytest.fixture(scope="session")
def gaz() -> Gazetteer:
    return load_bundled()


@pytest.fixture
def small_gaz() -> Gazetteer:
    return Gazetteer(
        frozenset({"Hlavná", "Záhumenská", "Bauerová", "Nábrežie mládeže"}),
        frozenset({"Košice", "Stupava", "Banská Bystrica"}),
    )


# --- hypothesis strategies -------------------------------------------------

words = st.text(
    alphabet=st.sampled_from(list("abcdefghijklmnopqrstuvwxyzáčďéíľňóôŕšťúýžABCKLMSZ0123456789/.")),
    min_size=1,
    max_size=8,
)


@st.composite
def bio_tag_sequences(draw, min_size=1, max_size=12):
    """Random BIO-valid tag sequences."""
    tags: list[Tag] = []
    target = draw(st.integers(min_size, max_size))
    while len(tags) < target:
        ent = draw(st.sampled_from((None,) + ENTITY_TYPES))
        if ent is None:
            tags.append(Tag.O)
            continue
        n = draw(st.integers(1, 3))
        tags.append(Tag.begin(ent))
        tags.extend([Tag.inside(ent)] * (n - 1))
    # a prefix of a BIO-valid sequence is BIO-valid
    return tags[:target]


@st.composite
def tagged_sentences(draw, max_size=12):
    tags = draw(bio_tag_sequences(max_size=max_size))
    tokens = draw(st.lists(words, min_size=len(tags), max_size=len(tags)))
    return TaggedSentence(tuple(tokens), tuple(tags))


# --- acceptance summary ------------------------------------------------------

_CRITERION = re.compile(r"test_criterion_(\d+)")
_acceptance: dict[int, list[str]] = defaultdict(list)


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    m = _CRITERION.search(report.nodeid)
    if not m:
        return
    if report.when == "call" or report.outcome != "passed":
        _acceptance[int(m.group(1))].append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_acceptance):
        outcomes = _acceptance[num]
        ok = all(o == "passed" for o in outcomes)
        terminalreporter.write_line(
            f"criterion {num}: {'PASS' if ok else 'FAIL'} ({outcomes.count('passed')}/{len(outcomes)} checks)"
        )
