"""Template rendering and synthetic corpus generation.

A template is one line of whitespace-separated tokens. The words
``streetname``, ``municipalityname``, ``housenumber``, ``postcode`` and
``noise`` are placeholders; every other word is a literal tagged ``O``,
except digit-only literals which are tagged as house numbers or postcodes
by shape. Square brackets group an address part with its connective words
(``[v municipalityname]``) so shuffling and omission move them together.
Unbracketed placeholders form single-element groups.
"""

from __future__ import annotations

import json
import logging
import math
import random
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

from .bio import Corpus, Tag, TaggedSentence
from .errors import GazetteerError, TemplateError
from .gazetteer import (
    Gazetteer,
    format_house_number,
    make_house_number,
    make_postcode,
    sample_name,
)
from .numerals import SLASH_WORD, verbalize_house_number

log = logging.getLogger(__name__)

SLOTS = ("streetname", "municipalityname", "housenumber", "postcode", "noise")
SLOT_ENTITY = {
    "streetname": "Street",
    "municipalityname": "Municipality",
    "housenumber": "Housenumber",
    "postcode": "Postcode",
}

DEFAULT_CORPUS_SIZE = 11306
OMIT_PROBABILITY = 0.25
SPOKEN_DIGITS_RATE = 0.5


@dataclass(frozen=True)
class PatternSpec:
    parts: tuple[str, ...]
    shuffle: bool = False
    omit: bool = False
    verbal_housenumber: bool = False
    duplicate_municipality: bool = False


PATTERNS: dict[int, PatternSpec] = {
    1: PatternSpec(("Street", "Housenumber", "Municipality", "Postcode"), shuffle=True, omit=True),
    2: PatternSpec(("Municipality", "Street", "Housenumber", "Postcode"), omit=True),
    3: PatternSpec(("Municipality", "Housenumber", "Street", "Postcode"), omit=True),
    4: PatternSpec(("Municipality", "Housenumber", "Postcode")),
    5: PatternSpec(
        ("Street", "Municipality", "Housenumber", "Postcode"), shuffle=True, verbal_housenumber=True
    ),
    6: PatternSpec(
        ("Municipality", "Housenumber", "Postcode", "Municipality"),
        shuffle=True,
        duplicate_municipality=True,
    ),
}
# pattern 7 is lowercase_duplicate(), a transform over the finished corpus
LOWERCASE_PATTERN = 7


@dataclass(frozen=True)
class GenerationConfig:
    pattern_id: int
    count: int
    shuffle: bool = False
    omit: bool = False
    with_noise: bool = False
    verbal_housenumber: bool = False
    duplicate_municipality: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.pattern_id not in PATTERNS and self.pattern_id != LOWERCASE_PATTERN:
            raise ValueError(f"pattern_id must be in 1..7, got {self.pattern_id}")
        if self.count < 1:
            raise ValueError("count must be positive")
        spec = PATTERNS.get(self.pattern_id)
        if spec is not None:
            for flag in ("shuffle", "omit", "verbal_housenumber", "duplicate_municipality"):
                if getattr(self, flag) != getattr(spec, flag):
                    raise ValueError(
                        f"pattern {self.pattern_id} requires {flag}={getattr(spec, flag)}"
                    )

    @classmethod
    def for_pattern(
        cls, pattern_id: int, count: int, seed: int = 0, with_noise: bool = False
    ) -> "GenerationConfig":
        spec = PATTERNS.get(pattern_id)
        if spec is None:
            return cls(pattern_id, count, with_noise=with_noise, seed=seed)
        return cls(
            pattern_id,
            count,
            shuffle=spec.shuffle,
            omit=spec.omit,
            with_noise=with_noise,
            verbal_housenumber=spec.verbal_housenumber,
            duplicate_municipality=spec.duplicate_municipality,
            seed=seed,
        )


# --- templates ------------------------------------------------------------


@dataclass(frozen=True)
class TemplateElement:
    kind: str  # "literal" or "placeholder"
    token: str | None = None
    tag: Tag | None = None
    slot: str | None = None
    block: int | None = None

    @classmethod
    def literal(cls, token: str, tag: Tag = Tag.O, block: int | None = None) -> "TemplateElement":
        return cls("literal", token=token, tag=Tag(tag), block=block)

    @classmethod
    def placeholder(cls, slot: str, block: int | None = None) -> "TemplateElement":
        if slot not in SLOTS:
            raise TemplateError(f"unknown slot {slot!r}")
        return cls("placeholder", slot=slot, block=block)

    @property
    def entity(self) -> str | None:
        if self.kind == "placeholder":
            return SLOT_ENTITY.get(self.slot)
        return self.tag.entity

    def text(self) -> str:
        return self.slot if self.kind == "placeholder" else self.token


Template = tuple[TemplateElement, ...]

_LIST_MARKER = re.compile(r"^\s*(?:\d+[.)]|[-*•])\s+")
_HOUSENUMBER = re.compile(r"^\d{1,4}(?:/\d{1,4})?[a-zA-Z]?$")
_TAG_STRINGS = {t.value for t in Tag if t is not Tag.O}


_PUNCT = ".,;:!?"


def _split_brackets(line: str) -> list[str]:
    # transcripts carry no punctuation, so trailing marks are dropped
    out = []
    for word in line.split():
        word = word.rstrip(_PUNCT)
        lead = []
        while word.startswith("["):
            lead.append("[")
            word = word[1:]
        trail = []
        while word.endswith("]"):
            trail.append("]")
            word = word[:-1].rstrip(_PUNCT)
        out.extend(lead)
        if word:
            out.append(word)
        out.extend(trail)
    return out


def parse_template(line: str) -> Template:
    """Parse one template line; raise TemplateError with a reason on failure."""
    line = _LIST_MARKER.sub("", line.strip(), count=1).strip()
    words = _split_brackets(line)
    if not words:
        raise TemplateError("empty template")
    elements: list[TemplateElement] = []
    block = None
    next_block = 0
    for i, word in enumerate(words):
        if word == "[":
            if block is not None:
                raise TemplateError("nested bracket")
            block, next_block = next_block, next_block + 1
            continue
        if word == "]":
            if block is None:
                raise TemplateError("unbalanced bracket")
            block = None
            continue
        if word in SLOTS:
            elements.append(TemplateElement.placeholder(word, block))
        elif word in _TAG_STRINGS:
            raise TemplateError(f"stray tag token {word!r}")
        elif any(ch in word for ch in "{}<>") or word.lower().strip("_") in SLOTS:
            raise TemplateError(f"malformed placeholder {word!r}")
        elif word.isdigit() and len(word) == 5:
            elements.append(TemplateElement.literal(word, Tag.B_POSTCODE, block))
        elif (
            word.isdigit()
            and len(word) == 2
            and elements
            and elements[-1].tag is Tag.B_POSTCODE
            and len(elements[-1].token) == 3
        ):
            elements.append(TemplateElement.literal(word, Tag.I_POSTCODE, block))
        elif word.isdigit() and len(word) == 3 and _next_is_two_digits(words, i):
            elements.append(TemplateElement.literal(word, Tag.B_POSTCODE, block))
        elif _HOUSENUMBER.match(word):
            elements.append(TemplateElement.literal(word, Tag.B_HOUSENUMBER, block))
        else:
            elements.append(TemplateElement.literal(word, Tag.O, block))
    if block is not None:
        raise TemplateError("unbalanced bracket")
    if not any(e.entity for e in elements):
        raise TemplateError("no placeholders")
    return tuple(elements)


def _next_is_two_digits(words: list[str], i: int) -> bool:
    return i + 1 < len(words) and words[i + 1].isdigit() and len(words[i + 1]) == 2


def template_text(t: Template) -> str:
    """Canonical text of a template; parse_template(template_text(t)) == t."""
    out: list[str] = []
    cur = None
    for el in t:
        if el.block != cur:
            if cur is not None:
                out[-1] += "]"
            out.append(("[" if el.block is not None else "") + el.text())
            cur = el.block
        else:
            out.append(el.text())
    if cur is not None:
        out[-1] += "]"
    return " ".join(out)


def template_entities(t: Template) -> list[str]:
    """Entity types a template yields, in order (multi-token literals count once)."""
    ents = []
    for el in t:
        if el.kind == "literal" and el.tag.prefix == "I":
            continue
        if el.entity:
            ents.append(el.entity)
    return ents


def _units(t: Template) -> list[tuple[bool, list[TemplateElement]]]:
    """Split into (movable, elements) units preserving order."""
    units: list[tuple[bool, list[TemplateElement]]] = []
    current_block = None
    for el in t:
        if el.block is not None:
            if units and units[-1][0] and current_block == el.block:
                units[-1][1].append(el)
            else:
                units.append((True, [el]))
            current_block = el.block
            continue
        current_block = None
        if el.entity and not (el.kind == "literal" and el.tag.prefix == "I"):
            units.append((True, [el]))
        elif el.kind == "literal" and el.tag.prefix == "I":
            units[-1][1].append(el)
        else:
            units.append((False, [el]))
    return units


# --- resources ------------------------------------------------------------


def _data_path(name: str) -> Path:
    return Path(str(resources.files("addrner") / "data" / name))


def load_template_bank(path: str | Path | None = None) -> dict[int, list[Template]]:
    """JSONL records ``{"pattern": int, "template": str}`` grouped by pattern."""
    path = Path(path) if path else _data_path("templates.jsonl")
    bank: dict[int, list[Template]] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not raw.strip():
            continue
        rec = json.loads(raw)
        try:
            bank.setdefault(int(rec["pattern"]), []).append(parse_template(rec["template"]))
        except TemplateError as exc:
            raise TemplateError(f"{path}:{lineno}: {exc}") from None
    return bank


@dataclass(frozen=True)
class NoiseLexicon:
    fillers: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        fillers = tuple(tuple(f) for f in self.fillers if f)
        if not fillers:
            raise ValueError("noise lexicon must not be empty")
        object.__setattr__(self, "fillers", fillers)

    def draw(self, rng: random.Random) -> tuple[str, ...]:
        return self.fillers[rng.randrange(len(self.fillers))]


def load_noise_lexicon(path: str | Path | None = None) -> NoiseLexicon:
    path = Path(path) if path else _data_path("noise.txt")
    lines = path.read_text(encoding="utf-8").splitlines()
    return NoiseLexicon(tuple(tuple(l.split()) for l in lines if l.strip()))


_DEFAULT_BANK: dict[int, list[Template]] | None = None
_DEFAULT_NOISE: NoiseLexicon | None = None


def default_bank() -> dict[int, list[Template]]:
    global _DEFAULT_BANK
    if _DEFAULT_BANK is None:
        _DEFAULT_BANK = load_template_bank()
    return _DEFAULT_BANK


def default_noise() -> NoiseLexicon:
    global _DEFAULT_NOISE
    if _DEFAULT_NOISE is None:
        _DEFAULT_NOISE = load_noise_lexicon()
    return _DEFAULT_NOISE


# --- rendering ------------------------------------------------------------


def _entity_chunk(entity: str, words: Sequence[str]) -> list[tuple[str, Tag]]:
    return [
        (w, Tag.begin(entity) if i == 0 else Tag.inside(entity)) for i, w in enumerate(words)
    ]


def _house_number_words(cfg: GenerationConfig, rng: random.Random) -> list[str]:
    n, sub = make_house_number(rng)
    if not cfg.verbal_housenumber:
        return [format_house_number(n, sub)]
    spaced = rng.random() < SPOKEN_DIGITS_RATE
    words = verbalize_house_number(n, spaced=spaced)
    if sub is not None:
        words = words + [SLASH_WORD] + verbalize_house_number(sub, spaced=spaced)
    return words


def render_template(
    template: Template,
    g: Gazetteer,
    cfg: GenerationConfig,
    rng: random.Random,
    noise: NoiseLexicon | None = None,
) -> TaggedSentence:
    """Fill placeholders, apply omission/shuffle/noise, and tag by construction."""
    units = _units(template)
    movable = [i for i, (m, _) in enumerate(units) if m]

    if cfg.omit and movable:
        kept = [i for i in movable if rng.random() >= OMIT_PROBABILITY]
        if not kept:
            kept = [movable[0]]
        dropped = set(movable) - set(kept)
        units = [u for i, u in enumerate(units) if i not in dropped]
        movable = [i for i, (m, _) in enumerate(units) if m]

    if cfg.shuffle and len(movable) > 1:
        order = list(movable)
        rng.shuffle(order)
        shuffled = list(units)
        for slot, src in zip(movable, order):
            shuffled[slot] = units[src]
        units = shuffled

    sampled: dict[str, str] = {}
    chunks: list[list[tuple[str, Tag]]] = []
    for _, elements in units:
        chunk: list[tuple[str, Tag]] = []
        for el in elements:
            if el.kind == "literal":
                chunk.append((el.token, el.tag))
            elif el.slot == "noise":
                if cfg.with_noise:
                    filler = (noise or default_noise()).draw(rng)
                    chunk.extend((w, Tag.O) for w in filler)
            elif el.slot in ("streetname", "municipalityname"):
                kind = "street" if el.slot == "streetname" else "municipality"
                if cfg.duplicate_municipality and el.slot in sampled:
                    name = sampled[el.slot]
                else:
                    name = sample_name(g, kind, rng)
                    sampled[el.slot] = name
                chunk.extend(_entity_chunk(SLOT_ENTITY[el.slot], name.split()))
            elif el.slot == "housenumber":
                chunk.extend(_entity_chunk("Housenumber", _house_number_words(cfg, rng)))
            elif el.slot == "postcode":
                chunk.extend(_entity_chunk("Postcode", make_postcode(rng).tokens()))
        chunks.append(chunk)

    if cfg.with_noise:
        lexicon = noise or default_noise()
        for _ in range(rng.randint(1, 2)):
            at = rng.randint(0, len(chunks))
            chunks.insert(at, [(w, Tag.O) for w in lexicon.draw(rng)])

    pairs = [p for chunk in chunks for p in chunk]
    if not pairs:
        raise TemplateError("template rendered to zero tokens")
    tokens, tags = zip(*pairs)
    return TaggedSentence(tokens, tags)


def generate_pattern(
    pattern_id: int,
    count: int,
    g: Gazetteer,
    rng: random.Random,
    with_noise: bool = False,
    bank: dict[int, list[Template]] | None = None,
    noise: NoiseLexicon | None = None,
) -> Corpus:
    if pattern_id == LOWERCASE_PATTERN:
        raise ValueError("pattern 7 is a corpus transform; use lowercase_duplicate()")
    if pattern_id not in PATTERNS:
        raise ValueError(f"invalid pattern id {pattern_id}")
    cfg = GenerationConfig.for_pattern(pattern_id, count, with_noise=with_noise)
    templates = (bank or default_bank()).get(pattern_id)
    if not templates:
        raise TemplateError(f"template bank has no templates for pattern {pattern_id}")
    for kind in ("street", "municipality"):
        if not g.names(kind):
            raise GazetteerError(f"empty gazetteer: no {kind} names")
    sents = [
        render_template(templates[rng.randrange(len(templates))], g, cfg, rng, noise)
        for _ in range(count)
    ]
    suffix = "noisy" if with_noise else "clean"
    return Corpus(tuple(sents), f"pattern{pattern_id}-{suffix}")


def shard_seed(seed: int, shard: int) -> int:
    return seed ^ shard


def generate_sharded(
    pattern_id: int,
    count: int,
    g: Gazetteer,
    seed: int,
    shards: int = 1,
    with_noise: bool = False,
) -> Corpus:
    """Split ``count`` over ``shards`` independently seeded runs, concatenated in order."""
    base, extra = divmod(count, shards)
    parts = []
    for k in range(shards):
        n = base + (1 if k < extra else 0)
        if n:
            parts.append(
                generate_pattern(pattern_id, n, g, random.Random(shard_seed(seed, k)), with_noise)
            )
    return Corpus(tuple(s for p in parts for s in p), f"pattern{pattern_id}")


def generate_mixed_corpus(
    g: Gazetteer, total: int = DEFAULT_CORPUS_SIZE, seed: int = 0
) -> Corpus:
    """Patterns 1-6, each once clean and once noisy, ``total`` sentences overall."""
    groups = [(pid, noisy) for pid in sorted(PATTERNS) for noisy in (False, True)]
    base, extra = divmod(total, len(groups))
    sents: list[TaggedSentence] = []
    for k, (pid, noisy) in enumerate(groups):
        n = base + (1 if k < extra else 0)
        if n:
            rng = random.Random(f"{seed}:{pid}:{int(noisy)}")
            sents.extend(generate_pattern(pid, n, g, rng, with_noise=noisy))
    return Corpus(tuple(sents), "generated")


def lowercase_duplicate(c: Corpus) -> Corpus:
    return Corpus(c.sentences + tuple(s.lowercased() for s in c), c.name)


def split_corpus(
    c: Corpus,
    ratios: Sequence[float] = (0.80, 0.15, 0.05),
    seed: int = 0,
) -> tuple[Corpus, Corpus, Corpus]:
    if len(ratios) != 3 or any(r < 0 for r in ratios) or not math.isclose(sum(ratios), 1.0, abs_tol=1e-9):
        raise ValueError(f"ratios must be three non-negative numbers summing to 1, got {ratios}")
    n = len(c)
    if n < 20:
        raise ValueError(f"corpus too small to split: {n} sentences (need at least 20)")
    order = list(range(n))
    random.Random(seed).shuffle(order)
    n_train = math.floor(ratios[0] * n + 1e-9)
    n_val = math.floor(ratios[1] * n + 1e-9)
    pick = [c.sentences[i] for i in order]
    return (
        Corpus(tuple(pick[:n_train]), f"{c.name}.train"),
        Corpus(tuple(pick[n_train : n_train + n_val]), f"{c.name}.val"),
        Corpus(tuple(pick[n_train + n_val :]), f"{c.name}.test"),
    )
