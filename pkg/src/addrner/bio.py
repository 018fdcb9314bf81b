"""Tags, tagged sentences, BIO validity, entity spans and corpus file IO.

Two on-disk shapes are supported, both UTF-8 with LF newlines:

* ``jsonl``: one ``{"tokens": [...], "tags": [...]}`` object per line.
* ``conll``: one ``token<TAB>tag`` pair per line, a blank line between
  sentences.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .errors import BioValidationError, CorpusFormatError, UnknownTagError

ENTITY_TYPES = ("Street", "Housenumber", "Municipality", "Postcode")


class Tag(str, enum.Enum):
    O = "O"
    B_STREET = "B-Street"
    I_STREET = "I-Street"
    B_HOUSENUMBER = "B-Housenumber"
    I_HOUSENUMBER = "I-Housenumber"
    B_MUNICIPALITY = "B-Municipality"
    I_MUNICIPALITY = "I-Municipality"
    B_POSTCODE = "B-Postcode"
    I_POSTCODE = "I-Postcode"

    def __str__(self) -> str:
        return self.value

    @property
    def index(self) -> int:
        return _TAG_INDEX[self]

    @property
    def prefix(self) -> str:
        return self.value[0]

    @property
    def entity(self) -> str | None:
        return None if self is Tag.O else self.value[2:]

    @classmethod
    def parse(cls, text: str) -> "Tag":
        try:
            return cls(text)
        except ValueError:
            raise ValueError(f"unknown tag {text!r}") from None

    @classmethod
    def begin(cls, entity: str) -> "Tag":
        return cls("B-" + entity)

    @classmethod
    def inside(cls, entity: str) -> "Tag":
        return cls("I-" + entity)


TAGS: tuple[Tag, ...] = tuple(Tag)
_TAG_INDEX = {t: i for i, t in enumerate(TAGS)}
NUM_TAGS = len(TAGS)


def is_valid_transition(prev: Tag | None, cur: Tag) -> bool:
    """``prev`` is None at sentence start."""
    if cur.prefix != "I":
        return True
    return prev is not None and prev is not Tag.O and prev.entity == cur.entity


def validate_bio(tags: Sequence[Tag]) -> int | None:
    """Return None when ``tags`` is BIO-valid, else the first violating index."""
    prev = None
    for i, tag in enumerate(tags):
        if not is_valid_transition(prev, tag):
            return i
        prev = tag
    return None


def _check_token(token: str) -> None:
    if not isinstance(token, str) or not token:
        raise ValueError("token must be a non-empty string")
    if any(ch.isspace() for ch in token):
        raise ValueError(f"token contains whitespace: {token!r}")


@dataclass(frozen=True)
class TaggedSentence:
    tokens: tuple[str, ...]
    tags: tuple[Tag, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "tags", tuple(Tag(t) for t in self.tags))
        if not self.tokens:
            raise ValueError("sentence must contain at least one token")
        if len(self.tokens) != len(self.tags):
            raise ValueError(
                f"length mismatch: {len(self.tokens)} tokens, {len(self.tags)} tags"
            )
        for tok in self.tokens:
            _check_token(tok)
        bad = validate_bio(self.tags)
        if bad is not None:
            raise BioValidationError(bad)

    def __len__(self) -> int:
        return len(self.tokens)

    def lowercased(self) -> "TaggedSentence":
        return TaggedSentence(tuple(t.lower() for t in self.tokens), self.tags)


@dataclass(frozen=True)
class EntitySpan:
    entity_type: str
    start: int
    end: int  # inclusive

    def __iter__(self):
        return iter((self.entity_type, self.start, self.end))


def spans_from_tags(tags: Sequence[Tag]) -> list[EntitySpan]:
    bad = validate_bio(tags)
    if bad is not None:
        raise BioValidationError(bad)
    spans: list[EntitySpan] = []
    start = None
    for i, tag in enumerate(tags):
        if tag.prefix == "I":
            continue
        if start is not None:
            spans.append(EntitySpan(tags[start].entity, start, i - 1))
            start = None
        if tag.prefix == "B":
            start = i
    if start is not None:
        spans.append(EntitySpan(tags[start].entity, start, len(tags) - 1))
    return spans


def extract_entities(sentence: TaggedSentence | Sequence[Tag]) -> list[EntitySpan]:
    """Spans for each maximal ``B-X (I-X)*`` run, left to right."""
    tags = sentence.tags if isinstance(sentence, TaggedSentence) else sentence
    return spans_from_tags(tags)


def tokenize(text: str) -> list[str]:
    return text.split()


@dataclass(frozen=True)
class Corpus:
    sentences: tuple[TaggedSentence, ...]
    name: str = field(default="corpus", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "sentences", tuple(self.sentences))

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self) -> Iterator[TaggedSentence]:
        return iter(self.sentences)

    def __getitem__(self, i):
        return self.sentences[i]

    def __add__(self, other: "Corpus") -> "Corpus":
        return Corpus(self.sentences + other.sentences, self.name)

    def num_tokens(self) -> int:
        return sum(len(s) for s in self.sentences)


# --- file IO ---------------------------------------------------------------

FORMATS = ("jsonl", "conll")


def guess_format(path: str | Path) -> str:
    suffix = Path(path).suffix.lower()
    return "conll" if suffix in (".conll", ".tsv", ".bio") else "jsonl"


def _parse_tags(raw: Iterable[str], line: int) -> list[Tag]:
    tags = []
    for t in raw:
        if not isinstance(t, str):
            raise CorpusFormatError(line, f"tag must be a string, got {t!r}")
        try:
            tags.append(Tag(t))
        except ValueError:
            raise UnknownTagError(line, t) from None
    return tags


def _make_sentence(tokens: list, tags: list, line: int) -> TaggedSentence:
    tag_objs = _parse_tags(tags, line)
    if len(tokens) != len(tag_objs):
        raise CorpusFormatError(
            line, f"length mismatch: {len(tokens)} tokens vs {len(tag_objs)} tags"
        )
    try:
        return TaggedSentence(tuple(tokens), tuple(tag_objs))
    except BioValidationError as exc:
        raise CorpusFormatError(line, f"BIO violation at token {exc.index}") from None
    except (ValueError, TypeError) as exc:
        raise CorpusFormatError(line, str(exc)) from None


def _read_jsonl(lines: list[str]) -> list[TaggedSentence]:
    out = []
    for lineno, raw in enumerate(lines, 1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise CorpusFormatError(lineno, f"invalid JSON: {exc.msg}") from None
        if not isinstance(obj, dict) or "tokens" not in obj or "tags" not in obj:
            raise CorpusFormatError(lineno, "record needs 'tokens' and 'tags'")
        tokens, tags = obj["tokens"], obj["tags"]
        if not isinstance(tokens, list) or not isinstance(tags, list):
            raise CorpusFormatError(lineno, "'tokens' and 'tags' must be arrays")
        if not all(isinstance(t, str) for t in tokens):
            raise CorpusFormatError(lineno, "tokens must be strings")
        out.append(_make_sentence(tokens, tags, lineno))
    return out


def _read_conll(lines: list[str]) -> list[TaggedSentence]:
    out = []
    tokens: list[str] = []
    tags: list[str] = []
    first_line = 1
    for lineno, raw in enumerate(lines, 1):
        if not raw.strip():
            if tokens:
                out.append(_make_sentence(tokens, tags, first_line))
                tokens, tags = [], []
            continue
        cols = raw.split("\t")
        if len(cols) != 2:
            raise CorpusFormatError(lineno, f"expected 2 tab-separated columns, got {len(cols)}")
        if not tokens:
            first_line = lineno
        tok, tag = cols
        try:
            Tag(tag)
        except ValueError:
            raise UnknownTagError(lineno, tag) from None
        tokens.append(tok)
        tags.append(tag)
    if tokens:
        out.append(_make_sentence(tokens, tags, first_line))
    return out


def loads_corpus(text: str, fmt: str = "jsonl", name: str = "corpus") -> Corpus:
    lines = text.split("\n")
    if fmt == "jsonl":
        sents = _read_jsonl(lines)
    elif fmt == "conll":
        sents = _read_conll(lines)
    else:
        raise ValueError(f"unknown corpus format {fmt!r}")
    return Corpus(tuple(sents), name)


def dumps_corpus(corpus: Corpus, fmt: str = "jsonl") -> str:
    """Canonical serialization; identical corpora give identical text."""
    if fmt == "jsonl":
        return "".join(
            json.dumps(
                {"tokens": list(s.tokens), "tags": [t.value for t in s.tags]},
                ensure_ascii=False,
            )
            + "\n"
            for s in corpus
        )
    if fmt == "conll":
        blocks = [
            "".join(f"{tok}\t{tag.value}\n" for tok, tag in zip(s.tokens, s.tags))
            for s in corpus
        ]
        return "\n".join(blocks)
    raise ValueError(f"unknown corpus format {fmt!r}")


def read_corpus(path: str | Path, fmt: str | None = None) -> Corpus:
    path = Path(path)
    fmt = fmt or guess_format(path)
    data = path.read_bytes()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        line = data[: exc.start].count(b"\n") + 1
        raise CorpusFormatError(line, "invalid UTF-8") from None
    return loads_corpus(text, fmt, name=path.stem)


def write_corpus(corpus: Corpus, path: str | Path, fmt: str | None = None) -> None:
    path = Path(path)
    fmt = fmt or guess_format(path)
    path.write_bytes(dumps_corpus(corpus, fmt).encode("utf-8"))
