"""Street and municipality name lists, plus postcode / house-number synthesis.

List files are plain UTF-8 text, one name per line. Names may contain
spaces (``Banská Bystrica``); blank lines and duplicates are dropped and
every entry is NFC-normalized.
"""

from __future__ import annotations

import logging
import random
import unicodedata
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import GazetteerError

log = logging.getLogger(__name__)

KINDS = ("street", "municipality")


def _normalize(name: str) -> str:
    return " ".join(unicodedata.normalize("NFC", name).split())


@dataclass(frozen=True)
class Gazetteer:
    streets: frozenset[str]
    municipalities: frozenset[str]
    _sorted: dict = field(init=False, repr=False, compare=False)
    _folded: dict = field(init=False, repr=False, compare=False)
    _exact: dict = field(init=False, repr=False, compare=False)
    _max_words: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        streets = frozenset(_normalize(s) for s in self.streets if s.strip())
        munis = frozenset(_normalize(s) for s in self.municipalities if s.strip())
        object.__setattr__(self, "streets", streets)
        object.__setattr__(self, "municipalities", munis)
        by_kind = {"street": streets, "municipality": munis}
        object.__setattr__(self, "_sorted", {k: sorted(v) for k, v in by_kind.items()})
        object.__setattr__(self, "_exact", by_kind)
        object.__setattr__(
            self, "_folded", {k: frozenset(n.casefold() for n in v) for k, v in by_kind.items()}
        )
        object.__setattr__(
            self,
            "_max_words",
            {k: max((len(n.split()) for n in v), default=0) for k, v in by_kind.items()},
        )

    def names(self, kind: str) -> list[str]:
        """Entries of ``kind`` in sorted order."""
        _check_kind(kind)
        return self._sorted[kind]

    def contains(self, kind: str, name: str, case_insensitive: bool = False) -> bool:
        _check_kind(kind)
        name = _normalize(name)
        if case_insensitive:
            return name.casefold() in self._folded[kind]
        return name in self._exact[kind]

    def counts(self) -> dict[str, int]:
        return {"street": len(self.streets), "municipality": len(self.municipalities)}


def _check_kind(kind: str) -> None:
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")


def read_name_list(path: str | Path) -> list[str]:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise GazetteerError(f"cannot read {path}: {exc.strerror}") from None
    names = []
    for lineno, raw in enumerate(data.split(b"\n"), 1):
        try:
            line = raw.decode("utf-8")
        except UnicodeDecodeError:
            raise GazetteerError(f"{path}:{lineno}: invalid UTF-8") from None
        line = line.strip().lstrip("\ufeff")
        if line:
            names.append(line)
    return names


def load_gazetteer(street_path: str | Path, municipality_path: str | Path) -> Gazetteer:
    streets = read_name_list(street_path)
    munis = read_name_list(municipality_path)
    for kind, names, path in (("street", streets, street_path), ("municipality", munis, municipality_path)):
        if not names:
            raise GazetteerError(f"empty gazetteer: no {kind} names in {path}")
    g = Gazetteer(frozenset(streets), frozenset(munis))
    log.info("loaded gazetteer: %d streets, %d municipalities", len(g.streets), len(g.municipalities))
    return g


def bundled_paths() -> tuple[Path, Path]:
    base = resources.files("addrner") / "data"
    return Path(str(base / "streets.txt")), Path(str(base / "municipalities.txt"))


def load_bundled() -> Gazetteer:
    """The small sample lists shipped with the package."""
    return load_gazetteer(*bundled_paths())


def sample_name(g: Gazetteer, kind: str, rng: random.Random) -> str:
    names = g.names(kind)
    if not names:
        raise GazetteerError(f"empty gazetteer: no {kind} names")
    return names[rng.randrange(len(names))]


def lookup_phrase(
    g: Gazetteer,
    kind: str,
    tokens: list[str] | tuple[str, ...],
    start: int,
    case_insensitive: bool = True,
) -> int:
    """Length of the longest entry matching ``tokens[start:start+n]``, or 0."""
    _check_kind(kind)
    table = g._folded[kind] if case_insensitive else g._exact[kind]
    longest = min(g._max_words[kind], len(tokens) - start)
    for n in range(longest, 0, -1):
        phrase = unicodedata.normalize("NFC", " ".join(tokens[start : start + n]))
        if case_insensitive:
            phrase = phrase.casefold()
        if phrase in table:
            return n
    return 0


# --- synthesized values ------------------------------------------------------


@dataclass(frozen=True)
class PostcodeSpec:
    digits: str
    spaced: bool

    def __post_init__(self):
        if len(self.digits) != 5 or not self.digits.isdigit() or not self.digits.isascii():
            raise ValueError(f"postcode must be 5 digits, got {self.digits!r}")

    def tokens(self) -> list[str]:
        if self.spaced:
            return [self.digits[:3], self.digits[3:]]
        return [self.digits]


def make_postcode(rng: random.Random) -> PostcodeSpec:
    digits = "".join(str(rng.randrange(10)) for _ in range(5))
    return PostcodeSpec(digits, spaced=rng.random() < 0.5)


COMPOSITE_HOUSE_NUMBER_RATE = 0.2


def make_house_number(rng: random.Random) -> tuple[int, int | None]:
    """(number, optional suffix after a slash), e.g. (834, 12) for ``834/12``."""
    n = rng.randint(1, 999)
    sub = rng.randint(1, 99) if rng.random() < COMPOSITE_HOUSE_NUMBER_RATE else None
    return n, sub


def format_house_number(n: int, sub: int | None) -> str:
    return f"{n}/{sub}" if sub is not None else str(n)
