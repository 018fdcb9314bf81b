"""Confusion matrices, accuracy, per-class and entity metrics, error mining."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .bio import ENTITY_TYPES, NUM_TAGS, TAGS, Corpus, Tag, extract_entities
from .errors import AlignmentError

DEFAULT_TOP_K = 10


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """Rows are gold tags, columns predicted tags, both in ``Tag`` order."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (NUM_TAGS, NUM_TAGS):
            raise ValueError(f"confusion matrix must be {NUM_TAGS}x{NUM_TAGS}, got {counts.shape}")
        if (counts < 0).any():
            raise ValueError("confusion matrix counts must be non-negative")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    def __eq__(self, other):
        return isinstance(other, ConfusionMatrix) and np.array_equal(self.counts, other.counts)

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.counts + other.counts)

    def __getitem__(self, key: tuple[Tag, Tag]) -> int:
        gold, pred = key
        return int(self.counts[Tag(gold).index, Tag(pred).index])

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def trace(self) -> int:
        return int(np.trace(self.counts))

    def to_text(self) -> str:
        lines = ["# rows: gold, columns: predicted; order: " + " ".join(t.value for t in TAGS)]
        lines += [" ".join(str(int(v)) for v in row) for row in self.counts]
        return "\n".join(lines) + "\n"

    def to_table(self) -> str:
        short = [t.value for t in TAGS]
        width = max(len(s) for s in short) + 1
        head = " " * width + "".join(f"{s:>{width}}" for s in short)
        rows = [
            f"{short[i]:<{width}}" + "".join(f"{int(v):>{width}}" for v in self.counts[i])
            for i in range(NUM_TAGS)
        ]
        return "\n".join([head, *rows])


def read_confusion_matrix(path: str | Path) -> ConfusionMatrix:
    """Nine rows of nine whitespace-separated integers; ``#`` starts a comment."""
    rows = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            rows.append([int(x) for x in line.split()])
        except ValueError:
            raise ValueError(f"{path}: non-integer entry in row {len(rows) + 1}") from None
    if len(rows) != NUM_TAGS or any(len(r) != NUM_TAGS for r in rows):
        raise ValueError(f"{path}: expected {NUM_TAGS} rows of {NUM_TAGS} integers")
    return ConfusionMatrix(np.array(rows))


def _check_aligned(gold: Corpus, pred: Corpus) -> None:
    if len(gold) != len(pred):
        raise AlignmentError(
            min(len(gold), len(pred)),
            f"sentence count mismatch: {len(gold)} gold vs {len(pred)} predicted",
        )
    for i, (g, p) in enumerate(zip(gold, pred)):
        if len(g) != len(p):
            raise AlignmentError(i, f"token count mismatch: {len(g)} gold vs {len(p)} predicted")


def confusion_matrix(gold: Corpus, pred: Corpus) -> ConfusionMatrix:
    _check_aligned(gold, pred)
    counts = np.zeros((NUM_TAGS, NUM_TAGS), dtype=np.int64)
    for g, p in zip(gold, pred):
        for gt, pt in zip(g.tags, p.tags):
            counts[gt.index, pt.index] += 1
    return ConfusionMatrix(counts)


def token_accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise ValueError("empty confusion matrix")
    return cm.trace / cm.total


def accuracy_delta(cm_a: ConfusionMatrix, cm_b: ConfusionMatrix) -> float:
    """Percentage-point change in token accuracy from ``cm_a`` to ``cm_b``."""
    return 100.0 * (token_accuracy(cm_b) - token_accuracy(cm_a))


@dataclass(frozen=True)
class PRF:
    precision: float | None
    recall: float | None
    f1: float | None
    support: int

    def as_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1, "support": self.support}


def _prf(tp: int, pred_total: int, gold_total: int) -> PRF:
    p = tp / pred_total if pred_total else None
    r = tp / gold_total if gold_total else None
    if p is None or r is None:
        f = None
    elif p + r == 0:
        f = 0.0
    else:
        f = 2 * p * r / (p + r)
    return PRF(p, r, f, gold_total)


def per_class_prf(cm: ConfusionMatrix) -> dict[Tag, PRF]:
    """Precision from columns, recall from rows; zero denominators give None."""
    if cm.total == 0:
        raise ValueError("empty confusion matrix")
    c = cm.counts
    return {
        t: _prf(int(c[i, i]), int(c[:, i].sum()), int(c[i, :].sum())) for i, t in enumerate(TAGS)
    }


def entity_f1(gold: Corpus, pred: Corpus) -> dict[str, PRF]:
    """Exact-span (type, start, end) matching per entity type."""
    _check_aligned(gold, pred)
    tp: Counter = Counter()
    n_gold: Counter = Counter()
    n_pred: Counter = Counter()
    for g, p in zip(gold, pred):
        gs = set(extract_entities(g))
        ps = set(extract_entities(p))
        for s in gs:
            n_gold[s.entity_type] += 1
        for s in ps:
            n_pred[s.entity_type] += 1
            if s in gs:
                tp[s.entity_type] += 1
    return {e: _prf(tp[e], n_pred[e], n_gold[e]) for e in ENTITY_TYPES if n_gold[e] or n_pred[e]}


@dataclass(frozen=True)
class EvalReport:
    token_accuracy: float
    per_class: dict[Tag, PRF]
    entity_prf: dict[str, PRF]
    confusion: ConfusionMatrix

    def as_dict(self) -> dict:
        return {
            "token_accuracy": self.token_accuracy,
            "per_class": {t.value: m.as_dict() for t, m in self.per_class.items()},
            "entity_prf": {e: m.as_dict() for e, m in self.entity_prf.items()},
            "confusion_matrix": self.confusion.counts.tolist(),
            "tags": [t.value for t in TAGS],
        }

    def to_text(self) -> str:
        lines = [f"token accuracy: {100 * self.token_accuracy:.2f}%", "", self.confusion.to_table(), ""]
        lines.append(f"{'tag':<16}{'prec':>8}{'rec':>8}{'f1':>8}{'support':>9}")
        for t, m in self.per_class.items():
            lines.append(f"{t.value:<16}{_fmt(m.precision)}{_fmt(m.recall)}{_fmt(m.f1)}{m.support:>9}")
        if self.entity_prf:
            lines.append("")
            lines.append(f"{'entity':<16}{'prec':>8}{'rec':>8}{'f1':>8}{'support':>9}")
            for e, m in self.entity_prf.items():
                lines.append(f"{e:<16}{_fmt(m.precision)}{_fmt(m.recall)}{_fmt(m.f1)}{m.support:>9}")
        return "\n".join(lines)


def _fmt(x: float | None) -> str:
    return f"{'-':>8}" if x is None else f"{x:>8.4f}"


def evaluate(gold: Corpus, pred: Corpus) -> EvalReport:
    cm = confusion_matrix(gold, pred)
    return EvalReport(token_accuracy(cm), per_class_prf(cm), entity_f1(gold, pred), cm)


def report_from_matrix(cm: ConfusionMatrix) -> EvalReport:
    return EvalReport(token_accuracy(cm), per_class_prf(cm), {}, cm)


# --- error mining ----------------------------------------------------------


@dataclass(frozen=True)
class ErrorPattern:
    descriptor: str
    rate: float
    support: int
    errors: int

    def as_dict(self) -> dict:
        return {"pattern": self.descriptor, "rate": self.rate, "support": self.support, "errors": self.errors}


@dataclass(frozen=True)
class ErrorPatternReport:
    patterns: tuple[ErrorPattern, ...]

    def __len__(self) -> int:
        return len(self.patterns)

    def __iter__(self):
        return iter(self.patterns)

    def as_dict(self) -> dict:
        return {"patterns": [p.as_dict() for p in self.patterns]}

    def to_text(self) -> str:
        if not self.patterns:
            return "no errors"
        width = max(len(p.descriptor) for p in self.patterns)
        return "\n".join(
            f"{p.descriptor:<{width}}  {p.rate:6.2%}  ({p.errors}/{p.support})" for p in self.patterns
        )


def _first_start(spans, entity: str) -> int | None:
    starts = [s.start for s in spans if s.entity_type == entity]
    return min(starts) if starts else None


def _casing(token: str) -> str:
    return "lowercase" if token == token.lower() else "capitalized"


def _ratio_patterns(
    counts: dict[str, list[int]], min_support: int = 1
) -> Iterable[ErrorPattern]:
    for desc, (errs, support) in counts.items():
        if errs and support >= min_support:
            yield ErrorPattern(desc, errs / support, support, errs)


def mine_error_patterns(gold: Corpus, pred: Corpus, top_k: int = DEFAULT_TOP_K) -> ErrorPatternReport:
    """Rank gold->predicted confusions, unconditioned and split by context.

    For each of the ``top_k`` most frequent confusions the rate is also
    reported conditioned on (a) whether the gold entity precedes or follows
    the entity it was mistaken for, when both types are entities, and (b)
    the token's casing. Patterns are ordered by rate, then support.
    """
    cm = confusion_matrix(gold, pred)
    c = cm.counts
    gold_support = c.sum(axis=1)
    pairs = [
        (int(c[i, j]), i, j) for i in range(NUM_TAGS) for j in range(NUM_TAGS) if i != j and c[i, j] > 0
    ]
    pairs.sort(key=lambda x: (-x[0], x[1], x[2]))
    pairs = pairs[:top_k]

    patterns: list[tuple[int, ErrorPattern]] = []
    for n, i, j in pairs:
        g_tag, p_tag = TAGS[i], TAGS[j]
        base = f"{g_tag.value}→{p_tag.value}"
        patterns.append((2, ErrorPattern(base, n / int(gold_support[i]), int(gold_support[i]), n)))

        order_counts: dict[str, list[int]] = {}
        case_counts: dict[str, list[int]] = {}
        a, b = g_tag.entity, p_tag.entity
        for gs, ps in zip(gold, pred):
            positions = [k for k, t in enumerate(gs.tags) if t is g_tag]
            if not positions:
                continue
            if a and b and a != b:
                spans = extract_entities(gs)
                sa, sb = _first_start(spans, a), _first_start(spans, b)
                if sa is not None and sb is not None:
                    rel = "precedes" if sa < sb else "follows"
                    key = f"{base} | {a.lower()} {rel} {b.lower()}"
                    bucket = order_counts.setdefault(key, [0, 0])
                    for k in positions:
                        bucket[1] += 1
                        bucket[0] += ps.tags[k] is p_tag
            for k in positions:
                key = f"{base} | {_casing(gs.tokens[k])} token"
                bucket = case_counts.setdefault(key, [0, 0])
                bucket[1] += 1
                bucket[0] += ps.tags[k] is p_tag
        patterns.extend((0, p) for p in _ratio_patterns(order_counts))
        patterns.extend((1, p) for p in _ratio_patterns(case_counts))

    patterns.sort(key=lambda kp: (-kp[1].rate, -kp[1].errors, kp[0], kp[1].descriptor))
    return ErrorPatternReport(tuple(p for _, p in patterns))
