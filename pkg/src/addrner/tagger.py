"""Linear-chain sequence tagger trained with the averaged structured perceptron.

Scores are ``sum_i emission(i, tag_i) + sum_i transition(tag_{i-1}, tag_i)``;
decoding is Viterbi restricted to BIO-valid paths. A gazetteer-driven rule
tagger is provided as a baseline.
"""

from __future__ import annotations

import hashlib
import json
import logging
import random
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .bio import NUM_TAGS, TAGS, Corpus, Tag, TaggedSentence, dumps_corpus, is_valid_transition
from .errors import ModelFormatError, ModelVersionError
from .gazetteer import Gazetteer, lookup_phrase

log = logging.getLogger(__name__)

FEATURE_TEMPLATE_VERSION = 1
MODEL_FORMAT = "addrner-tagger"
MODEL_FORMAT_VERSION = 1

# ALLOWED[p, c]: may tag c follow tag p
ALLOWED = np.array(
    [[is_valid_transition(p, c) for c in TAGS] for p in TAGS], dtype=bool
)
START_ALLOWED = np.array([is_valid_transition(None, c) for c in TAGS], dtype=bool)


# --- features ----------------------------------------------------------------


def word_shape(token: str) -> str:
    out = []
    for ch in token:
        if ch.isupper():
            c = "X"
        elif ch.isalpha():
            c = "x"
        elif ch.isdigit():
            c = "d"
        else:
            c = ch
        # letter runs longer than 3 collapse; digit runs stay exact
        if c in "Xx" and len(out) >= 3 and out[-1] == out[-2] == out[-3] == c:
            continue
        out.append(c)
    return "".join(out)


def _postcode_head(tokens: Sequence[str], i: int) -> bool:
    tok = tokens[i]
    if tok.isdigit() and len(tok) == 5:
        return True
    return (
        tok.isdigit()
        and len(tok) == 3
        and i + 1 < len(tokens)
        and tokens[i + 1].isdigit()
        and len(tokens[i + 1]) == 2
    )


def _gazetteer_marks(tokens: Sequence[str], g: Gazetteer) -> list[set[str]]:
    marks: list[set[str]] = [set() for _ in tokens]
    for kind, short in (("street", "street"), ("municipality", "muni")):
        for i in range(len(tokens)):
            n = lookup_phrase(g, kind, tokens, i, case_insensitive=True)
            if n:
                marks[i].add(f"gaz_{short}=B")
                for j in range(i + 1, i + n):
                    marks[j].add(f"gaz_{short}=I")
    return marks


def sentence_features(tokens: Sequence[str], g: Gazetteer) -> list[list[str]]:
    """Feature strings for every position; deduplicated, sorted."""
    n = len(tokens)
    lower = [t.lower() for t in tokens]
    gaz = _gazetteer_marks(tokens, g)
    out = []
    for i, tok in enumerate(tokens):
        lw = lower[i]
        f = {
            "bias",
            "w=" + lw,
            "shape=" + word_shape(tok),
            "ndigits=%d" % sum(ch.isdigit() for ch in tok),
            "prev=" + (lower[i - 1] if i > 0 else "<s>"),
            "next=" + (lower[i + 1] if i + 1 < n else "</s>"),
        }
        for k in (1, 2, 3):
            f.add(f"p{k}=" + lw[:k])
            f.add(f"s{k}=" + lw[-k:])
        if tok.isdigit():
            f.add("all_digits")
        if "/" in tok:
            f.add("has_slash")
        if tok.islower():
            f.add("is_lower")
        if i == 0:
            f.add("first")
        if _postcode_head(tokens, i):
            f.add("postcode_shape")
        if i > 0 and tok.isdigit() and len(tok) == 2 and tokens[i - 1].isdigit() and len(tokens[i - 1]) == 3:
            f.add("postcode_tail")
        f.update(gaz[i])
        f.update("prev_" + m for m in (gaz[i - 1] if i > 0 else ()))
        f.update("next_" + m for m in (gaz[i + 1] if i + 1 < n else ()))
        out.append(sorted(f))
    return out


def extract_features(tokens: Sequence[str], i: int, g: Gazetteer) -> list[str]:
    if not 0 <= i < len(tokens):
        raise IndexError(f"position {i} out of range for {len(tokens)} tokens")
    return sentence_features(tokens, g)[i]


# --- decoding ------------------------------------------------------------------


def viterbi_decode(emissions: np.ndarray, transitions: np.ndarray) -> list[Tag]:
    """Best BIO-valid tag path for an ``(L, 9)`` emission matrix.

    Ties go to the tag that comes first in the ``Tag`` order.
    """
    emissions = np.asarray(emissions, dtype=float)
    if emissions.ndim != 2 or emissions.shape[0] == 0:
        raise ValueError("need at least one position")
    if emissions.shape[1] != NUM_TAGS:
        raise ValueError(f"expected {NUM_TAGS} tag columns, got {emissions.shape[1]}")
    trans = np.where(ALLOWED, np.asarray(transitions, dtype=float), -np.inf)
    length = emissions.shape[0]
    back = np.zeros((length, NUM_TAGS), dtype=np.int64)
    delta = np.where(START_ALLOWED, emissions[0], -np.inf)
    for i in range(1, length):
        cand = delta[:, None] + trans
        back[i] = np.argmax(cand, axis=0)
        delta = cand[back[i], np.arange(NUM_TAGS)] + emissions[i]
    best = [int(np.argmax(delta))]
    for i in range(length - 1, 0, -1):
        best.append(int(back[i, best[-1]]))
    best.reverse()
    return [TAGS[k] for k in best]


def path_score(emissions: np.ndarray, transitions: np.ndarray, tags: Sequence[Tag]) -> float:
    idx = [t.index for t in tags]
    score = sum(float(emissions[i, k]) for i, k in enumerate(idx))
    score += sum(float(transitions[a, b]) for a, b in zip(idx, idx[1:]))
    return score


# --- model ---------------------------------------------------------------------


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 15
    seed: int = 0
    shuffle_each_epoch: bool = True
    early_stop_patience: int = 3

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.early_stop_patience < 1:
            raise ValueError("early_stop_patience must be >= 1")


@dataclass(frozen=True, eq=False)
class TaggerModel:
    features: tuple[str, ...]
    emission: np.ndarray  # (len(features), 9)
    transition: np.ndarray  # (9, 9), rows = previous tag
    feature_template_version: int = FEATURE_TEMPLATE_VERSION
    metadata: dict = field(default_factory=dict)

    @cached_property
    def index(self) -> dict[str, int]:
        return {f: i for i, f in enumerate(self.features)}

    def emissions_for(self, tokens: Sequence[str], g: Gazetteer) -> np.ndarray:
        ids, offsets = _encode(sentence_features(tokens, g), self.index)
        return _emissions(self.emission, ids, offsets, len(tokens))


def _encode(feats: list[list[str]], index: dict[str, int]) -> tuple[np.ndarray, np.ndarray]:
    ids: list[int] = []
    offsets = []
    for pos in feats:
        offsets.append(len(ids))
        ids.extend(index[f] for f in pos if f in index)
    return np.asarray(ids, dtype=np.int64), np.asarray(offsets, dtype=np.int64)


def _emissions(weights: np.ndarray, ids: np.ndarray, offsets: np.ndarray, length: int) -> np.ndarray:
    out = np.zeros((length, NUM_TAGS))
    if len(ids) == 0:
        return out
    # reduceat misbehaves on empty segments; positions with no known feature stay 0
    counts = np.diff(np.append(offsets, len(ids)))
    nonempty = counts > 0
    out[nonempty] = np.add.reduceat(weights[ids], offsets[nonempty], axis=0)
    return out


def corpus_fingerprint(c: Corpus) -> str:
    return hashlib.sha256(dumps_corpus(c).encode("utf-8")).hexdigest()


@dataclass
class _Encoded:
    ids: np.ndarray
    offsets: np.ndarray
    gold: np.ndarray


def _encode_corpus(c: Corpus, g: Gazetteer, index: dict[str, int]) -> list[_Encoded]:
    out = []
    for s in c:
        ids, offsets = _encode(sentence_features(s.tokens, g), index)
        out.append(_Encoded(ids, offsets, np.array([t.index for t in s.tags])))
    return out


def _accuracy(enc: list[_Encoded], W: np.ndarray, T: np.ndarray) -> float:
    correct = total = 0
    for e in enc:
        em = _emissions(W, e.ids, e.offsets, len(e.gold))
        pred = np.array([t.index for t in viterbi_decode(em, T)])
        correct += int((pred == e.gold).sum())
        total += len(e.gold)
    return correct / total if total else 0.0


def train(
    train: Corpus,
    validation: Corpus,
    g: Gazetteer,
    cfg: TrainConfig = TrainConfig(),
    init: TaggerModel | None = None,
) -> TaggerModel:
    """Averaged structured perceptron with validation-based early stopping."""
    if len(train) == 0 or len(validation) == 0:
        raise ValueError("training and validation corpora must be non-empty")
    if init is not None and init.feature_template_version != FEATURE_TEMPLATE_VERSION:
        raise ModelVersionError(
            f"cannot warm-start from feature template v{init.feature_template_version}; "
            f"this build uses v{FEATURE_TEMPLATE_VERSION}"
        )

    train_feats = [sentence_features(s.tokens, g) for s in train]
    vocab = {f for sent in train_feats for pos in sent for f in pos}
    if init is not None:
        vocab.update(init.features)
    features = tuple(sorted(vocab))
    index = {f: i for i, f in enumerate(features)}

    W = np.zeros((len(features), NUM_TAGS))
    T = np.zeros((NUM_TAGS, NUM_TAGS))
    if init is not None:
        rows = [index[f] for f in init.features]
        W[rows] = init.emission
        T[:] = init.transition
    # running sums of step-weighted updates for averaging
    U = np.zeros_like(W)
    UT = np.zeros_like(T)

    enc = []
    for s, feats in zip(train, train_feats):
        ids, offsets = _encode(feats, index)
        enc.append(_Encoded(ids, offsets, np.array([t.index for t in s.tags])))
    val_enc = _encode_corpus(validation, g, index)

    rng = random.Random(cfg.seed)
    order = list(range(len(enc)))
    step = 1
    best_acc = -1.0
    best = None
    best_epoch = 0
    stale = 0
    history = []
    for epoch in range(1, cfg.epochs + 1):
        if cfg.shuffle_each_epoch:
            rng.shuffle(order)
        mistakes = 0
        for k in order:
            e = enc[k]
            em = _emissions(W, e.ids, e.offsets, len(e.gold))
            pred = np.array([t.index for t in viterbi_decode(em, T)])
            if not np.array_equal(pred, e.gold):
                mistakes += 1
                _update(W, U, T, UT, e, pred, step)
            step += 1
        W_avg = W - U / step
        T_avg = T - UT / step
        acc = _accuracy(val_enc, W_avg, T_avg)
        history.append(round(acc, 6))
        log.info("epoch %d: %d mistakes, validation accuracy %.4f", epoch, mistakes, acc)
        if acc > best_acc:
            best_acc, best, best_epoch, stale = acc, (W_avg, T_avg), epoch, 0
        else:
            stale += 1
            if stale >= cfg.early_stop_patience:
                break

    metadata = {
        "seed": cfg.seed,
        "epochs": cfg.epochs,
        "epochs_run": len(history),
        "best_epoch": best_epoch,
        "validation_accuracy": history,
        "train_fingerprint": corpus_fingerprint(train),
        "train_sentences": len(train),
    }
    return TaggerModel(features, best[0], best[1], FEATURE_TEMPLATE_VERSION, metadata)


def _update(W, U, T, UT, e: _Encoded, pred: np.ndarray, step: int) -> None:
    gold = e.gold
    ends = np.append(e.offsets[1:], len(e.ids))
    for i in np.nonzero(gold != pred)[0]:
        ids = e.ids[e.offsets[i] : ends[i]]
        W[ids, gold[i]] += 1.0
        W[ids, pred[i]] -= 1.0
        U[ids, gold[i]] += step
        U[ids, pred[i]] -= step
    for i in range(1, len(gold)):
        a, b = gold[i - 1], gold[i]
        c, d = pred[i - 1], pred[i]
        if (a, b) != (c, d):
            T[a, b] += 1.0
            T[c, d] -= 1.0
            UT[a, b] += step
            UT[c, d] -= step


def tag(model: TaggerModel, tokens: Sequence[str], g: Gazetteer) -> TaggedSentence:
    tokens = tuple(tokens)
    if not tokens:
        raise ValueError("cannot tag an empty token list")
    em = model.emissions_for(tokens, g)
    return TaggedSentence(tokens, tuple(viterbi_decode(em, model.transition)))


def tag_corpus(model: TaggerModel, c: Corpus, g: Gazetteer) -> Corpus:
    return Corpus(tuple(tag(model, s.tokens, g) for s in c), f"{c.name}.pred")


# --- persistence ---------------------------------------------------------------


def model_to_json(model: TaggerModel) -> str:
    doc = {
        "format": MODEL_FORMAT,
        "format_version": MODEL_FORMAT_VERSION,
        "feature_template_version": model.feature_template_version,
        "tags": [t.value for t in TAGS],
        "metadata": model.metadata,
        "features": list(model.features),
        "emission": model.emission.tolist(),
        "transition": model.transition.tolist(),
    }
    return json.dumps(doc, ensure_ascii=False, sort_keys=True, separators=(",", ":")) + "\n"


def save_model(model: TaggerModel, path: str | Path) -> None:
    Path(path).write_text(model_to_json(model), encoding="utf-8")


def load_model(path: str | Path) -> TaggerModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ModelFormatError(f"corrupt model file {path}: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise ModelFormatError(f"{path} is not a tagger model file")
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise ModelVersionError(
            f"unsupported model format version {doc.get('format_version')!r} "
            f"(expected {MODEL_FORMAT_VERSION})"
        )
    if doc.get("feature_template_version") != FEATURE_TEMPLATE_VERSION:
        raise ModelVersionError(
            f"model uses feature template v{doc.get('feature_template_version')}, "
            f"this build uses v{FEATURE_TEMPLATE_VERSION}"
        )
    if doc.get("tags") != [t.value for t in TAGS]:
        raise ModelFormatError("model tag set does not match")
    try:
        features = tuple(doc["features"])
        emission = np.array(doc["emission"], dtype=float).reshape(len(features), NUM_TAGS)
        transition = np.array(doc["transition"], dtype=float).reshape(NUM_TAGS, NUM_TAGS)
    except (KeyError, ValueError, TypeError) as exc:
        raise ModelFormatError(f"corrupt model file {path}: {exc}") from None
    return TaggerModel(features, emission, transition, FEATURE_TEMPLATE_VERSION, doc.get("metadata", {}))


# --- rule baseline -------------------------------------------------------------

_HOUSENUMBER_TOKEN = re.compile(r"^\d+(?:/\d+)*$")


def rule_baseline(tokens: Sequence[str], g: Gazetteer) -> TaggedSentence:
    """Longest gazetteer match, then digit-shape rules; everything else O."""
    tokens = tuple(tokens)
    tags = [Tag.O] * len(tokens)
    i = 0
    while i < len(tokens):
        m = lookup_phrase(g, "municipality", tokens, i)
        s = lookup_phrase(g, "street", tokens, i)
        if m or s:
            entity, n = ("Municipality", m) if m >= s else ("Street", s)
            tags[i] = Tag.begin(entity)
            for j in range(i + 1, i + n):
                tags[j] = Tag.inside(entity)
            i += n
            continue
        tok = tokens[i]
        if tok.isdigit() and len(tok) == 5:
            tags[i] = Tag.B_POSTCODE
        elif _postcode_head(tokens, i):
            tags[i], tags[i + 1] = Tag.B_POSTCODE, Tag.I_POSTCODE
            i += 1
        elif _HOUSENUMBER_TOKEN.match(tok):
            tags[i] = Tag.B_HOUSENUMBER
        i += 1
    return TaggedSentence(tokens, tuple(tags))
