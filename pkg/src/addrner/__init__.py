"""Slovak address named-entity recognition toolkit."""

from .bio import Corpus, EntitySpan, Tag, TaggedSentence, extract_entities, read_corpus, validate_bio, write_corpus
from .gazetteer import Gazetteer, load_bundled, load_gazetteer, lookup_phrase, sample_name
from .generate import generate_pattern, lowercase_duplicate, render_template, split_corpus
from .evaluate import confusion_matrix, token_accuracy
from .tagger import TaggerModel, TrainConfig, load_model, rule_baseline, save_model, tag, train

__version__ = "0.1.0"

__all__ = [
    "Corpus", "EntitySpan", "Gazetteer", "Tag", "TaggedSentence", "TaggerModel", "TrainConfig",
    "confusion_matrix", "extract_entities", "generate_pattern", "load_bundled", "load_gazetteer",
    "load_model", "lookup_phrase", "lowercase_duplicate", "read_corpus", "render_template",
    "rule_baseline", "sample_name", "save_model", "split_corpus", "tag", "token_accuracy",
    "train", "validate_bio", "write_corpus",
]
