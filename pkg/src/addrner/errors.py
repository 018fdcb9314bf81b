"""Exception types shared across the package."""

from __future__ import annotations


class AddrNerError(Exception):
    """Base class for all package errors."""


class BioValidationError(AddrNerError, ValueError):
    def __init__(self, index: int, message: str | None = None):
        self.index = index
        super().__init__(message or f"BIO violation at index {index}")


class CorpusFormatError(AddrNerError, ValueError):
    """Malformed corpus record. ``line`` is 1-based."""

    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class UnknownTagError(CorpusFormatError):
    def __init__(self, line: int, tag: str):
        self.tag = tag
        super().__init__(line, f"unknown tag {tag!r}")


class GazetteerError(AddrNerError, ValueError):
    pass


class TemplateError(AddrNerError, ValueError):
    pass


class AlignmentError(AddrNerError, ValueError):
    def __init__(self, sentence: int, reason: str):
        self.sentence = sentence
        super().__init__(f"sentence {sentence}: {reason}")


class ModelFormatError(AddrNerError, ValueError):
    pass


class ModelVersionError(ModelFormatError):
    pass


class AugmentError(AddrNerError, RuntimeError):
    pass
