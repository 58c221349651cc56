"""Exception types shared across the package.

Everything raised on bad data derives from :class:`BevCodecError` so callers
(notably the CLI) can separate data errors from programming errors.
"""

from __future__ import annotations


class BevCodecError(Exception):
    """Base class for all data/usage errors raised by this package."""


# --- scene records ---------------------------------------------------------

class MalformedRecord(BevCodecError):
    """A scene record line is syntactically invalid or missing fields."""


class UnknownLabel(BevCodecError):
    """An object label is not part of the configured taxonomy."""


class NonFiniteCoordinate(BevCodecError):
    """A coordinate is NaN or infinite."""


class BrokenChain(BevCodecError):
    """prev/next links disagree with the timestamp order of a sequence."""


class DuplicateTimestamp(BevCodecError):
    """Two scenes in one sequence share a timestamp."""


class NotConsecutive(BevCodecError):
    """The two scenes of a pair are not linked consecutive scenes."""


# --- token codec -----------------------------------------------------------

class GrammarError(BevCodecError):
    """A token stream violates the serialization grammar.

    ``position`` is the 0-based index of the offending token.
    """

    def __init__(self, position: int, message: str):
        super().__init__(f"token {position}: {message}")
        self.position = position


class ShapeError(BevCodecError):
    """A parsed scene has the wrong number of rows or columns."""


class NoSentinels(BevCodecError):
    """A target stream does not start with sentinel 0."""


# --- masking ---------------------------------------------------------------

class GridTooSmall(BevCodecError):
    """The grid cannot host a maskable central region."""


class RegionTooSmall(BevCodecError):
    """The central region has fewer cells than the mask count requires."""


# --- metrics ---------------------------------------------------------------

class SpanCountMismatch(BevCodecError):
    """Prediction and gold span lists have different lengths."""


class EmptyInput(BevCodecError):
    """An aggregate was requested over zero reports."""


# --- baselines -------------------------------------------------------------

class UnfittedModel(BevCodecError):
    """Prediction was requested from a model that was never fitted."""


# --- datagen ---------------------------------------------------------------

class ConfigError(BevCodecError):
    """A generator configuration value is out of range."""


class TooFewSequences(BevCodecError):
    """Not enough sequences to honor the split ratios."""
