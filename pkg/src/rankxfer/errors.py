"""Exception hierarchy.

Everything raised on bad input derives from :class:`RankXferError` so
callers (the CLI in particular) can separate data problems from bugs.
"""


class RankXferError(Exception):
    """Base class for all data and validation errors."""


class DimensionMismatch(RankXferError, ValueError):
    pass


class LengthMismatch(RankXferError, ValueError):
    pass


class ZeroHistogram(RankXferError, ValueError):
    pass


class MissingGroundTruth(RankXferError, ValueError):
    pass


class MissingScores(RankXferError, ValueError):
    pass


class InvalidLabels(RankXferError, ValueError):
    pass


class NoPairs(RankXferError, ValueError):
    pass


class NonFinite(RankXferError, FloatingPointError):
    pass


class TooFewImages(RankXferError, ValueError):
    pass


class DegenerateLabels(RankXferError, ValueError):
    pass


class InsufficientClasses(RankXferError, ValueError):
    pass


class VersionMismatch(RankXferError, ValueError):
    pass


class ParseError(RankXferError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(RankXferError, ValueError):
    def __init__(self, image_id, reason):
        self.image_id = image_id
        self.reason = reason
        super().__init__(f"image {image_id!r}: {reason}")
