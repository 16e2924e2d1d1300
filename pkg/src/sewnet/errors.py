"""Exception hierarchy shared across the toolkit.

Every error raised by sewnet derives from SewnetError so callers (and the
command line front end) can catch one type and report a one-line diagnostic.
"""


class SewnetError(Exception):
    """Base class for all sewnet errors."""


# -- log parsing / segmentation ------------------------------------------------

class MalformedLine(SewnetError):
    """A raw log line could not be parsed."""

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class EmptyInput(SewnetError):
    """A log stream produced zero parseable events."""


class DanglingEnd(SewnetError):
    """An activity end marker had no matching open begin marker."""


class UnclosedBegin(SewnetError):
    """The event stream ended while an activity was still open."""


# -- encoding ------------------------------------------------------------------

class EmptyCorpus(SewnetError):
    """Vocabulary construction was attempted on a corpus with no events."""


class UnknownWord(SewnetError):
    """A sensor word was not present in the vocabulary."""


# -- numerical core ------------------------------------------------------------

class TokenOutOfRange(SewnetError):
    """A token index fell outside the table of the consuming layer."""


class ShapeMismatch(SewnetError):
    """Operand shapes do not compose."""


class DegenerateBatch(SewnetError):
    """Batch statistics were requested over fewer than two positions."""


class TargetOutOfRange(SewnetError):
    """A class target fell outside [0, num_classes)."""


class NonFiniteValue(SewnetError):
    """A NaN or infinity appeared where a finite value was required."""


class InvalidConfig(SewnetError):
    """A configuration object violates its invariants."""


# -- training / evaluation -----------------------------------------------------

class ClassTooSmall(SewnetError):
    """A class has too few windows to be partitioned as requested."""


class NonFiniteLoss(SewnetError):
    """Training produced a NaN or infinite loss."""


class EmptyMatrix(SewnetError):
    """A metric was requested on a confusion matrix with no counts."""


class ArchitectureMismatch(SewnetError):
    """A checkpoint does not match the data it is being applied to."""
