"""Exception hierarchy for the toolkit.

Two broad families matter for callers: ``InputDataError`` covers malformed or
inconsistent inputs (files, indices, shapes, configuration) and maps to CLI
exit code 2; ``NumericalError`` covers failures of the numerics themselves
(degenerate series, non-finite losses) and maps to exit code 3.
"""


class EmbQEError(Exception):
    """Base class for all toolkit errors."""


class InputDataError(EmbQEError):
    """Malformed or inconsistent input (CLI exit code 2)."""


class NumericalError(EmbQEError):
    """Numerical failure (CLI exit code 3)."""


# --- core numerics ---------------------------------------------------------

class ZeroRowError(NumericalError):
    """A row that must be normalized has (near-)zero L2 norm."""

    def __init__(self, index: int):
        self.index = index
        super().__init__(f"row {index} has L2 norm below 1e-12")


class DimMismatchError(InputDataError):
    """Embedding dimensionalities disagree."""


class LengthMismatchError(InputDataError):
    """Paired series have unequal or insufficient length."""


class ZeroVarianceError(NumericalError):
    """A series is constant, so correlation is undefined."""


class EmptyInputError(InputDataError):
    """An operation received an empty collection it cannot handle."""


# --- file I/O --------------------------------------------------------------

class MissingColumnError(InputDataError):
    """A required dataset column is absent from the header."""


class RaggedRowError(InputDataError):
    """A dataset row has a field count different from the header."""

    def __init__(self, line: int, message: str = ""):
        self.line = line
        super().__init__(message or f"line {line}: field count differs from header")


class NonNumericScoreError(InputDataError):
    """A gold-score field failed to parse as a number."""

    def __init__(self, line: int, value: str):
        self.line = line
        self.value = value
        super().__init__(f"line {line}: gold score {value!r} is not numeric")


class DatasetFormatError(InputDataError):
    """Dataset-level invariant violated (bad id, duplicate id, empty text)."""


class BadMagicError(InputDataError):
    """An embedding or checkpoint file does not start with the expected magic."""


class TruncatedFileError(InputDataError):
    """A binary file ended before the declared payload was complete."""


class BadPairError(InputDataError):
    """An alignment item is not of the form ``i-j`` or ``i?j``."""

    def __init__(self, item: str):
        self.item = item
        super().__init__(f"bad alignment item {item!r}")


class InvalidEncodingError(InputDataError):
    """A corpus line is not valid UTF-8."""

    def __init__(self, line: int):
        self.line = line
        super().__init__(f"line {line}: invalid UTF-8")


# --- scoring ---------------------------------------------------------------

class EmptySentenceError(InputDataError):
    """One side of a sentence pair has no scoreable tokens."""

    def __init__(self, side: str):
        self.side = side
        super().__init__(f"{side} sentence has no tokens to score")


class MissingEmbeddingError(InputDataError):
    """No embedding record exists for a dataset sentence id."""

    def __init__(self, sid: int):
        self.sid = sid
        super().__init__(f"no embedding record for sentence id {sid}")


class LayerMismatchError(InputDataError):
    """The configured layer is not the one carried by the embedding set."""


# --- alignment training ----------------------------------------------------

class EmptyPairListError(InputDataError):
    """The aligned-pair list of a sentence pair is empty."""


class TemperatureError(InputDataError):
    """The softmax temperature must be strictly positive."""


class IndexOutOfRangeError(InputDataError):
    """A word or subword index points outside its sentence."""


class AllPairsEmptyError(InputDataError):
    """Every sentence pair in a batch has an empty aligned-pair list."""


class NonFiniteLossError(NumericalError):
    """Training produced a non-finite loss."""

    def __init__(self, step: int, value: float):
        self.step = step
        self.value = value
        super().__init__(f"non-finite loss {value!r} at step {step}")


class IdOutOfRangeError(InputDataError):
    """A token id is outside the encoder's vocabulary."""


# --- alignment evaluation --------------------------------------------------

class EmptyMatrixError(InputDataError):
    """A similarity matrix with zero rows or columns cannot be aligned."""


class EmptyAlignmentError(InputDataError):
    """Both the prediction and the sure gold set are empty."""


# --- TER -------------------------------------------------------------------

class EmptyReferenceError(InputDataError):
    """TER needs a non-empty reference."""


# --- harness ---------------------------------------------------------------

class SizeTooLargeError(InputDataError):
    """A requested subset size exceeds the dataset size."""
