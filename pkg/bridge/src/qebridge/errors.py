"""Error types raised by the export bridge."""


class QEBridgeError(Exception):
    """Base class for everything this package raises on purpose."""


class EncoderUnavailable(QEBridgeError):
    """The requested encoder (or its tokenizer) could not be loaded."""


class LayerOutOfRange(QEBridgeError):
    """A requested layer index does not exist for the loaded encoder."""


class EmptyLine(QEBridgeError):
    """An input line holds no words; embeddings would be undefined."""

    def __init__(self, line_no: int):
        super().__init__(f"line {line_no}: empty input line")
        self.line_no = line_no
