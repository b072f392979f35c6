"""Exception hierarchy.

Every error raised for bad input derives from :class:`SidechanError`; the CLI
maps those to exit code 2.
"""


class SidechanError(Exception):
    """Base class for input and validation errors."""


class AllZeroSignal(SidechanError):
    pass


class NegativeValue(SidechanError):
    pass


class NotNormalized(SidechanError):
    pass


class UnitMismatch(SidechanError):
    pass


class NoOverlap(SidechanError):
    pass


class NoCrossing(SidechanError):
    pass


class GridMismatch(SidechanError):
    pass


class EmptyInput(SidechanError):
    pass


class NonPositivePeriod(SidechanError):
    pass


class OutOfRange(SidechanError):
    pass


class MissingInput(SidechanError):
    pass


class MissingParameter(SidechanError):
    pass


class TooManyParameters(SidechanError):
    pass


class GridTooNarrow(SidechanError):
    pass


class TooFewSamples(SidechanError):
    pass


class UnknownPreset(SidechanError):
    pass


class BadSweep(SidechanError):
    pass


class IngestError(SidechanError):
    """File-level error; carries the offending path and, when known, a line."""

    def __init__(self, message, path=None, line=None):
        self.path = None if path is None else str(path)
        self.line = line
        self.reason = message
        super().__init__(self._render())

    def _render(self):
        loc = ""
        if self.path is not None:
            loc = self.path
            if self.line is not None:
                loc += f":{self.line}"
            loc += ": "
        return f"{loc}{self.reason}"

    def with_path(self, path):
        if self.path is None:
            self.path = str(path)
            self.args = (self._render(),)
        return self


class MissingFile(IngestError):
    pass


class BadHeader(IngestError):
    pass


class NonUniformAxis(IngestError):
    pass


class TooFewRows(IngestError):
    pass


class UnparseableRow(IngestError):
    pass


class RaggedRows(IngestError):
    pass


class MissingDiode(IngestError):
    pass


class DuplicateLabel(IngestError):
    pass


class BadManifest(IngestError):
    pass
