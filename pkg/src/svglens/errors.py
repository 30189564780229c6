"""Exception hierarchy shared across the package."""


class SvgLensError(Exception):
    """Base class for all library errors."""


class SvgParseError(SvgLensError):
    """Malformed SVG markup; carries the byte offset of the failure."""

    def __init__(self, message: str, byte_offset: int | None = None):
        super().__init__(message)
        self.byte_offset = byte_offset


class EmptyDocumentError(SvgLensError):
    """Document contains zero renderable elements."""


class PathDataError(SvgLensError):
    """Unparsable path data; names the offending element when known."""


class EditError(SvgLensError):
    """Invalid edit specification for the given document."""


class RenderError(SvgLensError):
    """Rasterization failure, naming the offending element when identifiable."""


class ScoringError(SvgLensError):
    """Similarity-backend failure (service unreachable, protocol error, ...)."""


class ConceptError(SvgLensError):
    """Heatmap manifest or concept-fusion failure."""


class UndefinedMetricError(SvgLensError):
    """Metric requested on an input where it is mathematically undefined."""
