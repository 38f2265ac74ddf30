"""Exception types shared across the package."""


class FacetexError(Exception):
    """Base class for every error raised by this package."""


class LoadError(FacetexError):
    """A frame, landmark, or manifest source could not be read."""


class FormatError(LoadError):
    """Input bytes or records do not match the documented format."""


class GapError(FormatError):
    """A frame-indexed file skips or duplicates a frame index."""


class DimensionMismatchError(LoadError):
    """Frames of one sequence disagree on their pixel dimensions."""


class ValidationError(FacetexError):
    """Structurally valid input violates a documented invariant."""


class TooSmallError(FacetexError):
    """An array is too small for the requested operation."""


class ParameterError(FacetexError):
    """A parameter or configuration value is out of range."""


class SchemaError(FacetexError):
    """A serialized artifact is missing required fields or versions."""
