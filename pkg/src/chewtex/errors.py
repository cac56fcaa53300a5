"""Exception types shared across the package."""


class ChewtexError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(ChewtexError, ValueError):
    """Invalid configuration value or parameter combination."""


class DataError(ChewtexError):
    """A problem with input data: files, schemas, or corpus contents."""


class FormatError(DataError):
    """Malformed file container or header."""


class UnsupportedCodecError(DataError):
    """File encoding not handled by the reader."""


class ValidationError(DataError):
    """Annotations or corpus contents violate a structural invariant."""


class SchemaError(DataError):
    """Serialized artifact carries an incompatible schema version."""


class ProtocolError(DataError):
    """Corpus cannot support the requested evaluation protocol."""


class SegmentTooShortError(ChewtexError, ValueError):
    """Audio segment is shorter than the operation requires."""


class DegenerateLabelsError(ChewtexError, ValueError):
    """Training labels contain only a single class."""


class ShapeError(ChewtexError, ValueError):
    """Array dimensions do not match what a fitted model expects."""
