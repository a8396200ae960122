"""Error types for file parsing and validation.

Each format error carries a short machine-readable ``code`` so callers
(and the CLI) can distinguish failure modes without string matching.
"""


class FormatError(ValueError):
    """A serialized file violates its format contract."""

    code = "format"


class BadMagicError(FormatError):
    code = "bad_magic"


class UnsupportedVersionError(FormatError):
    code = "unsupported_version"


class InvalidHeaderError(FormatError):
    code = "invalid_header"


class TruncatedFileError(FormatError):
    code = "truncated"


class TrailingDataError(FormatError):
    code = "trailing_data"


class NonFiniteValueError(FormatError):
    code = "non_finite"


class NegativeValueError(FormatError):
    code = "negative_value"
