"""Exception types raised across the package."""


class SparcSkaError(Exception):
    """Base class for all package errors."""


class DomainError(SparcSkaError, ValueError):
    """An argument lies outside the domain of a formula (e.g. a non-positive variance)."""


class SizingError(SparcSkaError, ValueError):
    """A requested object is too large for the configured budget or sample count."""


class ShapeError(SparcSkaError, ValueError):
    """Array lengths or dimensions do not agree."""


class CodebookIndexError(SparcSkaError, IndexError):
    """A section, sub-section, or codeword index is out of range."""


class ConfigError(SparcSkaError, ValueError):
    """A configuration file or override could not be parsed."""
