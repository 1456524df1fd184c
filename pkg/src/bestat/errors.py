"""Exception types shared across the package.

Everything derives from :class:`BestatError` so callers can catch one base
class at the CLI boundary. The subclasses also inherit the matching builtin
(ValueError) so generic numeric code keeps working.
"""


class BestatError(Exception):
    """Base class for package-specific failures."""


class DataError(BestatError, ValueError):
    """Input data is unusable: wrong shape, non-finite entries, or too few rows."""


class DomainError(BestatError, ValueError):
    """A scalar argument lies outside its documented domain."""


class ShapeError(BestatError, ValueError):
    """Array lengths or dimensions do not line up."""


class SingularityError(BestatError, ValueError):
    """A required matrix inverse does not exist (typically a zero cell probability)."""


class ConfigError(BestatError, ValueError):
    """A run configuration is inconsistent or names something unknown."""


class CacheError(BestatError, ValueError):
    """A cache file is unreadable or does not match its fingerprint."""
