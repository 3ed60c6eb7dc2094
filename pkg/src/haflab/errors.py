"""Exception hierarchy shared across the package."""


class HaflabError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(HaflabError):
    """Shape, parity, or index-range violation in an input."""


class CapacityError(HaflabError):
    """Requested size exceeds a configured limit."""


class ConfigError(HaflabError):
    """Unknown name or malformed configuration."""


class ModelError(HaflabError):
    """Kernel pair is inconsistent (fails validation or positivity)."""


class PreconditionError(HaflabError):
    """Call violates a documented precondition (e.g. overlapping boxes)."""
