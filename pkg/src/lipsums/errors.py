"""Exception hierarchy shared by all modules."""


class LipsumsError(Exception):
    """Base class for all errors raised by this package."""


class InputError(LipsumsError, ValueError):
    """Malformed input: dimension mismatch, invalid parameter, bad schema."""


class CapacityError(LipsumsError):
    """Requested computation exceeds a hard size limit (e.g. 2^n enumeration)."""


class ConstructionError(LipsumsError):
    """A randomized construction did not succeed within its retry budget."""
