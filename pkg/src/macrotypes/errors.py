"""Exception hierarchy shared by all modules."""


class MacroTypesError(Exception):
    """Base class for library errors."""


class ValidationError(MacroTypesError, ValueError):
    """Input violates an operation's preconditions."""


class ResourceCapError(MacroTypesError):
    """A configured size cap (types, Hilbert dimension, supermolecule) was exceeded."""


class BasisMismatchError(ValidationError):
    """State and measurement refer to incompatible bases or dimensions."""


class ZeroProbabilityError(MacroTypesError):
    """Conditioning on an outcome whose probability (density) vanishes."""
