"""Exception hierarchy shared by every module."""


class LUClusterError(Exception):
    """Base class for all package errors."""


class StructuralError(LUClusterError, ValueError):
    """Malformed input: wrong shapes, unknown identifiers, partial maps."""


class InfeasibleError(LUClusterError):
    """No solution satisfies the requested bounds."""


class SizeCapError(LUClusterError):
    """Instance exceeds the enumeration caps of an exact routine."""


class ConfigError(LUClusterError, ValueError):
    """Invalid run configuration (variant preconditions, eps, solver names)."""


class GenerationError(LUClusterError):
    """The generator could not produce an instance satisfying its spec."""


class CombineInvariantError(LUClusterError, AssertionError):
    """An internal invariant of the combine step was breached.

    Raising this always signals a bug (or a violated precondition that slipped
    through), never a property of the input data.
    """
