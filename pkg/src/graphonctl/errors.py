"""Exception types shared across the package."""


class GraphonError(Exception):
    """Base class for errors raised by this package."""


class PartitionMismatchError(GraphonError):
    """Uniform partitions admit no affordable common refinement."""


class IncompatibleOperandsError(GraphonError):
    """Operation is not defined for this combination of representations."""


class NumericsError(GraphonError):
    """A numerical computation produced non-finite or inconsistent results."""


class ExactControllabilityError(GraphonError):
    """The system cannot be steered exactly in finite time."""


class ParseError(GraphonError):
    """Malformed network data."""
