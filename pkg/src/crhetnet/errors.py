"""Exception types shared across the package."""


class CrhetnetError(Exception):
    """Base class for all errors raised by this package."""


class InvalidConfigError(CrhetnetError, ValueError):
    """A network configuration violates a structural invariant."""


class AssignmentError(CrhetnetError, ValueError):
    """A user-to-(channel, BS) assignment is malformed or illegal."""


class InfeasibleAssignmentError(CrhetnetError, RuntimeError):
    """There are fewer legal (channel, BS) slots than users to seat."""


class UndefinedMetricError(CrhetnetError, ValueError):
    """A metric is requested on inputs for which it has no value."""


class InstanceTooLargeError(CrhetnetError, ValueError):
    """A brute-force request exceeds the exhaustive-search complexity guard."""
