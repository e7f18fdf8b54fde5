"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain an operation is defined on."""


class ContractError(ValueError):
    """A documented precondition on a state was not met."""


class NumericalAbort(RuntimeError):
    """A run was stopped because a numerical invariant broke down."""


class AccuracyWarning(UserWarning):
    """A step size exceeds the heuristic under which a scheme is trusted."""
