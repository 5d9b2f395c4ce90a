"""Exception types shared across the package."""


class ElectricWalkError(Exception):
    """Base class for numerical failures raised by this package."""


class SupportOverflowError(ElectricWalkError):
    """State support would exceed the configured maximum lattice size."""


class PrecisionExhaustedError(ElectricWalkError):
    """The requested quantity is not resolvable at the working precision."""


class NoDecayError(ElectricWalkError):
    """Transfer iteration found no exponential decay (extended state)."""


class BudgetExhaustedError(ElectricWalkError):
    """A simulation budget (steps or support) ran out before certification."""
