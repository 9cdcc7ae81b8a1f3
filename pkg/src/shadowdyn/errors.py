"""Exception hierarchy shared by every module."""


class ShadowdynError(Exception):
    """Base class for domain errors (CLI exit status 1)."""


class InputError(ShadowdynError, ValueError):
    """Malformed input (CLI exit status 2)."""


class ValidityError(ShadowdynError):
    """A point or word is not legal in the presented system."""


class ModulusError(ShadowdynError):
    """Pseudo-orbit tolerance is coarser than the shadowing modulus allows."""


class MixingRequiredError(ShadowdynError):
    """Operation needs a primitive (topologically mixing) SFT."""


class InfeasibleError(ShadowdynError):
    """A construction has no solution under the given parameters."""


class RequestError(ShadowdynError):
    """A specification request violates its spacing invariants."""


class CapExceededError(ShadowdynError):
    """A bounded search ran past its configured cap."""


class DepthError(ShadowdynError):
    """A finite-precision point was queried beyond its known prefix."""


class NotPeriodicError(ShadowdynError):
    """A periodic point was required."""


class AmbiguityError(ShadowdynError):
    """A stationary vector is not unique."""


class NotInSubsystemError(ShadowdynError):
    """A point fails the probe tests of an embedding."""


class BudgetExhaustedError(ShadowdynError):
    """An approximation pipeline ran out of budget before reaching its target.

    ``best`` carries the best interval achieved and ``bound`` names the
    violated step.
    """

    def __init__(self, message, best=None, bound=None):
        super().__init__(message)
        self.best = best
        self.bound = bound
