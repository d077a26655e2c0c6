"""Exception types shared across the package."""


class LorenzHistError(Exception):
    """Base class for all package errors."""


class DomainError(LorenzHistError):
    """Evaluation requested at a point where the map/flow is undefined (x = 0)."""


class BranchRangeError(LorenzHistError):
    """Value lies outside the image of the requested monotone branch."""


class StableManifoldError(LorenzHistError):
    """An orbit hit x = 0 exactly; iteration cannot continue."""

    def __init__(self, step: int):
        self.step = step
        super().__init__(f"orbit hits 0 at step {step}")


class GammaHitError(LorenzHistError):
    """A flow trajectory ran into the stable-manifold segment on the section."""

    def __init__(self, time: float):
        self.time = time
        super().__init__(f"trajectory meets the x = 0 section line at t = {time}")


class PreimageNotFoundError(LorenzHistError):
    """No preimage found within the allotted search depth."""

    def __init__(self, n_max: int):
        self.n_max = n_max
        super().__init__(f"no preimage found within depth {n_max}")


class PrecisionExhaustedError(LorenzHistError):
    """The construction would need more working precision than allowed."""

    def __init__(self, message: str, achieved: int = 0, required_bits: int = 0):
        self.achieved = achieved
        self.required_bits = required_bits
        super().__init__(message)


class DegenerateIntervalError(LorenzHistError):
    """An interval refinement shrank below working precision."""


class HorizonError(LorenzHistError):
    """A time query exceeded the built orbit horizon."""


class ConstructionError(LorenzHistError):
    """A witness construction failed; the message names the failed stage."""


class VerificationError(LorenzHistError):
    """Certificate verification mismatch; the message names the inequality."""
