"""Exception hierarchy shared across the package."""


class LppError(Exception):
    """Base class for all lpplab errors."""


class PreconditionViolated(LppError):
    """A documented precondition of an operation does not hold."""


class HypothesesViolated(PreconditionViolated):
    """The hypotheses of an invariance statement fail; carries diagnostics."""

    def __init__(self, failures):
        self.failures = tuple(failures)
        super().__init__("; ".join(self.failures) or "hypotheses violated")


class InvalidParams(LppError):
    """Distribution parameters are outside their admissible range."""


class ShapeMismatch(LppError):
    """Grid data does not match the shape of its window."""


class NonPositiveWeight(LppError):
    """Sum-product exact environments require strictly positive weights."""


class NegativeWeight(LppError):
    """Operation requires nonnegative weights."""


class OutOfWindow(LppError):
    """A requested cell or box is not contained in the environment window."""


class InfeasibleEndpoint(LppError):
    """No tuple of pairwise disjoint paths realizes the endpoint."""


class UnsupportedEndpointShape(LppError):
    """The endpoint shape is outside what the requested algorithm supports."""


class BudgetExceeded(LppError):
    """An enumeration or brute-force budget would be exceeded."""


class NoFeasiblePair(LppError):
    """Boundary sets admit no ordered start/end pair."""


class WrongSemiring(LppError):
    """Operation is only defined over the other semiring."""


class WrongMode(LppError):
    """Operation requires a different numeric mode (exact vs float)."""


class NoAdmissiblePath(LppError):
    """A restricted region contains no admissible path."""


class InvalidChain(LppError):
    """Interval chain does not satisfy the nesting/cardinality rules."""


class NotMoon(LppError):
    """Cell set is not a moon polyomino."""


class InvalidRearrangement(LppError):
    """Parameter sequences are not a valid rearrangement for the given map."""


class ScenarioError(LppError):
    """A scenario file is malformed or inconsistent."""
