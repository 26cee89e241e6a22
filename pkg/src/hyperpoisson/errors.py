"""Exception taxonomy shared by every module."""


class HyperPoissonError(Exception):
    """Base class for all package errors."""


class InvalidInstance(HyperPoissonError, ValueError):
    """The hypergraph, demand or parameters are not admissible."""


class NotConnected(InvalidInstance):
    pass


class DemandNotZeroSum(InvalidInstance):
    pass


class NonpositiveWeight(InvalidInstance):
    pass


class EmptyEdge(InvalidInstance):
    pass


class NonDyadic(InvalidInstance):
    """A scalar that must be of the form a * 2^-q is not."""


class ZeroTotalDegree(InvalidInstance):
    pass


class ZeroDegreeVertex(InvalidInstance):
    pass


class NonpositiveLambda(InvalidInstance):
    pass


class InvariantViolation(HyperPoissonError, ValueError):
    pass


class NotZeroSumOnEdge(InvariantViolation):
    pass


class OutOfDomain(HyperPoissonError, ValueError):
    """A barrier was evaluated outside its open epigraph."""


class SolverError(HyperPoissonError, RuntimeError):
    pass


class MaxIterations(SolverError):
    """Iteration budget exhausted; ``result`` holds the best iterate and its honest gap."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class NumericalBreakdown(SolverError):
    pass


class Infeasible(SolverError):
    pass


class Unbounded(SolverError):
    pass


class NegativeCycleDetected(SolverError):
    pass


class CapacityMultiplierNonzero(SolverError):
    pass


class VerificationError(HyperPoissonError):
    pass
