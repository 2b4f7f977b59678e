"""Exception hierarchy shared by every module."""


class SparseCutError(Exception):
    """Base class for domain errors (CLI exit code 1)."""


class InvalidInstance(SparseCutError, ValueError):
    pass


class InvalidParams(SparseCutError, ValueError):
    pass


class NoDemandSeparated(SparseCutError):
    """The assignment cuts no demand edge, so sparsity is undefined."""


class TooManyDemands(SparseCutError, ValueError):
    pass


class IndexOutOfRange(SparseCutError, IndexError):
    pass


class Exceeded(SparseCutError):
    """An exhaustive search ran past its state budget."""


class TraceFailed(SparseCutError):
    """A lemma bypass replay could not reach the certified bound."""


class Infeasible(SparseCutError):
    pass


class Unbounded(SparseCutError):
    pass


class DegenerateDenominator(SparseCutError):
    pass


class PairNotCovered(SparseCutError):
    pass


class InconsistencyDetected(SparseCutError):
    pass


class ZeroProbabilityCondition(SparseCutError):
    pass


class AllRunsDegenerate(SparseCutError):
    pass


class PairNotConnected(SparseCutError):
    pass


class EndpointNotInBag(SparseCutError):
    pass


class TooLarge(SparseCutError, ValueError):
    pass
