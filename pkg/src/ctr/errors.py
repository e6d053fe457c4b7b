"""Exception hierarchy shared across the package."""


class CtrError(Exception):
    """Base class for all errors raised by this package."""


# --- graph parsing / validation -------------------------------------------

class GraphValidationError(CtrError):
    pass


class CycleDetected(GraphValidationError):
    """The edge set contains a directed cycle; carries a witness node list."""

    def __init__(self, witness):
        self.witness = list(witness)
        super().__init__(f"graph contains a cycle: {' -> '.join(map(str, self.witness))}")


class DanglingReference(GraphValidationError):
    pass


class TargetHasOutEdge(GraphValidationError):
    pass


class EmptyTargets(GraphValidationError):
    pass


class EmptySpot(GraphValidationError):
    pass


class SpotIntersectsTargets(GraphValidationError):
    pass


class EntryIsTarget(GraphValidationError):
    pass


class DuplicateEdge(GraphValidationError):
    pass


class PathLimitExceeded(CtrError):
    pass


# --- step distributions -----------------------------------------------------

class NonPositiveRate(CtrError):
    pass


class InvalidSurvivalTable(CtrError):
    pass


class ZeroConditioningMass(CtrError):
    pass


class QuadratureNotConverged(CtrError):
    pass


# --- MDP --------------------------------------------------------------------

class BudgetMismatch(CtrError):
    pass


class UndefinedAction(CtrError):
    pass


class InvalidPath(CtrError):
    pass


# --- solvers ----------------------------------------------------------------

class BudgetExceedsSpot(CtrError):
    pass


class DegenerateSample(CtrError):
    pass


class ArgumentOutOfRange(CtrError):
    pass


# --- MILP export -------------------------------------------------------------

class PolicyIncomplete(CtrError):
    pass


class MilpParseError(CtrError):
    pass
