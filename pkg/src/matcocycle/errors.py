"""Exception hierarchy shared by every module of the package."""


class MatCocycleError(Exception):
    """Base class for all errors raised by matcocycle."""


class BudgetExceeded(MatCocycleError):
    """An enumeration would visit more words than the configured budget."""

    def __init__(self, needed, budget, what="words"):
        self.needed = needed
        self.budget = budget
        super().__init__(f"{what}: {needed} exceeds budget {budget}")


class NotPrimitive(UserWarning):
    """Warning: the transition matrix is not primitive (not topologically mixing)."""


class NotPrimitiveError(MatCocycleError):
    """Raised by pressure/spectrum entry points on non-mixing subshifts."""


class InadmissibleWord(MatCocycleError, ValueError):
    pass


class SingularMatrix(MatCocycleError, ValueError):
    pass


class NegativeS(MatCocycleError, ValueError):
    pass


class ResolutionTooCoarse(MatCocycleError):
    """Sampled cone certificate cannot decide at the requested resolution."""


class NoConvergence(MatCocycleError):
    pass


class NotOnStableSet(MatCocycleError, ValueError):
    """Points passed to a holonomy do not lie on the required local set."""


class TargetOutsideDomain(MatCocycleError, ValueError):
    pass


class CombinatorialBudget(MatCocycleError):
    pass


class SearchExhausted(MatCocycleError):
    """No admissible connector up to K0 produced a certified cone letter."""

    def __init__(self, words, K0):
        self.words = list(words)
        self.K0 = K0
        shown = ", ".join("".join(map(str, w)) for w in self.words[:5])
        more = "" if len(self.words) <= 5 else f" (+{len(self.words) - 5} more)"
        super().__init__(f"no loop found with K0={K0} for: {shown}{more}")


class EmptyLevelSet(MatCocycleError):
    """The level-set count is zero, so its entropy is minus infinity."""


class InvariantViolation(MatCocycleError):
    """A hard numerical invariant failed (maps to CLI exit code 2)."""


class SpecParseError(MatCocycleError, ValueError):
    """Malformed spec file; ``line`` and ``field`` locate the problem when known."""

    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class SpecValidationError(MatCocycleError, ValueError):
    """Well-formed spec violating a cocycle invariant, named by ``invariant``."""

    def __init__(self, message, invariant=None):
        self.invariant = invariant
        super().__init__(f"{invariant}: {message}" if invariant else message)
