class BwkbError(Exception):
    """Base class for library errors."""


class ConfigurationError(BwkbError, ValueError):
    pass


class DomainError(BwkbError, ValueError):
    pass


class InputError(BwkbError, ValueError):
    pass


class SingularSystemError(BwkbError, ArithmeticError):
    def __init__(self, pivot_index: int, detail: str = ""):
        self.pivot_index = pivot_index
        super().__init__(f"numerically singular system at pivot {pivot_index}: {detail}")


class SolverError(BwkbError, ArithmeticError):
    def __init__(self, mode: int, cause: Exception | str):
        self.mode = mode
        super().__init__(f"mode {mode}: {cause}")


class CompatibilityError(BwkbError, ValueError):
    """Normal-jump data with nonzero mean over the interface."""


class RecursionInvariantError(BwkbError, AssertionError):
    def __init__(self, invariant: str, detail: str = ""):
        self.invariant = invariant
        super().__init__(f"{invariant}: {detail}")
