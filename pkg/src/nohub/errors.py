"""Exception types raised across the package."""


class NoHubError(ValueError):
    """Base class for all validation and numerical errors raised here."""


class ZeroRowError(NoHubError):
    def __init__(self, row: int):
        self.row = row
        super().__init__(f"row {row} has (near) zero norm; its direction is undefined")


class DimTooLargeError(NoHubError):
    pass


class NotNormalizedError(NoHubError):
    pass


class PerplexityOutOfRangeError(NoHubError):
    pass


class EmptySumError(NoHubError):
    pass


class NonFiniteError(NoHubError):
    def __init__(self, iteration: int):
        self.iteration = iteration
        super().__init__(f"non-finite embedding values at iteration {iteration}")


class BadKError(NoHubError):
    pass


class ZeroVarianceError(NoHubError):
    def __init__(self, row: int):
        self.row = row
        super().__init__(f"row {row} has zero feature variance")


class InsufficientPoolError(NoHubError):
    pass
