class SimulationError(Exception):
    """
    Base error for the simulator. `exit_code` is the process exit status
    the CLI reports when the error reaches it.
    """

    exit_code = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class ValidationFailure(SimulationError, ValueError):
    """A precondition on the inputs does not hold."""

    exit_code = 2


class DimensionError(ValidationFailure):
    pass


class GridError(ValidationFailure):
    pass


class NumericalConsistencyError(SimulationError):
    pass


class UndefinedConditionalError(SimulationError):
    pass


class CheckFailure(SimulationError):
    def __init__(self, check: str, detail: str):
        super().__init__(f"{check}: {detail}")
        self.check = check
