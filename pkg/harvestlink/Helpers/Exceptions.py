class HarvestError(Exception):
    """
    Base error of the package. Mirrors the status_code/detail shape used for API failures:
    exit_code is what the command line returns, detail is printed as JSON.
    """

    exit_code = 2

    def __init__(self, message: str, error: object = None) -> None:
        super().__init__(message)
        self.detail = {"message": message, "error": error}


class DomainError(HarvestError, ValueError):
    """Input outside the domain of an operation, or an analytic precondition violated."""

    exit_code = 2


class SimulationError(DomainError):
    """Non-finite SINR while simulating (overflowing path loss)."""


class ConvergenceError(HarvestError, ArithmeticError):
    """Quadrature or root bracketing did not converge."""

    exit_code = 2


class InfeasibleError(HarvestError):
    """Optimization problem has no feasible point."""

    exit_code = 1
