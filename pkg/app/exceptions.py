"""Custom exceptions for the lab."""


class LabException(Exception):
    """Base exception for lab errors."""
    pass


class ConfigurationError(LabException):
    """Raised when a run file, law spec or set spec is invalid."""
    pass


class HypothesisError(ConfigurationError):
    """Raised when an experiment is configured outside its hypothesis."""
    
    def __init__(self, hypothesis: str, detail: str):
        self.hypothesis = hypothesis
        super().__init__(f"Hypothesis '{hypothesis}' violated: {detail}")


class InvalidArgumentError(LabException):
    """Raised when an operation precondition is violated."""
    pass


class ConvergenceError(LabException):
    """Raised when strict convergence was requested and not reached."""
    
    def __init__(self, iterations: int, gap: float):
        self.iterations = iterations
        self.gap = gap
        super().__init__(f"No convergence after {iterations} iterations (gap {gap:.3e})")


class ReportError(LabException):
    """Raised when writing a report fails."""
    pass
