"""Exception hierarchy shared by the solvers."""

from __future__ import annotations


class FracInvError(Exception):
    """Base class for all package errors."""


class DomainError(FracInvError, ValueError):
    """An argument lies outside the domain of the operation."""


class AccuracyError(FracInvError, ArithmeticError):
    """A special-function evaluation could not reach its accuracy target."""

    def __init__(self, message: str, regime: str) -> None:
        super().__init__(f"{message} (regime: {regime})")
        self.regime = regime


class AssemblyError(FracInvError, ValueError):
    """Coefficient data violates ellipticity, positivity or density bounds."""

    def __init__(self, message: str, node: int | None = None) -> None:
        if node is not None:
            message = f"{message} at node {node}"
        super().__init__(message)
        self.node = node


class LinearSolveError(FracInvError, RuntimeError):
    def __init__(self, message: str, residual: float) -> None:
        super().__init__(f"{message} (relative residual {residual:.3e})")
        self.residual = residual


class EigenSolverError(FracInvError, RuntimeError):
    def __init__(self, message: str, converged: int) -> None:
        super().__init__(f"{message} ({converged} eigenpairs converged)")
        self.converged = converged


class DivergenceError(FracInvError, RuntimeError):
    """Time stepping produced non-finite values or an iteration blew up."""

    def __init__(self, message: str, step: int | None = None, history=None) -> None:
        if step is not None:
            message = f"{message} at step {step}"
        super().__init__(message)
        self.step = step
        self.history = list(history) if history is not None else []


class ConditioningError(FracInvError, ArithmeticError):
    def __init__(self, message: str, mode: int) -> None:
        super().__init__(f"{message} (mode {mode})")
        self.mode = mode
