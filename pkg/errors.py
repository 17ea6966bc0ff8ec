"""
Exception hierarchy for FiberLink
Each error carries the process exit code the CLI maps it to
"""

from typing import Any, Optional


class FiberLinkError(Exception):
    """Base class for every error raised by the toolkit"""
    exit_code = 1


class ConfigError(FiberLinkError, ValueError):
    """Invalid or unparsable configuration"""
    exit_code = 2

    def __init__(self, message: str, field: Optional[str] = None,
                 line: Optional[int] = None, column: Optional[int] = None):
        self.field = field
        self.line = line
        self.column = column
        where = ""
        if field:
            where = f" [field: {field}]"
        if line is not None:
            where += f" [line {line}, column {column}]"
        super().__init__(f"{message}{where}")


class DomainError(FiberLinkError, ValueError):
    """Input outside the domain of a formula"""
    exit_code = 3


class RegimeError(DomainError):
    """Adiabatic elimination regime violated"""

    def __init__(self, message: str, ratio: float):
        self.ratio = ratio
        super().__init__(f"{message} (ratio={ratio:.4g})")


class IntegrationError(FiberLinkError, RuntimeError):
    """The ODE solver gave up before reaching the end of the window"""
    exit_code = 3

    def __init__(self, message: str, t_reached: Optional[float] = None, state: Any = None):
        self.t_reached = t_reached
        self.state = state
        detail = f" at t={t_reached:.6g} s" if t_reached is not None else ""
        super().__init__(f"{message}{detail}")


class ConvergenceError(FiberLinkError):
    """Mode doubling hit its cap, or every optimizer evaluation failed"""
    exit_code = 4
