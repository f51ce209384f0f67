"""Exception hierarchy.

Two families matter to callers: :class:`ConfigError` for inputs that violate a
contract (the CLI exits with status 2) and :class:`NumericalError` for failures
that only show up while computing (status 3).
"""

from __future__ import annotations


class IntegrabilityError(Exception):
    """Base class. ``details`` is a JSON-friendly dict of offending values."""

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details

    def report(self) -> dict:
        return {"error": type(self).__name__, "message": str(self), **_jsonable(self.details)}


class ConfigError(IntegrabilityError):
    pass


class NumericalError(IntegrabilityError):
    pass


class ConfigurationError(ConfigError):
    pass


class DomainError(ConfigError):
    pass


class ContractError(ConfigError):
    pass


class ShapeError(ConfigError):
    pass


class UnsupportedCaseError(ConfigError):
    pass


class SingularityError(NumericalError):
    def __init__(self, message: str, time: float | None = None, **details):
        super().__init__(message, time=time, **details)
        self.time = time


class AccuracyError(NumericalError):
    pass


class EvaluationError(NumericalError):
    pass


class DivergenceError(NumericalError):
    pass


class DegeneracyError(NumericalError):
    pass


class NearDegenerateKernelError(NumericalError):
    pass


class PositivityError(NumericalError):
    pass


class PeriodicityError(NumericalError):
    pass


class TurningPointError(NumericalError):
    pass


class ShockFormedError(NumericalError):
    def __init__(self, message: str, roots, **details):
        super().__init__(message, roots=list(roots), **details)
        self.roots = list(roots)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (str, int, float, bool)) or obj is None:
        return obj
    try:
        return float(obj)
    except (TypeError, ValueError):
        return str(obj)
