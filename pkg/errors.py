from typing import Any, Optional, Sequence


class MinkowskiError(Exception):
    """Base class for domain errors; carries a detail message and a CLI exit code"""

    exit_code = 1

    def __init__(self, detail: str, exit_code: Optional[int] = None):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code

    def as_dict(self) -> dict:
        return {"error": type(self).__name__, "detail": self.detail, "exit_code": self.exit_code}


class ArgumentError(MinkowskiError):
    exit_code = 2


class ConfigError(MinkowskiError):
    exit_code = 2


class DomainError(MinkowskiError):
    pass


class ComputationError(MinkowskiError):
    def __init__(self, detail: str, best_iterate: Any = None):
        super().__init__(detail)
        self.best_iterate = best_iterate


class StrictConvexityError(MinkowskiError):
    pass


class NormValidationError(MinkowskiError):
    def __init__(self, detail: str, report: Any = None):
        super().__init__(detail)
        self.report = report


class LimitError(MinkowskiError):
    exit_code = 3

    def __init__(self, detail: str, last_iterates: Sequence[float] = (), point: Any = None):
        super().__init__(detail)
        self.last_iterates = tuple(last_iterates)
        self.point = point

    def as_dict(self) -> dict:
        result = super().as_dict()
        result["last_iterates"] = [float(v) for v in self.last_iterates]
        if self.point is not None:
            result["point"] = [float(v) for v in self.point]
        return result


class PreconditionError(MinkowskiError):
    exit_code = 3


class GeometryError(MinkowskiError):
    pass


class NotAHorofunctionError(GeometryError):
    pass


class ConditioningError(MinkowskiError):
    pass


class EmptyLevelSetError(MinkowskiError):
    exit_code = 4
