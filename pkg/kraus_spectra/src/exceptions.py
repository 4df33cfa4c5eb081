from typing import Any, Dict, Optional
from enum import Enum
import traceback

import structlog


class ErrorCode(str, Enum):
    # Input shape and content
    SHAPE_MISMATCH = "SHAPE_MISMATCH"
    FIXTURE_PARSE_ERROR = "FIXTURE_PARSE_ERROR"
    CONFIGURATION_ERROR = "CONFIGURATION_ERROR"

    # Hypotheses of an operation
    PRECONDITION_FAILED = "PRECONDITION_FAILED"
    STRUCTURE_ERROR = "STRUCTURE_ERROR"
    LIMIT_EXCEEDED = "LIMIT_EXCEEDED"

    # Floating point
    NUMERICAL_FAILURE = "NUMERICAL_FAILURE"

    # System
    INTERNAL_ERROR = "INTERNAL_ERROR"


class ChannelAnalysisError(Exception):
    """Base exception for all channel-analysis errors."""

    def __init__(
        self,
        message: str,
        error_code: ErrorCode,
        details: Optional[Dict[str, Any]] = None,
        cause: Optional[Exception] = None,
    ):
        self.message = message
        self.error_code = error_code
        self.details = details or {}
        self.cause = cause
        super().__init__(self.message)

    def to_dict(self) -> Dict[str, Any]:
        """Convert the exception to the machine-readable error object."""
        return {
            "error_code": self.error_code.value,
            "message": self.message,
            "details": _jsonable(self.details),
        }

    def add_context(self, **kwargs: Any) -> "ChannelAnalysisError":
        """Add contextual information to the exception."""
        self.details.update(kwargs)
        return self


class ShapeError(ChannelAnalysisError):
    """Raised when matrix dimensions do not fit together."""

    def __init__(
        self,
        message: str,
        expected: Optional[Any] = None,
        actual: Optional[Any] = None,
    ):
        super().__init__(
            message=message,
            error_code=ErrorCode.SHAPE_MISMATCH,
            details={"expected": expected, "actual": actual},
        )


class PreconditionError(ChannelAnalysisError):
    """Raised when the hypothesis of an operation does not hold."""

    def __init__(self, message: str, hypothesis: str, **details: Any):
        super().__init__(
            message=message,
            error_code=ErrorCode.PRECONDITION_FAILED,
            details={"hypothesis": hypothesis, **details},
        )


class StructureError(ChannelAnalysisError):
    """Raised when an algebra lacks the structure an operation needs."""

    def __init__(self, message: str, **details: Any):
        super().__init__(
            message=message,
            error_code=ErrorCode.STRUCTURE_ERROR,
            details=details,
        )


class LimitError(ChannelAnalysisError):
    """Raised when an input exceeds a hard computational cap."""

    def __init__(self, message: str, limit: int, requested: int):
        super().__init__(
            message=message,
            error_code=ErrorCode.LIMIT_EXCEEDED,
            details={"limit": limit, "requested": requested},
        )


class NumericalFailure(ChannelAnalysisError):
    """Raised when a numerical procedure fails to converge or verify."""

    def __init__(
        self,
        message: str,
        issue: str,
        partial: Optional[Any] = None,
        cause: Optional[Exception] = None,
        **details: Any,
    ):
        super().__init__(
            message=message,
            error_code=ErrorCode.NUMERICAL_FAILURE,
            details={"issue": issue, **details},
            cause=cause,
        )
        self.partial = partial


class FixtureParseError(ChannelAnalysisError):
    """Raised when a fixture document cannot be read or validated."""

    def __init__(
        self,
        message: str,
        path: Optional[str] = None,
        field: Optional[str] = None,
        line: Optional[int] = None,
        column: Optional[int] = None,
    ):
        super().__init__(
            message=message,
            error_code=ErrorCode.FIXTURE_PARSE_ERROR,
            details={
                "path": path,
                "field": field,
                "line": line,
                "column": column,
            },
        )


class ConfigurationError(ChannelAnalysisError):
    """Raised when settings cannot be loaded."""

    def __init__(self, message: str, source: Optional[str] = None):
        super().__init__(
            message=message,
            error_code=ErrorCode.CONFIGURATION_ERROR,
            details={"source": source},
        )


def exit_code_for(error: ChannelAnalysisError) -> int:
    """Map an error to the process exit code of the command-line tool."""
    exit_code_mapping = {
        ErrorCode.SHAPE_MISMATCH: 2,
        ErrorCode.FIXTURE_PARSE_ERROR: 2,
        ErrorCode.CONFIGURATION_ERROR: 2,
        ErrorCode.PRECONDITION_FAILED: 2,
        ErrorCode.STRUCTURE_ERROR: 2,
        ErrorCode.LIMIT_EXCEEDED: 2,
        ErrorCode.NUMERICAL_FAILURE: 3,
        ErrorCode.INTERNAL_ERROR: 1,
    }
    return exit_code_mapping.get(error.error_code, 1)


def handle_unexpected_error(
    error: Exception, context: Optional[Dict[str, Any]] = None
) -> ChannelAnalysisError:
    """Convert unexpected errors to ChannelAnalysisError with logging."""
    logger = structlog.get_logger(__name__)
    logger.error(
        "Unexpected error occurred",
        error_type=type(error).__name__,
        error_message=str(error),
        context=context or {},
        traceback=traceback.format_exc(),
    )
    return ChannelAnalysisError(
        message=f"Unexpected {type(error).__name__}: {error}",
        error_code=ErrorCode.INTERNAL_ERROR,
        details=context or {},
        cause=error,
    )


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, complex):
        return [value.real, value.imag]
    if hasattr(value, "tolist"):
        return _jsonable(value.tolist())
    return value
