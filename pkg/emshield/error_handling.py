"""
Error hierarchy and error reporting for the em-shield toolkit
"""
import json
import logging
import sys
import traceback
from datetime import datetime, timezone
from functools import wraps
from typing import Any, Dict, List, Optional

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DOMAIN_ERROR = 1
EXIT_USAGE_ERROR = 2


class EmShieldError(Exception):
    """Base exception class for em-shield"""
    def __init__(self, message: str, error_code: str = None, exit_code: int = EXIT_DOMAIN_ERROR,
                 details: Dict[str, Any] = None):
        super().__init__(message)
        self.message = message
        self.error_code = error_code or self.__class__.__name__
        self.exit_code = exit_code
        self.details = details or {}
        self.timestamp = datetime.now(timezone.utc).isoformat()


class ValidationError(EmShieldError, ValueError):
    """Raised when an input value is out of range or malformed"""
    def __init__(self, message: str, field: str = None, **kwargs):
        super().__init__(message, error_code="VALIDATION_ERROR", **kwargs)
        if field:
            self.details['field'] = field


class GeometryError(EmShieldError, ValueError):
    """Raised for degenerate geometry: zero normals, coincident nodes, zero distances"""
    def __init__(self, message: str, **kwargs):
        super().__init__(message, error_code="INVALID_GEOMETRY", **kwargs)


class DimensionError(EmShieldError, ValueError):
    """Raised when array shapes do not agree"""
    def __init__(self, message: str, expected: Any = None, got: Any = None, **kwargs):
        super().__init__(message, error_code="SHAPE_ERROR", **kwargs)
        if expected is not None:
            self.details['expected'] = expected
        if got is not None:
            self.details['got'] = got


class SubspaceError(EmShieldError, ValueError):
    """Raised when a noise subspace cannot be formed"""
    def __init__(self, message: str, **kwargs):
        super().__init__(message, error_code="SUBSPACE_ERROR", **kwargs)


class IndexOutOfRangeError(EmShieldError, IndexError):
    """Raised when a radar or scatterer index does not exist in the scenario"""
    def __init__(self, message: str, index: int = None, **kwargs):
        super().__init__(message, error_code="INDEX_ERROR", **kwargs)
        if index is not None:
            self.details['index'] = index


class DegenerateSpectrumError(EmShieldError):
    """Raised when a pseudo-spectrum has fewer peaks than requested sources"""
    def __init__(self, message: str, peaks: List[float] = None, **kwargs):
        super().__init__(message, error_code="DEGENERATE_SPECTRUM", **kwargs)
        self.peaks = list(peaks or [])
        self.details['peaks_deg'] = self.peaks


class ConditioningError(EmShieldError, ValueError):
    """Raised when a least-squares design matrix is rank deficient"""
    def __init__(self, message: str, condition_number: float = None, **kwargs):
        super().__init__(message, error_code="CONDITIONING_ERROR", **kwargs)
        if condition_number is not None:
            self.details['condition_number'] = condition_number


class InfeasibleError(EmShieldError):
    """Raised when a power budget lies below the best achievable value"""
    def __init__(self, message: str, bound: float, **kwargs):
        super().__init__(message, error_code="INFEASIBLE", **kwargs)
        self.bound = bound
        self.details['bound'] = bound


class EnumerationSizeError(EmShieldError, ValueError):
    """Raised when an exhaustive search would exceed the enumeration bound"""
    def __init__(self, message: str, size_bits: int = None, limit_bits: int = None, **kwargs):
        super().__init__(message, error_code="SIZE_ERROR", **kwargs)
        self.details.update({'size_bits': size_bits, 'limit_bits': limit_bits})


class ConfigSyntaxError(EmShieldError):
    """Raised when a scenario file cannot be parsed"""
    def __init__(self, message: str, line: Optional[int] = None, **kwargs):
        super().__init__(message, error_code="CONFIG_SYNTAX", **kwargs)
        self.line = line
        if line is not None:
            self.details['line'] = line


class OutputError(EmShieldError, OSError):
    """Raised when results cannot be written"""
    def __init__(self, path: str, message: str = None, **kwargs):
        message = message or f"cannot write {path}"
        super().__init__(message, error_code="IO_ERROR", **kwargs)
        self.path = path
        self.details['path'] = path


class UsageError(EmShieldError):
    """Raised for bad command-line usage"""
    def __init__(self, message: str, **kwargs):
        super().__init__(message, error_code="USAGE_ERROR", exit_code=EXIT_USAGE_ERROR, **kwargs)


def log_error(error: Exception, context: Dict[str, Any] = None) -> str:
    """Log error with context information"""
    error_id = f"error_{datetime.now(timezone.utc).strftime('%Y%m%d_%H%M%S_%f')}"

    error_info = {
        'error_id': error_id,
        'error_type': type(error).__name__,
        'message': str(error),
        'context': context or {}
    }

    if isinstance(error, EmShieldError):
        error_info.update({
            'error_code': error.error_code,
            'exit_code': error.exit_code,
            'details': error.details
        })
        logger.error(f"EmShieldError occurred: {error_info}")
    else:
        error_info['traceback'] = traceback.format_exc()
        logger.error(f"Unexpected error occurred: {error_info}")

    return error_id


def format_error_line(error: Exception) -> str:
    """Machine-readable one-line error record for stderr"""
    if isinstance(error, EmShieldError):
        record = {'category': error.error_code, 'message': error.message, 'details': error.details}
    else:
        record = {'category': 'INTERNAL_ERROR', 'message': str(error), 'details': {}}
    return json.dumps(record, sort_keys=True, default=str)


def exit_code_for(error: Exception) -> int:
    if isinstance(error, EmShieldError):
        return error.exit_code
    return EXIT_DOMAIN_ERROR


def handle_errors(f):
    """Decorator turning exceptions raised by a CLI handler into exit codes"""
    @wraps(f)
    def decorated_function(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except Exception as e:
            log_error(e, {'handler': f.__name__})
            print(format_error_line(e), file=sys.stderr)
            return exit_code_for(e)
    return decorated_function


def require_range(value: float, low: float, high: float, field: str) -> float:
    """Validate that a numeric field lies in [low, high]"""
    try:
        value = float(value)
    except (ValueError, TypeError):
        raise ValidationError(f"{field} must be a number", field=field)
    if not low <= value <= high:
        raise ValidationError(f"{field} must be between {low} and {high}, got {value}", field=field)
    return value


def require_positive(value: Any, field: str, allow_zero: bool = False) -> float:
    """Validate a positive (or non-negative) numeric field"""
    try:
        value = float(value)
    except (ValueError, TypeError):
        raise ValidationError(f"{field} must be a number", field=field)
    if value != value or value in (float('inf'), float('-inf')):
        raise ValidationError(f"{field} must be finite", field=field)
    if value < 0 or (value == 0 and not allow_zero):
        bound = ">= 0" if allow_zero else "> 0"
        raise ValidationError(f"{field} must be {bound}, got {value}", field=field)
    return value
