"""Domain errors.

Every service raises a subclass of GwrapError. The CLI turns them into a
machine-parseable JSON line and a nonzero exit status.
"""
from typing import Any, Dict, Optional


class GwrapError(Exception):
    """Base class for all gwrap errors."""

    code = "gwrap_error"
    exit_status = 3

    def __init__(self, message: str, **context: Any):
        super().__init__(message)
        self.message = message
        self.context = context

    def to_dict(self) -> Dict[str, Any]:
        payload = {"error": self.code, "message": self.message}
        if self.context:
            payload["context"] = {k: v for k, v in self.context.items() if v is not None}
        return payload


class BadParams(GwrapError):
    code = "bad_params"
    exit_status = 4


class ConfigError(GwrapError):
    code = "config_error"
    exit_status = 4


class ZeroNormal(GwrapError):
    code = "zero_normal"
    exit_status = 5


class NoCameras(GwrapError):
    code = "no_cameras"
    exit_status = 6


class Diverged(GwrapError):
    code = "diverged"
    exit_status = 7


class DegenerateInput(GwrapError):
    code = "degenerate_input"
    exit_status = 8


class InsufficientPoints(GwrapError):
    code = "insufficient_points"
    exit_status = 9


class CropEmpty(GwrapError):
    code = "crop_empty"
    exit_status = 10


class EmptyCloud(GwrapError):
    code = "empty_cloud"
    exit_status = 11


class ParseError(GwrapError):
    """Malformed scene or config file.

    Args:
        message: What went wrong
        line: 1-based line number in the file, when known
        field: Offending field name, when known
        record: Index of the offending record, when known
    """

    code = "parse_error"
    exit_status = 12

    def __init__(
        self,
        message: str,
        line: Optional[int] = None,
        field: Optional[str] = None,
        record: Optional[int] = None,
    ):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if record is not None:
            where.append(f"record {record}")
        if field is not None:
            where.append(f"field '{field}'")
        full = f"{message} ({', '.join(where)})" if where else message
        super().__init__(full, line=line, field=field, record=record)
        self.line = line
        self.field = field
        self.record = record


class VersionMismatch(GwrapError):
    code = "version_mismatch"
    exit_status = 13
