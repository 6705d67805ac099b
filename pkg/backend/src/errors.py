# src/errors.py
from typing import Any, Dict, Optional


class RtgError(Exception):
    """Base error for the toolkit. `details` is what the CLI reports."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details: Dict[str, Any] = details or {}

    def to_record(self) -> Dict[str, Any]:
        return {
            "error": type(self).__name__,
            "message": self.message,
            "details": self.details,
        }


class ConfigError(RtgError):
    pass


class CircuitValidationError(RtgError):
    def __init__(self, gate_index: int, reason: str):
        super().__init__(
            f"Invalid gate at index {gate_index}: {reason}",
            {"gate_index": gate_index, "reason": reason},
        )
        self.gate_index = gate_index
        self.reason = reason


class TopologyError(RtgError):
    pass


class SubsetConflictError(TopologyError):
    def __init__(self, qubit: int, first: Any, second: Any):
        super().__init__(
            f"Virtual edges {first} and {second} share qubit {qubit}",
            {"qubit": qubit, "edges": [list(first), list(second)]},
        )
        self.qubit = qubit


class RoutingError(RtgError):
    pass


class TeleportError(RtgError):
    pass


class SimulationError(RtgError):
    pass


class BranchCapExceeded(SimulationError):
    def __init__(self, branch_points: int, cap: int):
        super().__init__(
            f"{branch_points} branch points (measurements and undetermined resets) exceed the exhaustive "
            f"branch cap of {cap}; exhaustive verification is refused (a sampling mode would be required)",
            {"branch_points": branch_points, "cap": cap},
        )


class BenchParameterError(RtgError):
    pass


class QasmParseError(RtgError):
    def __init__(self, construct: str, line: int, column: int, reason: str = "unsupported construct"):
        super().__init__(
            f"{reason} '{construct}' at line {line}, column {column}",
            {"construct": construct, "line": line, "column": column},
        )
        self.construct = construct
        self.line = line
        self.column = column


class QasmExportError(RtgError):
    pass
