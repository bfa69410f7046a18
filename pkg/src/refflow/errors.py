"""Exception hierarchy shared across the engine, proxies and workloads.

Errors that can cross a proxy boundary carry a stable ``code`` so they can be
shipped inside an Error message and re-raised on the far side.
"""

from __future__ import annotations


class RefflowError(Exception):
    """Base class for all refflow errors."""

    code = "Error"


# --- workflow model ---------------------------------------------------------

class MalformedDocument(RefflowError):
    code = "MalformedDocument"


class DanglingEdge(RefflowError):
    code = "DanglingEdge"


class DuplicateTaskId(RefflowError):
    code = "DuplicateTaskId"


class CycleDetected(RefflowError):
    """Raised with one cycle's task ids in ``self.cycle``."""

    code = "CycleDetected"

    def __init__(self, cycle):
        super().__init__(f"cycle detected: {' -> '.join(cycle)}")
        self.cycle = list(cycle)


# --- transport --------------------------------------------------------------

class PayloadOnControlMessage(RefflowError):
    code = "PayloadOnControlMessage"


class TruncatedFrame(RefflowError):
    code = "TruncatedFrame"


class BadHeader(RefflowError):
    code = "BadHeader"


class UnknownSite(RefflowError):
    code = "UnknownSite"


# --- proxy ------------------------------------------------------------------

class ReferenceNotStaged(RefflowError):
    code = "ReferenceNotStaged"


class ReferenceNotFound(RefflowError):
    code = "ReferenceNotFound"


class UnknownServiceOp(RefflowError):
    code = "UnknownServiceOp"


class ServiceFailure(RefflowError):
    code = "ServiceFailure"


class TargetUnreachable(RefflowError):
    code = "TargetUnreachable"


class StoreConflict(RefflowError):
    """Write-once violation: same ref id, different bytes."""

    code = "StoreConflict"


# --- orchestrator -----------------------------------------------------------

class TaskFailed(RefflowError):
    code = "TaskFailed"

    def __init__(self, task_id, cause):
        super().__init__(f"task {task_id!r} failed: {cause}")
        self.task_id = task_id
        self.cause = cause


class Unreachable(RefflowError):
    code = "Unreachable"


# --- workloads --------------------------------------------------------------

class BadParams(RefflowError):
    code = "BadParams"


class GeneMismatch(RefflowError):
    code = "GeneMismatch"


class DuplicateRegion(RefflowError):
    code = "DuplicateRegion"


# --- benchmark harness ------------------------------------------------------

class TooFewSites(RefflowError):
    code = "TooFewSites"


class EquivalenceViolation(RefflowError):
    code = "EquivalenceViolation"


_BY_CODE = {
    cls.code: cls
    for cls in list(globals().values())
    if isinstance(cls, type) and issubclass(cls, RefflowError)
}


def from_code(code: str, detail: str) -> RefflowError:
    """Rebuild an exception from a wire-level (code, detail) pair."""
    cls = _BY_CODE.get(code)
    if cls is None or cls in (CycleDetected, TaskFailed):
        return RefflowError(f"{code}: {detail}")
    return cls(detail)
