"""Exception hierarchy shared by every module.

Each error carries a stable machine-readable ``code`` so the HTTP service
and the CLI can map failures to structured payloads and exit codes without
string matching.
"""

from __future__ import annotations


class WorkbenchError(Exception):
    """Base class for all domain errors."""

    code = "error"

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> dict:
        d = {"code": self.code, "message": self.message}
        if self.details:
            d["details"] = self.details
        return d


class InvariantViolation(WorkbenchError):
    code = "invariant_violation"


class DuplicateTerm(WorkbenchError):
    code = "duplicate_term"


class UnknownTerm(WorkbenchError):
    code = "unknown_term"


class UnknownUser(WorkbenchError):
    code = "unknown_user"


class UnknownClass(WorkbenchError):
    code = "unknown_class"


class UnknownConcept(WorkbenchError):
    code = "unknown_concept"


class UnknownEdge(WorkbenchError):
    code = "unknown_edge"


class UnknownSource(WorkbenchError):
    code = "unknown_source"


class CorruptJournal(WorkbenchError):
    code = "corrupt_journal"


class EncodingError(WorkbenchError):
    code = "encoding_error"


class MissingRequiredColumn(WorkbenchError):
    code = "missing_required_column"


class ParseError(WorkbenchError):
    """Import parse failure; ``line`` locates the offending input."""

    code = "parse_error"

    def __init__(self, message: str, line: int | None = None, **details):
        if line is not None:
            details["line"] = line
        super().__init__(message, **details)
        self.line = line


class FilterSyntaxError(WorkbenchError):
    """Filter grammar rejection with position and an expected-token hint."""

    code = "filter_syntax_error"

    def __init__(self, message: str, position: int, expected: str | None = None):
        super().__init__(message, position=position, expected=expected)
        self.position = position
        self.expected = expected


class AlreadyMerged(WorkbenchError):
    code = "already_merged"


class SelfMerge(WorkbenchError):
    code = "self_merge"


class NotMerged(WorkbenchError):
    code = "not_merged"


class AlreadyClassified(WorkbenchError):
    code = "already_classified"

    def __init__(self, message: str, class_id: str | None = None, **details):
        if class_id is not None:
            details["class_id"] = class_id
        super().__init__(message, **details)
        self.class_id = class_id


class NotAMember(WorkbenchError):
    code = "not_a_member"


class AlreadyPromoted(WorkbenchError):
    code = "already_promoted"


class DuplicateEdge(WorkbenchError):
    code = "duplicate_edge"


class CycleDetected(WorkbenchError):
    """Rejected is-a edge; ``path`` is the concept id chain closing the cycle."""

    code = "cycle_detected"

    def __init__(self, message: str, path: list[str] | None = None):
        super().__init__(message, path=path or [])
        self.path = path or []


class CyclePresent(WorkbenchError):
    code = "cycle_present"


class ReadOnlySnapshot(WorkbenchError):
    code = "read_only_snapshot"
