"""Domain exceptions shared across the toolkit.

Every error the library raises intentionally derives from GeoChallengeError,
so callers (CLI, service) can map "domain error" to an exit code or HTTP
status without catching bare Exception.
"""

from __future__ import annotations


class GeoChallengeError(Exception):
    """Base class for all domain errors."""

    code = "domain_error"


class TraceParseError(GeoChallengeError):
    """A trace file could not be parsed. Carries the offending row if known."""

    code = "parse_error"

    def __init__(self, message: str, row: int | None = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class InsufficientLocationsError(GeoChallengeError):
    """Not enough eligible locations to build a challenge."""

    code = "insufficient_locations"

    def __init__(self, required: int, available: int):
        self.required = required
        self.available = available
        self.shortfall = required - available
        super().__init__(
            f"need {required} eligible locations, have {available} "
            f"(short {self.shortfall})"
        )


class SingleAttemptError(GeoChallengeError):
    """A question that already has an answer was answered again."""

    code = "single_attempt_violation"


class SessionClosedError(GeoChallengeError):
    """An answer was submitted to a completed session."""

    code = "session_closed"


class SessionConflictError(GeoChallengeError):
    """An account tried to open a second concurrent session. Carries the
    open session's id so clients can resume it."""

    code = "session_conflict"

    def __init__(self, message: str, open_session_id: str | None = None):
        self.open_session_id = open_session_id
        super().__init__(message)


class NotFoundError(GeoChallengeError):
    """Unknown account or session identifier."""

    code = "not_found"


class InsufficientDataError(GeoChallengeError):
    """An analysis needs data it was not given (e.g. a missing subject class)."""

    code = "insufficient_data"
