"""Exception types shared across the services.

Every service maps these onto its wire surface (HTTP status codes, OAI
error codes, CLI exit codes), so raising the right class here is what
keeps the external behavior consistent.
"""


class StacksError(Exception):
    """Base class for all library errors."""

    http_status = 500


class ValidationFailure(StacksError):
    """Input failed validation; carries the per-field findings."""

    http_status = 400

    def __init__(self, message, findings=None):
        super().__init__(message)
        # list of (field, severity, message) triples
        self.findings = list(findings or [])


class NotFound(StacksError):
    http_status = 404


class Gone(StacksError):
    """Record exists only as a tombstone. Carries the deletion datestamp."""

    http_status = 410

    def __init__(self, message, datestamp=None):
        super().__init__(message)
        self.datestamp = datestamp


class Conflict(StacksError):
    http_status = 409


class Forbidden(StacksError):
    http_status = 403


class AuthFailure(StacksError):
    http_status = 401


class AuthExpired(AuthFailure):
    http_status = 401


class UnsupportedFormat(StacksError):
    http_status = 400


class FormatUnavailable(StacksError):
    """Record cannot be disseminated in the requested format."""

    http_status = 400


class CrosswalkError(StacksError):
    """A mapping rule failed on a required field; names the rule."""

    http_status = 400


class ConfigError(StacksError):
    http_status = 500


class Unavailable(StacksError):
    """A dependent service could not be reached. Distinct from any
    policy-level denial; callers fail closed on this."""

    http_status = 503


class QueryError(StacksError):
    """Query expression could not be parsed; carries the position."""

    http_status = 400

    def __init__(self, message, position=None):
        super().__init__(message)
        self.position = position
