"""Shared error types."""


class DomainError(ValueError):
    """A parameter or operand lies outside an operation's stated domain."""


class FormatError(ValueError):
    """A serialized set/function/report file is malformed."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field
