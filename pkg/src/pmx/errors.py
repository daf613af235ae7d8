"""Exception hierarchy shared by every stage of the pipeline.

Static errors (reader, pattern frontend, compiler) make the CLI exit with
status 2; runtime errors exit with status 1.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class SourceSpan:
    start: int
    end: int

    def __post_init__(self):
        if self.start > self.end:
            raise ValueError(f"bad span {self.start}..{self.end}")

    def __str__(self):
        return f"{self.start}-{self.end}"


class PmxError(Exception):
    """Base class. ``kind`` is the user-facing error name."""

    kind = "Error"
    exit_code = 1

    def __init__(self, message: str = "", span: SourceSpan | None = None):
        super().__init__(message)
        self.message = message
        self.span = span

    def __str__(self):
        where = f" at {self.span}" if self.span is not None else ""
        return f"{self.kind}{where}: {self.message}"


class StaticError(PmxError):
    exit_code = 2


class RuntimeFault(PmxError):
    exit_code = 1


# reader
class UnbalancedDelimiter(StaticError):
    kind = "UnbalancedDelimiter"


class BadToken(StaticError):
    kind = "BadToken"


# expression parsing
class MalformedExpr(StaticError):
    kind = "MalformedExpr"


# pattern frontend
class UnknownPatternHead(StaticError):
    kind = "UnknownPatternHead"


class MalformedPattern(StaticError):
    kind = "MalformedPattern"


class FuelExhausted(StaticError):
    kind = "FuelExhausted"


class OrBindingMismatch(StaticError):
    kind = "OrBindingMismatch"


class StructArityError(StaticError):
    kind = "StructArityError"


class DuplicateVariable(StaticError):
    kind = "DuplicateVariable"


class DuplicateDefinition(StaticError):
    kind = "DuplicateDefinition"


class NoRuleMatches(StaticError):
    kind = "NoRuleMatches"


class MalformedExpander(StaticError):
    kind = "MalformedExpander"


# compiler
class EmptyMatch(StaticError):
    kind = "EmptyMatch"


class InternalInvariantViolation(StaticError):
    kind = "InternalInvariantViolation"


# evaluation
class UnboundVariable(RuntimeFault):
    kind = "UnboundVariable"


class ArityError(RuntimeFault):
    kind = "ArityError"


class EvalTypeError(RuntimeFault):
    kind = "TypeError"


class UserError(RuntimeFault):
    kind = "UserError"


class NotCallable(RuntimeFault):
    kind = "NotCallable"


class Unprintable(RuntimeFault):
    kind = "Unprintable"


class MatchFailure(RuntimeFault):
    kind = "MatchFailure"


class RecursionLimit(RuntimeFault):
    kind = "RecursionLimit"
