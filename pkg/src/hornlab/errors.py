"""Exception hierarchy shared across the package."""


class HornlabError(Exception):
    """Base class for all package errors."""


class ParseError(HornlabError):
    """Syntax error in a schema, facts, examples or transformation file."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line = line
        self.col = col
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", col {col}" if col is not None else "") + ")"
        super().__init__(message + where)


class SchemaError(HornlabError):
    """Invalid schema: bad cross-references, duplicate names, arity problems."""


class ConstraintViolation(HornlabError):
    """An instance violates a declared FD or IND."""

    def __init__(self, message: str, offending: tuple = ()):
        self.offending = offending
        super().__init__(message)


class UnboundHeadVariable(HornlabError):
    """A clause with a head variable that never occurs in the body was evaluated."""


class SubsumptionBudgetExceeded(HornlabError):
    """The theta-subsumption search ran out of its node budget.

    Callers must treat this as "unknown", never as "no".
    """

    def __init__(self, budget: int):
        self.budget = budget
        super().__init__(f"subsumption search exceeded node budget of {budget}")


class TransformError(HornlabError):
    """A (de)composition spec violates the validity conditions."""


class ChaseError(HornlabError):
    """Internal error: the clause chase failed to reach a fixpoint in its round bound."""


class ConfigError(HornlabError):
    """Invalid experiment or learner configuration."""
