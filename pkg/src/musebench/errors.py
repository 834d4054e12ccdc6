"""Exception types shared across the package.

The CLI maps these onto exit codes: validation problems exit 1, I/O
problems exit 2, solver failures (infeasible instance, exhausted budget
with no incumbent) exit 3.
"""


class MusebenchError(Exception):
    """Base class for all errors raised by this package."""


class ValidationFailure(MusebenchError):
    """Bad input: malformed records, out-of-range values, schema drift."""


class SchemaError(ValidationFailure):
    """A record failed schema validation.

    Carries the 1-based line number and the offending field when known,
    so JSONL parse errors point at the exact spot.
    """

    def __init__(self, message, *, line=None, field=None):
        self.line = line
        self.field = field
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if field is not None:
            prefix += f"field {field!r}: "
        super().__init__(prefix + message)


class MetricError(ValidationFailure):
    """A metric is undefined for the given input (constant series, NaN...)."""


class SolverError(MusebenchError):
    """The LP/MILP layer could not produce a usable answer."""


class InfeasibleProblem(SolverError):
    """The instance admits no feasible selection."""


class DispatchError(MusebenchError):
    """An LLM request failed after the configured retries."""


class ResponseFormatError(MusebenchError):
    """An LLM response does not match the expected shape.

    The question/element pipelines treat this as a signal to re-request,
    not as a fatal condition.
    """


class UnknownCategoryError(ResponseFormatError):
    """An LLM response used a category outside the closed vocabulary."""
