"""
errors.py

Exceptions raised by causal_probe. Validation errors describe bad input
(exit code 1 on the command line); runtime limit errors describe a
search or numeric boundary that was hit (exit code 2).
"""
from typing import Optional, Sequence


class CausalProbeError(Exception):
    """Base class for every error raised by this package.
    """


class ValidationError(CausalProbeError):
    """The input to an operation is malformed or inconsistent.
    """


class RuntimeLimitError(CausalProbeError):
    """An operation hit a combinatorial cap or a numeric failure.
    """


class ExpressionSyntaxError(ValidationError):
    """Syntax error in a structural equation expression.

    Attributes:
    text [str]: the expression being parsed.
    offset [int]: character offset of the error.
    expected [str]: description of the expected token.
    """

    def __init__(self, text: str, offset: int, expected: str) -> None:
        self.text = text
        self.offset = offset
        self.expected = expected
        CausalProbeError.__init__(self, str(self))

    def __str__(self) -> str:
        """
        Print this exception.
        """
        return "syntax error at offset %d, expected %s" % (
            self.offset, self.expected)


class UnknownFunctionError(ValidationError):
    """An expression calls a function outside the grammar.
    """

    def __init__(self, name: str, offset: int) -> None:
        self.name = name
        self.offset = offset
        CausalProbeError.__init__(self, str(self))

    def __str__(self) -> str:
        return "unknown function '%s' at offset %d" % (self.name, self.offset)


class TypeMismatchError(ValidationError):
    """An operator was applied to operands of the wrong kind,
    e.g. a boolean operator applied to a real without a comparison.
    """


class UndeclaredVariableError(ValidationError):
    """A variable name was used but never declared.
    """

    def __init__(self, name: str, where: str = "") -> None:
        self.name = name
        self.where = where
        CausalProbeError.__init__(self, str(self))

    def __str__(self) -> str:
        if self.where:
            return "undeclared variable '%s' in %s" % (self.name, self.where)
        return "undeclared variable '%s'" % self.name


class DuplicateEquationError(ValidationError):
    """Two structural equations share a target.
    """

    def __init__(self, target: str) -> None:
        self.target = target
        CausalProbeError.__init__(self, str(self))

    def __str__(self) -> str:
        return "duplicate equation for '%s'" % self.target


class CycleError(ValidationError):
    """The parent relation of a graph contains a cycle.

    Attributes:
    cycle [List[str]]: one cycle, first node repeated at the end.
    """

    def __init__(self, cycle: Sequence[str]) -> None:
        self.cycle = list(cycle)
        CausalProbeError.__init__(self, str(self))

    def __str__(self) -> str:
        return "cycle detected: %s" % "->".join(self.cycle)


class DomainError(ValidationError):
    """A value lies outside the domain of its variable, or a domain
    is itself malformed.
    """


class MissingExogenousError(ValidationError):
    """An exogenous variable was not given a value.
    """

    def __init__(self, names: Sequence[str]) -> None:
        self.names = list(names)
        CausalProbeError.__init__(self, str(self))

    def __str__(self) -> str:
        return "missing exogenous value(s): %s" % ", ".join(self.names)


class InterventionError(ValidationError):
    """An intervention is malformed: duplicate targets, conflicting
    nested specifications, or an alternate equal to the actual value.
    """


class ShapeMismatchError(ValidationError):
    """Array widths do not agree.
    """


class OrderingError(ValidationError):
    """Upstream and downstream nodes are not in topological order.
    """


class UnknownNodeError(ValidationError):
    """A node reference does not resolve in the network or graph.
    """

    def __init__(self, name: str) -> None:
        self.name = name
        CausalProbeError.__init__(self, str(self))

    def __str__(self) -> str:
        return "unknown node '%s'" % self.name


class UnknownGeneratorError(ValidationError):
    """A toy generator name is not recognised.
    """

    def __init__(self, name: str, valid: Sequence[str]) -> None:
        self.name = name
        self.valid = list(valid)
        CausalProbeError.__init__(self, str(self))

    def __str__(self) -> str:
        return "unknown generator '%s' (valid: %s)" % (
            self.name, ", ".join(self.valid))


class EnumerationError(ValidationError):
    """Enumeration over a domain was requested where the domain is
    not finite.
    """


class SearchCapExceededError(RuntimeLimitError):
    """A subset search would evaluate more sets than allowed.
    """

    def __init__(self, requested: int, cap: int) -> None:
        self.requested = requested
        self.cap = cap
        CausalProbeError.__init__(self, str(self))

    def __str__(self) -> str:
        return "search would evaluate %d subsets (cap %d)" % (
            self.requested, self.cap)


class PathOverflowError(RuntimeLimitError):
    """Simple-path enumeration exceeded its cap.
    """

    def __init__(self, cap: int) -> None:
        self.cap = cap
        CausalProbeError.__init__(self, str(self))

    def __str__(self) -> str:
        return "more than %d paths" % self.cap


class NumericError(RuntimeLimitError):
    """A non-finite number appeared where a finite one is required.

    Attributes:
    step [Optional[int]]: training step at which divergence occurred.
    """

    def __init__(self, message: str, step: Optional[int] = None) -> None:
        self.message = message
        self.step = step
        CausalProbeError.__init__(self, str(self))

    def __str__(self) -> str:
        if self.step is not None:
            return "%s (step %d)" % (self.message, self.step)
        return self.message


class UndefinedMetricError(NumericError):
    """A metric cannot be computed, e.g. log of zero probability or a
    ratio against a zero baseline.
    """

    def __init__(self, message: str) -> None:
        NumericError.__init__(self, message)


class ZeroAblationWarning(UserWarning):
    """Zero ablation was applied to raw neurons rather than to sparse
    features, where a zero baseline is not generally meaningful.
    """


class SearchClampWarning(UserWarning):
    """A requested search bound exceeded what the candidates allow and
    was clamped.
    """
