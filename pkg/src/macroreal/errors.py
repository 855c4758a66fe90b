"""Exception hierarchy.

Every error raised by the package derives from :class:`MacrorealError`, which
is itself a ``ValueError`` so callers that only care about bad input can catch
the builtin.
"""


class MacrorealError(ValueError):
    pass


class NotHermitian(MacrorealError):
    pass


class DimMismatch(MacrorealError):
    pass


class BadDim(MacrorealError):
    pass


class InvalidBloch(MacrorealError):
    pass


class InvalidState(MacrorealError):
    """A density matrix or state parameterization violates its invariants.

    ``violations`` lists ``(name, magnitude)`` for every failed check, not just
    the first one.
    """

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class TraceNotOne(InvalidState):
    pass


class NotPSD(InvalidState):
    pass


class BadCase(MacrorealError):
    pass


class NotNormalized(MacrorealError):
    pass


class NotOrthogonal(MacrorealError):
    pass


class NotDichotomic(MacrorealError):
    pass


class BadProjectors(MacrorealError):
    pass


class MissingData(MacrorealError):
    pass


class WrongSubset(MacrorealError):
    pass


class WrongKind(MacrorealError):
    pass


class UnknownFamily(MacrorealError):
    pass


class InvalidSpec(MacrorealError):
    pass


class Unattainable(MacrorealError):
    pass


class InvariantBreach(RuntimeError):
    """Internal consistency check failed; signals a bug rather than bad input."""
