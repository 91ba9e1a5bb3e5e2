# coding=utf-8


class InvariantViolationError(ValueError):
    """
    Raised when an input or a state transition would break one of the
    market's invariants. The name of the invariant is carried so the
    command line front-end can report it.
    """

    invariant = 'invariant'

    def __init__(self, message, invariant=None):
        # type: (str, str) -> None
        super(InvariantViolationError, self).__init__(message)

        if invariant is not None:
            self.invariant = invariant


class ProbabilityVectorError(InvariantViolationError):
    invariant = 'probability vector'


class ShapeMismatchError(InvariantViolationError):
    invariant = 'shape'


class ScoringDomainError(InvariantViolationError):
    invariant = 'scoring domain'

    def __init__(self, message, outcome_index):
        # type: (str, int) -> None
        super(ScoringDomainError, self).__init__(message)
        self.outcome_index = outcome_index


class UnreachablePriceError(InvariantViolationError):
    invariant = 'reachable prices'


class ShortSellingError(InvariantViolationError):
    invariant = 'short selling'


class DecisionRuleError(InvariantViolationError):
    invariant = 'full support'


class SettlementError(InvariantViolationError):
    invariant = 'settlement order'


class ScenarioParseError(ValueError):
    """
    Raised when a scenario file cannot be parsed. Carries the offending field
    and, for malformed JSON, the line and column.
    """

    def __init__(self, message, field=None, line=None, column=None):
        # type: (str, str, int, int) -> None
        self.field = field
        self.line = line
        self.column = column

        location = []

        if line is not None:
            location.append('line {}, column {}'.format(line, column))

        if field is not None:
            location.append('field \'{}\''.format(field))

        if location:
            message = '{}: {}'.format(', '.join(location), message)

        super(ScenarioParseError, self).__init__(message)
