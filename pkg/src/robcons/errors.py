"""Exception hierarchy shared by all robcons modules."""


class RobconsError(Exception):
    """Base class for all errors raised by robcons."""


class InvalidArgument(RobconsError, ValueError):
    pass


class UnsupportedSize(RobconsError):
    """An exhaustive routine was asked to work on an input beyond its size guard."""


class IntegrationDiverged(RobconsError, ArithmeticError):
    def __init__(self, message, last_valid_time):
        super().__init__(message)
        self.last_valid_time = last_valid_time


class ParseError(RobconsError, ValueError):
    def __init__(self, message, position, expected=()):
        self.position = position
        self.expected = tuple(expected)
        detail = f"{message} at position {position}"
        if self.expected:
            detail += f" (expected one of: {', '.join(self.expected)})"
        super().__init__(detail)


class EvaluationError(RobconsError, ArithmeticError):
    pass


class ScenarioError(RobconsError, ValueError):
    """Scenario validation failure; ``problems`` lists every issue found."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
