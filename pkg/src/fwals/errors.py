"""Exception hierarchy. Each family maps to a CLI exit code."""


class FwalsError(Exception):
    exit_code = 1
    kind = "error"


class ConfigError(FwalsError, ValueError):
    exit_code = 2
    kind = "config"


class CapacityError(ConfigError):
    kind = "capacity"


class DomainError(ConfigError):
    kind = "domain"


class DataError(FwalsError, ValueError):
    exit_code = 3
    kind = "data"


class MissingColumnError(DataError, KeyError):
    kind = "missing_column"

    def __str__(self):
        return str(self.args[0]) if self.args else "missing column"


class ParseError(DataError):
    kind = "parse"

    def __init__(self, message, row=None, col=None):
        super().__init__(message)
        self.row = row
        self.col = col


class RankError(DataError):
    kind = "rank"


class NumericError(FwalsError, ArithmeticError):
    exit_code = 4
    kind = "numeric"


class NearSingularityError(NumericError):
    kind = "near_singular"

    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue
