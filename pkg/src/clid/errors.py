"""Exception types; each maps to a CLI exit code."""


class ClidError(Exception):
    exit_code = 1


class ConfigError(ClidError, ValueError):
    exit_code = 2


class DataError(ClidError, ValueError):
    exit_code = 3


class NumericalError(ClidError, ArithmeticError):
    exit_code = 4
