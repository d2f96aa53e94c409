"""Exception types raised across the package."""


class FlagmineError(Exception):
    """Base class for all package errors."""


class NonPositiveEntry(FlagmineError, ValueError):
    def __init__(self, i, j, value=None):
        self.i, self.j, self.value = i, j, value
        super().__init__(f"non-positive entry at ({i}, {j}): {value!r}; shift the data or use additive mode")


class IndexOutOfRange(FlagmineError, IndexError):
    pass


class EmptyAlignment(FlagmineError, ValueError):
    pass


class EmptyRowOrColumn(FlagmineError, ValueError):
    pass


class TooFewColumns(FlagmineError, ValueError):
    pass


class TooLarge(FlagmineError, ValueError):
    pass


class InvalidPsi(FlagmineError, ValueError):
    pass


class ConfigError(FlagmineError, ValueError):
    pass


class CapExceeded(FlagmineError, OverflowError):
    pass


class InfeasiblePlant(FlagmineError, ValueError):
    pass


class RowSetMismatch(FlagmineError, ValueError):
    pass


class BothEmpty(FlagmineError, ValueError):
    pass


class SchemaError(FlagmineError, ValueError):
    pass
