"""Exception hierarchy. Each class carries the exit code the CLI returns for it."""


class FringelabError(Exception):
    exit_code = 1


class ConfigError(FringelabError):
    exit_code = 2


class StorageError(FringelabError):
    """I/O failure or a corrupt/missing stored artifact."""

    exit_code = 3


class DegenerateInputError(FringelabError):
    exit_code = 4


class ShapeError(DegenerateInputError, ValueError):
    """Two operands live on different grids."""


class NumericalValidityError(FringelabError):
    exit_code = 5
