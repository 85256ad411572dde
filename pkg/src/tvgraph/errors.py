"""Exception hierarchy shared by every module in the package."""


class TVGraphError(Exception):
    """Base class for all package errors."""


class InvalidDimensionError(TVGraphError, ValueError):
    pass


class ConfigError(TVGraphError, ValueError):
    """A configuration value is outside its valid range."""


class GeneratorConfigError(ConfigError):
    pass


class FusionConfigError(ConfigError):
    pass


class DataError(TVGraphError, ValueError):
    """Input data could not be parsed or failed validation."""


class DomainError(TVGraphError, ValueError):
    """A quantity was evaluated outside its mathematical domain."""


class UnobservedColumnError(TVGraphError):
    """A signal column has no observed entry and no ridge fallback is enabled."""

    def __init__(self, graph, column):
        self.graph = graph
        self.column = column
        super().__init__(
            f"column {column} of graph {graph} is fully unobserved; "
            "enable column_ridge to impute it"
        )


class NumericalFailure(TVGraphError, ArithmeticError):
    """An ADMM block produced a non-finite value or a factorization failed."""

    def __init__(self, block, detail=""):
        self.block = block
        msg = f"numerical failure in block '{block}'"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
