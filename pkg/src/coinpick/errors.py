"""Exception types shared across the package."""


class CoinpickError(Exception):
    """Base class for package-specific errors."""


class BudgetExceededError(CoinpickError):
    """A flip or allocation costs more than the remaining budget."""


class InvalidCoinError(CoinpickError, IndexError):
    """A coin index is outside the instance's 1..n range."""


class DegreeOverflowError(CoinpickError):
    """The exact polynomial route would exceed the configured degree cap."""


class NoAffordableCoinError(CoinpickError):
    """Every coin's flip cost exceeds the remaining budget."""


class NonconvergenceError(CoinpickError):
    """Index calibration failed to bracket within the iteration limit."""


class InstanceTooLargeError(CoinpickError):
    """The instance exceeds the exact solver's configured size caps."""


class MalformedTreeError(CoinpickError):
    """A strategy tree violates the budget or names an invalid coin."""


class ConfigError(CoinpickError):
    """An experiment config failed validation; ``field`` names the offender."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")
