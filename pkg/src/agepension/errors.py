class DomainError(ValueError):
    """An argument lies outside the domain of the model function."""


class InfeasibleConsumptionError(DomainError):
    """Consumption at or below the consumption floor."""


class ConfigError(ValueError):
    """Invalid configuration; ``field`` is a dotted path into the config."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message
