"""Shared exception types."""


class ShapeError(ValueError):
    """Operands have incompatible shapes for the requested operation."""


class ConfigError(ValueError):
    """A configuration value is outside the supported set."""
