#!/usr/bin/env python3
"""Exceptions raised across the package."""


class ConfigError(ValueError):
    """Invalid antenna counts, traffic parameters or run specifications."""


class DimensionError(ValueError):
    """Operands with incompatible shapes."""


class GenericityError(RuntimeError):
    """Rejection sampling ran out of attempts."""


class NoSchemeError(ValueError):
    """No achievable scheme exists for the antenna configuration."""


class InconsistentSystemError(RuntimeError):
    """A receiver collected contradictory linear equations."""


class ExactnessError(AssertionError):
    """A decoded value or a zero-forced component is not exact."""
