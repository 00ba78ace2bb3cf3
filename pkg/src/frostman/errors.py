"""Shared exception types."""


class ConfigError(ValueError):
    """Invalid configuration detected before any computation starts."""


class CertificationError(RuntimeError):
    """A numerical certificate failed (tail bound too large, support leak, ...)."""
