from __future__ import annotations


class PvTagError(Exception):
    """Base class for every error raised by pvtag."""


class ConfigError(PvTagError, ValueError):
    """Scenario file or parameter validation failed."""


class DomainError(PvTagError, ValueError):
    """A physical quantity is outside the domain the models accept."""
