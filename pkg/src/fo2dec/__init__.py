"""Decision procedures for two-variable logic on forests."""

__version__ = "0.1.0"
