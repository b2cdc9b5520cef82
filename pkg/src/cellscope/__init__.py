"""Field-sensitive value analysis for a byte-level C subset."""

__version__ = "0.1.0"
