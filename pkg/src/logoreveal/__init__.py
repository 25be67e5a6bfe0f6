"""Content-aware animated logo synthesis, verification, and repair."""

__version__ = "0.1.0"
