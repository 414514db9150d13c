"""File-coupled figure regeneration for qmclab experiment outputs."""

__version__ = "0.1.0"
