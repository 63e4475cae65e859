"""Word-embedding stability toolkit."""

__version__ = "0.1.0"
