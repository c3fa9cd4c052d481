"""Classical and quantum iterated function systems."""
__version__ = "0.1.0"
