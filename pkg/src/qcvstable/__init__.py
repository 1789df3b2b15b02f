"""Tail-index estimation for symmetric alpha-stable data."""
__version__ = "0.1.0"
