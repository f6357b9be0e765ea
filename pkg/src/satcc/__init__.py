"""Equality-saturation optimizer for directive-annotated kernel loops."""

__version__ = "0.1.0"
