"""Discourse graph workbench: outline notebooks in, typed discourse graphs out."""

__version__ = "0.1.0"
