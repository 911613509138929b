"""Cross-lingual sentiment transfer through a linear embedding translation matrix."""

__version__ = "0.1.0"
