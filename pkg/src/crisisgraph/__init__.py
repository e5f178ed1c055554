"""Graph-based semi-supervised CNN text classification for crisis tweets."""

__version__ = "0.1.0"
