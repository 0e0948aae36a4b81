"""Cost-aware spectral bandits on graphs."""

__version__ = "0.1.0"
