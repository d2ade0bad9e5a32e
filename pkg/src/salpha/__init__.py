"""Device-independent key-rate bounds for the asymmetric CHSH family."""

__version__ = "0.1.0"
