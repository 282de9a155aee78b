"""LFA-GCL training and evaluation toolkit."""

__version__ = "1.0.0"
