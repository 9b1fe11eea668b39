"""Memory-bounded sparse feature selection with Count-Sketch accumulated gradients."""

__version__ = "0.1.0"
