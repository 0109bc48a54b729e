"""ehkit: transfer operators, spectral decomposition and ergodic-hierarchy classification."""
__version__ = "0.1.0"
