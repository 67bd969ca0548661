"""Energy-constrained multi-view coverage path planning for UAV swarms."""

__version__ = "0.1.0"
