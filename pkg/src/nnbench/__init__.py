"""nnbench: layer-level neural network benchmarking and characterization."""

__version__ = "0.1.0"
