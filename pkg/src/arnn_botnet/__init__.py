"""Associated random neural network for collective botnet node classification."""

__version__ = "0.1.0"
