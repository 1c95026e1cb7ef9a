"""Classical capacity of finite-dimensional quantum channels assisted by noisy entanglement."""

__version__ = "0.1.0"
