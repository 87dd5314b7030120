"""Stock-return-volatility regression over leakage-free temporal company networks."""

__version__ = "0.1.0"
