"""Short-term load forecasting with a small 1D convolutional network."""

__version__ = "0.1.0"
