"""Multi-scale masked frequency-domain forecasting for long-term time series."""

__version__ = "0.1.0"
