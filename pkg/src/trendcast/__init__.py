"""Multimodal new-product sales forecasting with exogenous search-trend signals."""

__version__ = "0.1.0"
