"""Decomposition-based forecasting with a dual min-max hybrid loss."""
