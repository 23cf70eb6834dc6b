"""Capacities on finite metric spaces and Lusin sets at grid scale."""

__version__ = "0.1.0"
