"""Personalized edge-flipping and community detection for multi-layer networks."""

__version__ = "0.1.0"
