"""Seeded synthetic remote-sensing tiles (RGB, land cover, nDSM, change masks) with
filtering, evaluation metrics and domain-adaptation numerics."""
__version__ = "0.1.0"
