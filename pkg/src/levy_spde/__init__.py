"""Lévy white noise, kernel admissibility checks and elliptic SPDE solution sampling."""

__version__ = "0.1.0"
