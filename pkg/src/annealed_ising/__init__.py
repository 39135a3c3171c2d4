"""Annealed Ising models on generalized random graphs and configuration models."""

__version__ = "0.1.0"
