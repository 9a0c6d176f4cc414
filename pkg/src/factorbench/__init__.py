"""Workbench for discovering sensitive latent factors and evaluating invariance interventions."""

__version__ = "0.1.0"
