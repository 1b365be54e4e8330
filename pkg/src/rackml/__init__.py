"""Tabular regression and explainability engine for rack-column capacity prediction."""

__version__ = "0.1.0"
