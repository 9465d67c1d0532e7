"""Numerical lab for multi-soliton blow-up dynamics in similarity variables."""

__version__ = "0.1.0"
