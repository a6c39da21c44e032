"""Interpolation in de Branges-Rovnyak spaces over free and commutative balls."""

__version__ = "0.1.0"
