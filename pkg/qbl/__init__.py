"""Quadratic bosonic Lindbladian analyzer."""
__version__ = "0.1.0"
