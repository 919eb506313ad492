"""Quasi-tree certification and tree approximation for finite metric graphs."""
__version__ = "0.1.0"
