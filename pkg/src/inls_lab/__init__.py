"""Radial laboratory for the mass-critical inhomogeneous NLS equation."""

__version__ = "0.1.0"
