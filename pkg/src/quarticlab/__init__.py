"""Torsion, Betti maps and orbits on quartic surfaces containing three lines."""

__version__ = "0.1.0"
