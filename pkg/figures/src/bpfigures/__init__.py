"""Batch plotting of the diode benchmark output files."""

__version__ = "0.1.0"
