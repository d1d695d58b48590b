"""Toolkit for locally checkable labelling problems on cycles and toroidal grids."""

__version__ = "0.1.0"
