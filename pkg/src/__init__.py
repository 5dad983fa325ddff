"""Spherical analysis toolkit for Damek-Ricci spaces"""

__version__ = "1.0.0"
