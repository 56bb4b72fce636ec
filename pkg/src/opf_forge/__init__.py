"""Optimum-path forest clustering and BoVW signal classification toolkit."""

__version__ = "0.1.0"
