"""Lossless XR motion recording container (.xror) and dataset tooling."""

__version__ = "0.1.0"
