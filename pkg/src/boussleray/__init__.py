"""Finite element solver for the Boussinesq equations with an adaptive,
deconvolution-based Leray filter."""

__version__ = "0.1.0"
