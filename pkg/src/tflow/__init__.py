"""Pseudospectral simulation of non-isothermal two-phase incompressible flow on the flat torus."""

__version__ = "0.1.0"
