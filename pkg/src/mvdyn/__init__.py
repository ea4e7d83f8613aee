"""Exact desk-scale model of the C*-envelope of the tensor algebra of a
finite multivariable dynamical system."""

__version__ = "0.1.0"
