"""Numerical laboratory for graphical anisotropic curvature flow with
contact-angle and Neumann boundary conditions."""

__version__ = "0.1.0"
