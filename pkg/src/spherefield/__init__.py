"""Isotropic Gaussian fields on the sphere: spectra, sampling and regularity checks."""

__version__ = "0.1.0"
