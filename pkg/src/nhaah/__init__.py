"""Spectra, phases and localization lengths of the PT-symmetric non-Hermitian AAH chain."""

__version__ = "0.1.0"
