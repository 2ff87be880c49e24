"""Spectra of magnetic Hodge Laplacians: closed forms, discretizations and eigenvalue bounds."""

__version__ = "0.1.0"
