"""Ricci de Turck flow on warped-product cones over Einstein cross-sections.

Subpackages are plain modules: ``spectra`` (cross-section data and the
symmetric-space tables), ``stability`` (exact spectral criteria and weight
windows), ``geometry`` (closed-form curvature of warped products), ``flow``
(method-of-lines solver), ``diagnostics`` and ``cli``.
"""
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
