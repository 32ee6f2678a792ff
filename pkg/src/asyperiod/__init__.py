"""Asymptotic periodicity of transfer operators for piecewise-linear maps."""
from __future__ import annotations

__version__ = "0.1.0"
