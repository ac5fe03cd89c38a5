"""
Norms handler package.

Exports NormsHandler for the modular / Luxemburg / Sobolev report.
"""
from handlers.norms.handler import NormsHandler

__all__ = ["NormsHandler"]
