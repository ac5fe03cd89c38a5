"""
Solve handler package.

Exports SolveHandler for the mountain-pass pipeline.
"""
from handlers.solve.handler import SolveHandler

__all__ = ["SolveHandler"]
