"""
Core module - shared base classes and utilities.
"""
from core.base_handler import BaseHandler

__all__ = ["BaseHandler"]
