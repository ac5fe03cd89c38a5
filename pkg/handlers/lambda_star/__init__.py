"""
lambda_* handler package.

Exports LambdaStarHandler for the first-eigenvalue thresholds.
"""
from handlers.lambda_star.handler import LambdaStarHandler

__all__ = ["LambdaStarHandler"]
