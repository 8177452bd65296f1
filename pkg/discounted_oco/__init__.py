"""
discounted-oco - Discounted adaptive online convex optimization and online conformal prediction
"""

__version__ = "0.3.0"
__author__ = "discounted-oco Contributors"
