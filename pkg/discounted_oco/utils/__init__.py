"""
Utility modules: special functions and config validation schemas.
"""
