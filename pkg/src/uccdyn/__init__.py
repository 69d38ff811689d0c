"""Exact towers of finite trees, their convex-metric completions, and fixed or
2-periodic points of PL group actions on them."""

__version__ = "0.1.0"
