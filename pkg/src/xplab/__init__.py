"""Numerical laboratory for metric X_p inequalities on cyclic products, tori and free products."""

__version__ = "0.1.0"
