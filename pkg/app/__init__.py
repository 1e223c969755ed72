"""Toolkit de aproximación diofántica ponderada, inhomogénea e intermedia"""

__version__ = "1.0.0"
