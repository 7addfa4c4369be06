"""Numerical certificates for minimal Lagrangian submanifolds of Kähler manifolds."""

__version__ = "0.1.0"

SCHEMA_VERSION = "kahlerlag-report/1"
