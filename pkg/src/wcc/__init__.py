"""Computable core of higher-rank Weyl-chamber-flow counting for SL(d,R)."""

__version__ = "0.1.0"
