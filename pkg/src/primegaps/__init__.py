"""Sieve-ratio certificates, admissible tuples, covering constructions and prime-gap statistics."""

__version__ = "0.1.0"
