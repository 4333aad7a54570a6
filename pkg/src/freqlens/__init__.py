"""freqlens: corpus term counting, linear relational embedding evaluation,
and term-frequency regression."""

__version__ = "0.1.0"
