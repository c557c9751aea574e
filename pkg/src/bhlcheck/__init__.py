"""Static verifier for hypothesis-testing programs annotated in belief Hoare logic."""

__version__ = "0.1.0"
