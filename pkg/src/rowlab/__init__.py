"""Workbench for simply-typed record/variant calculi with structural subtyping,
row and presence polymorphism, the translations between them, and executable
checks of their metatheory."""

__version__ = "0.1.0"
