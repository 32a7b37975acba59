"""Poisson structures with coordinate expressions: brackets on functions and
1-forms, cotangent paths and homotopies, isotropy algebras, monodromy-style
period scans on sphere foliations."""

__version__ = "0.1.0"
