"""Dressed-state Rydberg gates: dressing design, dipole and vdW interactions,
error budgets, GHZ growth planning and exact circuit checks."""

__version__ = "0.1.0"
