"""Numerical companion for time-averaged bounds on the charge a nucleus
can hold under Vlasov and time-dependent Thomas-Fermi dynamics."""
from __future__ import annotations

from .constants import PhysicalConstants
from .field import FieldSnapshot, NucleusSpec, RadialDensity, RadialGrid, solve_field
from .kernel import InequalityMargin, WeightParams

__all__ = [
    "FieldSnapshot", "InequalityMargin", "NucleusSpec", "PhysicalConstants", "RadialDensity",
    "RadialGrid", "WeightParams", "solve_field",
]
__version__ = "0.1.0"
