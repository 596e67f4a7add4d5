from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalConstants:
    """Atomic units (hbar = m = 1, so h = 2 pi) and the spin degeneracy q."""

    q: int = 2

    def __post_init__(self):
        if int(self.q) != self.q or self.q < 1:
            raise ValueError("spin multiplicity must be a positive integer")

    @property
    def h(self):
        return 2 * math.pi

    @property
    def gamma_tf(self):
        return (6 * math.pi**2 / self.q) ** (2.0 / 3.0)

    def fermi_momentum(self, rho):
        """Radius of the filled momentum ball holding density ``rho``."""
        return (6 * math.pi**2 * rho / self.q) ** (1.0 / 3.0)

    def ball_density(self, p_f):
        return self.q * p_f**3 / (6 * math.pi**2)
