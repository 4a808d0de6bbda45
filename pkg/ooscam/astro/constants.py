"""Physical constants and the central body model shared by the astro modules."""
import math
from dataclasses import dataclass

SECONDS_PER_DAY = 86400.0
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class CentralBody:
    """Point-mass central body: gravitational parameter [km^3/s^2] and radius [km]."""

    mu: float
    radius: float

    def __post_init__(self):
        if not (self.mu > 0 and self.radius > 0):
            raise ValueError(f"Central body needs mu > 0 and radius > 0, got mu={self.mu}, radius={self.radius}")


EARTH = CentralBody(mu=398600.4418, radius=6378.137)
