"""
Short-encounter collision probability.

The combined position covariance of both objects is projected onto the
encounter plane (orthogonal to the relative velocity) and the resulting 2D
Gaussian is integrated over the hard-body disk centred on the origin.
"""
from dataclasses import dataclass, field
import math
from typing import Tuple

import numpy as np
from scipy.integrate import quad
from scipy.special import erfc

from ooscam.astro.elements import CartesianState
from ooscam.astro.epoch import Epoch

MIN_RELATIVE_SPEED = 1e-9  # km/s
SQRT2 = math.sqrt(2.0)


class EncounterModelInvalid(ValueError):
    """Raised when the relative velocity is too small for the short-encounter model."""
    pass


class CovarianceError(ValueError):
    """Raised when a covariance matrix is not symmetric positive definite."""
    pass


@dataclass(frozen=True)
class CovarianceSpec:
    """Per-axis (inertial x, y, z) position sigmas [km] for both objects and the combined hard-body radius [km]."""

    sigma_a: Tuple[float, float, float] = (0.1, 0.1, 0.1)
    sigma_b: Tuple[float, float, float] = (0.1, 0.1, 0.1)
    combined_radius: float = 0.01

    def __post_init__(self):
        object.__setattr__(self, "sigma_a", tuple(float(s) for s in self.sigma_a))
        object.__setattr__(self, "sigma_b", tuple(float(s) for s in self.sigma_b))
        if len(self.sigma_a) != 3 or len(self.sigma_b) != 3:
            raise ValueError("Covariance sigmas need exactly three axes per object")
        if not all(s > 0 for s in self.sigma_a + self.sigma_b):
            raise ValueError(f"Covariance sigmas must be positive: {self.sigma_a}, {self.sigma_b}")
        if not self.combined_radius > 0:
            raise ValueError(f"Combined hard-body radius must be positive, got {self.combined_radius}")

    def combined_covariance(self) -> np.ndarray:
        return np.diag(np.square(self.sigma_a)) + np.diag(np.square(self.sigma_b))

    def as_dict(self) -> dict:
        return {
            "sigma_a_km": list(self.sigma_a),
            "sigma_b_km": list(self.sigma_b),
            "combined_radius_km": self.combined_radius,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CovarianceSpec":
        return cls(tuple(data["sigma_a_km"]), tuple(data["sigma_b_km"]), float(data["combined_radius_km"]))


@dataclass(frozen=True, eq=False)
class ConjunctionEvent:
    tca: Epoch
    miss_distance: float
    rel_speed: float
    pc: float
    miss_vector_2d: np.ndarray = field(repr=False)
    cov_2d: np.ndarray = field(repr=False)

    def lead_time(self, now: Epoch) -> float:
        """Seconds from `now` until closest approach."""
        return self.tca.seconds_since(now)


def encounter_basis(rel_pos: np.ndarray, rel_vel: np.ndarray) -> np.ndarray:
    """
    Rows are the two in-plane axes of the encounter frame: the first along the
    miss direction (or an arbitrary perpendicular when the miss is along the
    relative velocity), the second completing the right-handed plane.
    """
    y_hat = rel_vel / np.linalg.norm(rel_vel)
    in_plane = rel_pos - (rel_pos @ y_hat) * y_hat
    norm = np.linalg.norm(in_plane)
    if norm <= 1e-12 * max(1.0, float(np.linalg.norm(rel_pos))):
        helper = np.eye(3)[int(np.argmin(np.abs(y_hat)))]
        in_plane = helper - (helper @ y_hat) * y_hat
        norm = np.linalg.norm(in_plane)
    x_hat = in_plane / norm
    z_hat = np.cross(x_hat, y_hat)
    return np.vstack([x_hat, z_hat])


def project_encounter_plane(st_a: CartesianState, st_b: CartesianState,
                            cov: CovarianceSpec) -> Tuple[np.ndarray, np.ndarray]:
    """Miss vector [km] and combined covariance [km^2] expressed in the encounter plane."""
    rel_pos = st_a.r - st_b.r
    rel_vel = st_a.v - st_b.v
    speed = float(np.linalg.norm(rel_vel))
    if speed <= MIN_RELATIVE_SPEED:
        raise EncounterModelInvalid(f"Relative speed {speed:.3e} km/s is too small for a short encounter")
    basis = encounter_basis(rel_pos, rel_vel)
    miss_2d = basis @ rel_pos
    cov_2d = basis @ cov.combined_covariance() @ basis.T
    return miss_2d, 0.5 * (cov_2d + cov_2d.T)


def _interval_mass(lo: float, hi: float, mean: float, sigma: float) -> float:
    """P(lo < X < hi) for X ~ N(mean, sigma^2), evaluated on the tail that keeps precision."""
    a = (lo - mean) / (SQRT2 * sigma)
    b = (hi - mean) / (SQRT2 * sigma)
    if a > 0.0:
        return 0.5 * (erfc(a) - erfc(b))
    return 0.5 * (erfc(-b) - erfc(-a))


def collision_probability(miss_2d, cov_2d, radius: float) -> float:
    """
    Probability mass of N(miss_2d, cov_2d) inside the disk of `radius` around the origin.

    The covariance is diagonalised (the disk is rotation invariant), the inner
    integral across the disk is done in closed form with erfc and the outer one
    by adaptive quadrature over x = R*sin(theta), which removes the square-root
    behaviour at the disk edge.
    """
    miss_2d = np.asarray(miss_2d, dtype=float).reshape(2)
    cov_2d = np.asarray(cov_2d, dtype=float).reshape(2, 2)
    if radius < 0:
        raise ValueError(f"Hard-body radius must be non-negative, got {radius}")
    if not np.allclose(cov_2d, cov_2d.T, rtol=1e-10, atol=0.0):
        raise CovarianceError(f"Covariance is not symmetric: {cov_2d.tolist()}")
    try:
        np.linalg.cholesky(cov_2d)
    except np.linalg.LinAlgError as e:
        raise CovarianceError(f"Covariance is not positive definite: {cov_2d.tolist()}") from e
    if radius == 0.0:
        return 0.0

    variances, axes = np.linalg.eigh(cov_2d)
    mx, my = axes.T @ miss_2d
    sx, sy = np.sqrt(variances)

    def integrand(theta: float) -> float:
        x = radius * math.sin(theta)
        half_chord = radius * math.cos(theta)
        density = math.exp(-0.5 * ((x - mx) / sx) ** 2) / (math.sqrt(2.0 * math.pi) * sx)
        if density == 0.0:
            return 0.0
        return density * _interval_mass(-half_chord, half_chord, my, sy) * half_chord

    half_pi = 0.5 * math.pi
    peak = math.asin(max(-1.0, min(1.0, mx / radius)))
    points = [peak] if -half_pi < peak < half_pi else None
    value, _ = quad(integrand, -half_pi, half_pi, points=points, epsabs=1e-15, epsrel=1e-12, limit=200)
    return min(1.0, max(0.0, value))


def assess_conjunction(st_a: CartesianState, st_b: CartesianState, cov: CovarianceSpec) -> ConjunctionEvent:
    """Encounter-plane projection and Pc for two states at their closest approach."""
    miss_2d, cov_2d = project_encounter_plane(st_a, st_b, cov)
    pc = collision_probability(miss_2d, cov_2d, cov.combined_radius)
    return ConjunctionEvent(
        tca=st_a.epoch,
        miss_distance=float(np.linalg.norm(st_a.r - st_b.r)),
        rel_speed=float(np.linalg.norm(st_a.v - st_b.v)),
        pc=pc,
        miss_vector_2d=miss_2d,
        cov_2d=cov_2d,
    )
