"""
Single-revolution Lambert solver in universal variables.

The time-of-flight equation is solved for the universal variable z with a
bracketing root finder; the transfer direction follows the sign of the z
component of r0 x r1 (prograde: counter-clockwise seen from +z).
"""
import math
from typing import Tuple

import numpy as np
from loguru import logger
from scipy.optimize import brentq

from ooscam.astro.constants import EARTH, TWO_PI, CentralBody
from ooscam.astro.kepler import SolverFailure

# Single-revolution transfers live below z = (2*pi)^2.
Z_UPPER = TWO_PI ** 2 * (1.0 - 1e-6)
Z_LOWER_LIMIT = -1.0e4
# Transfer angles this close to 0 or pi leave the transfer plane undefined.
SINGULAR_ANGLE = 1e-8


class LambertFailure(SolverFailure):
    """Raised when no single-revolution transfer connects the two positions in the given time."""
    pass


def stumpff_c(z: float) -> float:
    if abs(z) < 1e-3:
        return 0.5 - z / 24.0 + z ** 2 / 720.0 - z ** 3 / 40320.0
    if z > 0:
        return 2.0 * math.sin(math.sqrt(z) / 2.0) ** 2 / z
    return (math.cosh(math.sqrt(-z)) - 1.0) / (-z)


def stumpff_s(z: float) -> float:
    if abs(z) < 1e-3:
        return 1.0 / 6.0 - z / 120.0 + z ** 2 / 5040.0 - z ** 3 / 362880.0
    if z > 0:
        sz = math.sqrt(z)
        return (sz - math.sin(sz)) / sz ** 3
    sz = math.sqrt(-z)
    return (math.sinh(sz) - sz) / sz ** 3


def transfer_angle(r0: np.ndarray, r1: np.ndarray, prograde: bool = True) -> float:
    cos_dnu = float(r0 @ r1) / (np.linalg.norm(r0) * np.linalg.norm(r1))
    dnu = math.acos(max(-1.0, min(1.0, cos_dnu)))
    cross_z = float(np.cross(r0, r1)[2])
    if (prograde and cross_z < 0.0) or (not prograde and cross_z >= 0.0):
        dnu = TWO_PI - dnu
    return dnu


def lambert(r0, r1, dt: float, body: CentralBody = EARTH, prograde: bool = True) -> Tuple[np.ndarray, np.ndarray]:
    """
    Velocities (v0, v1) [km/s] of the conic from r0 to r1 [km] in dt seconds.

    :raises LambertFailure: for non-positive dt, a singular transfer angle, or a
        time of flight with no single-revolution solution.
    """
    r0 = np.asarray(r0, dtype=float).reshape(3)
    r1 = np.asarray(r1, dtype=float).reshape(3)
    if not dt > 0:
        raise LambertFailure(f"Time of flight must be positive, got {dt}")

    r0_norm = float(np.linalg.norm(r0))
    r1_norm = float(np.linalg.norm(r1))
    dnu = transfer_angle(r0, r1, prograde)
    if dnu < SINGULAR_ANGLE or abs(dnu - math.pi) < SINGULAR_ANGLE or TWO_PI - dnu < SINGULAR_ANGLE:
        raise LambertFailure(
            f"Transfer angle {math.degrees(dnu):.9f} deg is singular (collinear positions); transfer plane undefined"
        )

    A = math.sin(dnu) * math.sqrt(r0_norm * r1_norm / (1.0 - math.cos(dnu)))
    sqrt_mu = math.sqrt(body.mu)

    def y_of(z: float) -> float:
        return r0_norm + r1_norm + A * (z * stumpff_s(z) - 1.0) / math.sqrt(stumpff_c(z))

    def tof_error(z: float) -> float:
        y = y_of(z)
        if y <= 0.0:
            # time of flight tends to zero where y reaches zero
            return -dt
        x = math.sqrt(y / stumpff_c(z))
        return (x ** 3 * stumpff_s(z) + A * math.sqrt(y)) / sqrt_mu - dt

    if not tof_error(Z_UPPER) > 0.0:
        raise LambertFailure(f"Time of flight {dt:.3f} s exceeds the single-revolution limit for this geometry")

    z_lower = 0.0
    while tof_error(z_lower) >= 0.0:
        z_lower = -1.0 if z_lower == 0.0 else 2.0 * z_lower
        if z_lower < Z_LOWER_LIMIT:
            raise LambertFailure(
                f"No single-revolution solution: time of flight {dt:.3f} s is shorter than the fastest transfer "
                f"through {math.degrees(dnu):.3f} deg"
            )

    try:
        z = brentq(tof_error, z_lower, Z_UPPER, xtol=1e-14, rtol=4.0 * np.finfo(float).eps, maxiter=500)
    except (RuntimeError, ValueError) as e:
        raise LambertFailure(f"Universal-variable iteration failed: {e}") from e

    y = y_of(z)
    f = 1.0 - y / r0_norm
    g = A * math.sqrt(y / body.mu)
    g_dot = 1.0 - y / r1_norm
    v0 = (r1 - f * r0) / g
    v1 = (g_dot * r1 - r0) / g
    logger.debug(f"Lambert transfer through {math.degrees(dnu):.3f} deg in {dt:.3f} s converged at z={z:.9f}")
    return v0, v1
