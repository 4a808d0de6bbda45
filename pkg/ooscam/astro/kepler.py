"""Kepler's equation and analytic two-body propagation."""
import math
from typing import Tuple

import numpy as np
from loguru import logger

from ooscam.astro.constants import EARTH, SECONDS_PER_DAY, TWO_PI, CentralBody
from ooscam.astro.elements import CartesianState, KeplerianElements, normalize_angle, state_vectors
from ooscam.astro.epoch import Epoch

KEPLER_TOLERANCE = 1e-12
MAX_NEWTON_ITERATIONS = 50
MAX_BISECTION_ITERATIONS = 200
# Newton starts from E = M below this eccentricity and from E = pi above it.
HIGH_ECCENTRICITY = 0.8


class SolverFailure(Exception):
    """Raised when an iterative orbital solver cannot produce a converged answer."""
    pass


class KeplerSolverError(SolverFailure):
    """Raised when Kepler's equation cannot be solved to tolerance."""
    pass


def _kepler_residual(ecc_anom: float, mean_anom: float, e: float) -> float:
    return ecc_anom - e * math.sin(ecc_anom) - mean_anom


def _bisect_kepler(mean_anom: float, e: float) -> float:
    # E - e*sin(E) is strictly increasing, so [0, 2*pi] always brackets the root.
    lo, hi = 0.0, TWO_PI
    mid = mean_anom
    for _ in range(MAX_BISECTION_ITERATIONS):
        mid = 0.5 * (lo + hi)
        if _kepler_residual(mid, mean_anom, e) > 0.0:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-15:
            break
    return mid


def solve_kepler(mean_anom: float, e: float) -> float:
    """
    Solves M = E - e*sin(E) for the eccentric anomaly E.

    :param mean_anom: Mean anomaly [rad], any finite value (wrapped to [0, 2*pi)).
    :param e: Eccentricity, 0 <= e < 1.
    :return: Eccentric anomaly in [0, 2*pi].
    :raises KeplerSolverError: if neither Newton nor bisection reaches the tolerance.
    """
    if not math.isfinite(mean_anom):
        raise KeplerSolverError(f"Mean anomaly must be finite, got {mean_anom}")
    if not 0.0 <= e < 1.0:
        raise KeplerSolverError(f"Eccentricity must be in [0, 1), got {e}")

    M = mean_anom % TWO_PI
    E = M if e < HIGH_ECCENTRICITY else math.pi
    for _ in range(MAX_NEWTON_ITERATIONS):
        step = _kepler_residual(E, M, e) / (1.0 - e * math.cos(E))
        E -= step
        if abs(step) < 1e-15:
            break

    if not abs(_kepler_residual(E, M, e)) < KEPLER_TOLERANCE:
        logger.debug(f"Newton did not converge for M={M}, e={e}; falling back to bisection")
        E = _bisect_kepler(M, e)
        residual = _kepler_residual(E, M, e)
        if not abs(residual) < KEPLER_TOLERANCE:
            raise KeplerSolverError(f"Kepler solve failed for M={M}, e={e}: residual {residual:.3e}")
    return E


def solve_kepler_array(mean_anom: np.ndarray, e: float) -> np.ndarray:
    """Vectorized solve_kepler; entries Newton cannot settle are re-solved one by one."""
    M = np.mod(np.asarray(mean_anom, dtype=float), TWO_PI)
    E = M.copy() if e < HIGH_ECCENTRICITY else np.full_like(M, math.pi)
    for _ in range(MAX_NEWTON_ITERATIONS):
        step = (E - e * np.sin(E) - M) / (1.0 - e * np.cos(E))
        E -= step
        if not np.any(np.abs(step) >= 1e-15):
            break

    unsettled = ~(np.abs(E - e * np.sin(E) - M) < KEPLER_TOLERANCE)
    for idx in np.flatnonzero(unsettled):
        E[idx] = solve_kepler(float(M[idx]), e)
    return E


def true_to_eccentric(true_anom, e: float):
    return 2.0 * np.arctan2(np.sqrt(1.0 - e) * np.sin(true_anom / 2.0), np.sqrt(1.0 + e) * np.cos(true_anom / 2.0))


def eccentric_to_true(ecc_anom, e: float):
    return 2.0 * np.arctan2(np.sqrt(1.0 + e) * np.sin(ecc_anom / 2.0), np.sqrt(1.0 - e) * np.cos(ecc_anom / 2.0))


def eccentric_to_mean(ecc_anom, e: float):
    return ecc_anom - e * np.sin(ecc_anom)


def mean_motion(a: float, body: CentralBody = EARTH) -> float:
    return math.sqrt(body.mu / a ** 3)


def orbital_period(a: float, body: CentralBody = EARTH) -> float:
    """Keplerian period [s] of an orbit with semi-major axis a [km]."""
    if a <= 0:
        raise ValueError(f"Semi-major axis must be positive, got {a}")
    return TWO_PI * math.sqrt(a ** 3 / body.mu)


def _true_anomalies_at(el: KeplerianElements, seconds: np.ndarray, body: CentralBody) -> np.ndarray:
    mean_anom0 = float(eccentric_to_mean(true_to_eccentric(el.true_anom, el.e), el.e))
    ecc_anom = solve_kepler_array(mean_anom0 + mean_motion(el.a, body) * seconds, el.e)
    return eccentric_to_true(ecc_anom, el.e)


def propagate_many(el: KeplerianElements, epochs_mjd2000, body: CentralBody = EARTH) -> Tuple[np.ndarray, np.ndarray]:
    """
    Two-body positions and velocities of `el` at many epochs (float mjd2000 days).
    Returns (r, v) arrays shaped (N, 3) in km and km/s.
    """
    seconds = (np.asarray(epochs_mjd2000, dtype=float).reshape(-1) - el.epoch.mjd2000) * SECONDS_PER_DAY
    return state_vectors(el, _true_anomalies_at(el, seconds, body), body)


def propagate_elements(el: KeplerianElements, to: Epoch, body: CentralBody = EARTH) -> KeplerianElements:
    """The same orbit with the true anomaly advanced (or rewound) to `to`."""
    seconds = np.array([to.seconds_since(el.epoch)])
    nu = float(_true_anomalies_at(el, seconds, body)[0])
    return el.with_true_anomaly(normalize_angle(nu), to)


def propagate(el: KeplerianElements, to: Epoch, body: CentralBody = EARTH) -> CartesianState:
    if to == el.epoch:
        r, v = state_vectors(el, el.true_anom, body)
        return CartesianState(r, v, to)
    moved = propagate_elements(el, to, body)
    r, v = state_vectors(moved, moved.true_anom, body)
    return CartesianState(r, v, to)
