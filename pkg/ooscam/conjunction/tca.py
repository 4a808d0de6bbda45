"""Closest-approach search between two Keplerian orbits: coarse scan, golden-section refinement, range-rate polish."""
from dataclasses import dataclass
import math
from typing import Callable, List, Optional, Tuple

import numpy as np
from loguru import logger
from scipy.optimize import brentq

from ooscam.astro.constants import EARTH, SECONDS_PER_DAY, CentralBody
from ooscam.astro.elements import CartesianState, KeplerianElements
from ooscam.astro.epoch import Epoch
from ooscam.astro.kepler import propagate_many

DEFAULT_SCAN_STEP = 10.0  # s
GOLDEN_TOLERANCE = 1e-3  # s
INVERSE_GOLDEN_RATIO = (math.sqrt(5.0) - 1.0) / 2.0
# Squared distances below this (km^2) everywhere in the window mean the two objects coincide.
COINCIDENT_DISTANCE_SQ = 1e-18


class DegenerateConjunction(ValueError):
    """Raised when both objects occupy the same position over the whole search window."""
    pass


@dataclass(frozen=True, eq=False)
class ClosestApproach:
    tca: Epoch
    miss: float  # km
    rel_speed: float  # km/s
    state_a: CartesianState
    state_b: CartesianState
    at_boundary: bool = False


def golden_section_minimize(func: Callable[[float], float], lo: float, hi: float,
                            tol: float = GOLDEN_TOLERANCE) -> Tuple[float, float]:
    """
    Golden-section search for the minimum of a unimodal function on [lo, hi].
    Returns the final bracket, whose width is at most `tol`.
    """
    x1 = hi - INVERSE_GOLDEN_RATIO * (hi - lo)
    x2 = lo + INVERSE_GOLDEN_RATIO * (hi - lo)
    f1, f2 = func(x1), func(x2)
    while hi - lo > tol:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - INVERSE_GOLDEN_RATIO * (hi - lo)
            f1 = func(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + INVERSE_GOLDEN_RATIO * (hi - lo)
            f2 = func(x2)
    return lo, hi


class _RelativeMotion:
    """Relative position/velocity of two orbits as a function of seconds after a reference epoch."""

    def __init__(self, obj_a: KeplerianElements, obj_b: KeplerianElements, ref: Epoch, body: CentralBody):
        self.obj_a = obj_a
        self.obj_b = obj_b
        self.ref = ref
        self.body = body

    def epochs(self, seconds) -> np.ndarray:
        return self.ref.mjd2000 + np.asarray(seconds, dtype=float) / SECONDS_PER_DAY

    def states(self, seconds):
        epochs = self.epochs(seconds)
        ra, va = propagate_many(self.obj_a, epochs, self.body)
        rb, vb = propagate_many(self.obj_b, epochs, self.body)
        return ra, va, rb, vb

    def distance_sq(self, s: float) -> float:
        ra, _, rb, _ = self.states([s])
        d = ra[0] - rb[0]
        return float(d @ d)

    def range_rate_product(self, s: float) -> float:
        ra, va, rb, vb = self.states([s])
        return float((ra[0] - rb[0]) @ (va[0] - vb[0]))

    def approach(self, s: float, at_boundary: bool = False) -> ClosestApproach:
        epoch = Epoch(float(self.epochs([s])[0]))
        ra, va, rb, vb = self.states([s])
        return ClosestApproach(
            tca=epoch,
            miss=float(np.linalg.norm(ra[0] - rb[0])),
            rel_speed=float(np.linalg.norm(va[0] - vb[0])),
            state_a=CartesianState(ra[0], va[0], epoch),
            state_b=CartesianState(rb[0], vb[0], epoch),
            at_boundary=at_boundary,
        )


def _refine(motion: _RelativeMotion, lo: float, hi: float) -> float:
    lo, hi = golden_section_minimize(motion.distance_sq, lo, hi)
    rr_lo, rr_hi = motion.range_rate_product(lo), motion.range_rate_product(hi)
    if rr_lo < 0.0 < rr_hi:
        return brentq(motion.range_rate_product, lo, hi, xtol=1e-12)
    return 0.5 * (lo + hi)


def find_conjunctions(obj_a: KeplerianElements, obj_b: KeplerianElements, window: Tuple[Epoch, Epoch],
                      body: CentralBody = EARTH, scan_step: float = DEFAULT_SCAN_STEP,
                      screen_distance: Optional[float] = None,
                      include_boundaries: bool = False) -> List[ClosestApproach]:
    """
    Every local minimum of the inter-object distance inside `window`, in time order.

    :param scan_step: Coarse sampling interval [s] used to bracket minima.
    :param screen_distance: When set, brackets whose distance cannot drop below
        this value [km] within one scan step are not refined.
    :param include_boundaries: Also report a window edge when the distance is
        still decreasing into it (an approach cut by the window).
    :raises DegenerateConjunction: if the objects coincide throughout the window.
    """
    start, end = window
    span = end.seconds_since(start)
    if not span > 0:
        raise ValueError(f"Empty search window {start} .. {end}")

    motion = _RelativeMotion(obj_a, obj_b, start, body)
    n_steps = max(2, int(math.ceil(span / scan_step)))
    seconds = np.linspace(0.0, span, n_steps + 1)
    step = seconds[1] - seconds[0]
    ra, va, rb, vb = motion.states(seconds)
    dist_sq = np.einsum("ij,ij->i", ra - rb, ra - rb)
    speed = np.linalg.norm(va - vb, axis=1)

    if float(dist_sq.max()) < COINCIDENT_DISTANCE_SQ:
        raise DegenerateConjunction(f"Objects coincide over the whole window {start} .. {end}")

    def screened_out(idx: int) -> bool:
        if screen_distance is None:
            return False
        return math.sqrt(dist_sq[idx]) - speed[idx] * step > screen_distance

    inner = dist_sq[1:-1]
    left, right = dist_sq[:-2], dist_sq[2:]
    depth = np.maximum(left, right) - inner
    is_min = (inner < left) & (inner <= right) & (depth > 1e-12 * np.maximum(inner, 1.0))
    candidates = np.flatnonzero(is_min) + 1

    found: List[ClosestApproach] = []
    if include_boundaries and dist_sq[0] < dist_sq[1] and not screened_out(0):
        found.append(motion.approach(0.0, at_boundary=True))
    for idx in candidates:
        if screened_out(idx):
            continue
        found.append(motion.approach(_refine(motion, seconds[idx - 1], seconds[idx + 1])))
    if include_boundaries and dist_sq[-1] < dist_sq[-2] and not screened_out(len(seconds) - 1):
        found.append(motion.approach(span, at_boundary=True))

    logger.debug(f"Conjunction scan {start.mjd2000:.6f}..{end.mjd2000:.6f}: "
                 f"{len(candidates)} minima, {len(found)} refined")
    return found


def find_tca(obj_a: KeplerianElements, obj_b: KeplerianElements, window: Tuple[Epoch, Epoch],
             body: CentralBody = EARTH, scan_step: float = DEFAULT_SCAN_STEP) -> Optional[Tuple[Epoch, float, float]]:
    """
    Time of closest approach inside `window` as (tca, miss [km], relative speed [km/s]).
    Returns None when the distance has no interior local minimum (including a
    constant distance).
    """
    approaches = find_conjunctions(obj_a, obj_b, window, body, scan_step)
    if not approaches:
        return None
    best = min(approaches, key=lambda c: c.miss)
    return best.tca, best.miss, best.rel_speed
