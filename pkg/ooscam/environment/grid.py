"""
Hybrid time grid: a fine step around maneuvers and the predicted dock, a
coarse step elsewhere and an optional sparser step between the docking phase
and the CAM.
"""
from dataclasses import dataclass
import math
from typing import List, Optional, Tuple

import numpy as np
from loguru import logger

from ooscam.astro.constants import SECONDS_PER_DAY
from ooscam.astro.epoch import Epoch
from ooscam.environment.types import CAM_ROWS, DOCKING_ROWS, ActionTable, Scenario

# Grid points closer than this [s] are treated as the same instant.
MERGE_TOLERANCE = 1e-6


@dataclass(frozen=True, eq=False)
class TimeGrid:
    mjd2000: np.ndarray
    fine: np.ndarray

    def __post_init__(self):
        self.mjd2000.setflags(write=False)
        self.fine.setflags(write=False)

    def __len__(self) -> int:
        return len(self.mjd2000)

    def index_of(self, mjd2000: float) -> int:
        idx = int(np.searchsorted(self.mjd2000, mjd2000))
        if idx >= len(self.mjd2000) or self.mjd2000[idx] != mjd2000:
            raise KeyError(f"Epoch {mjd2000} is not a grid point")
        return idx


def _merge(intervals: List[Tuple[float, float, float]]) -> List[Tuple[float, float, List[float]]]:
    """Merges overlapping (lo, hi, origin) intervals into (lo, hi, origins)."""
    merged: List[Tuple[float, float, List[float]]] = []
    for lo, hi, origin in sorted(intervals):
        if merged and lo <= merged[-1][1]:
            prev_lo, prev_hi, origins = merged[-1]
            merged[-1] = (prev_lo, max(prev_hi, hi), origins + [origin])
        else:
            merged.append((lo, hi, [origin]))
    return merged


def _aligned_points(lo: float, hi: float, origin: float, step: float, closed: bool) -> np.ndarray:
    # aligned on the origin so that spacing around it is exactly `step`
    k_lo = math.ceil((lo - origin) / step - 1e-9)
    k_hi = math.floor((hi - origin) / step + 1e-9)
    if not closed and origin + k_hi * step >= hi - MERGE_TOLERANCE:
        k_hi -= 1
    return origin + np.arange(k_lo, k_hi + 1) * step


def _fine_points(lo: float, hi: float, origins: List[float], step: float) -> np.ndarray:
    """Each origin owns the span up to the midpoints to its neighbours."""
    origins = sorted(set(origins))
    cuts = [lo] + [0.5 * (a + b) for a, b in zip(origins, origins[1:])] + [hi]
    parts = [_aligned_points(cuts[k], cuts[k + 1], origin, step, closed=k == len(origins) - 1)
             for k, origin in enumerate(origins)]
    return np.concatenate(parts)


def build_time_grid(scenario: Scenario, table: ActionTable, fine_step: float = 0.08, coarse_step: float = 10.0,
                    fine_window: float = 60.0, skip_step: Optional[float] = None,
                    dock_epoch: Optional[Epoch] = None) -> TimeGrid:
    """
    Builds the episode grid over [scenario.start, scenario.end].

    Maneuver epochs, the predicted dock epoch (row 2 unless `dock_epoch` is
    given), the window ends and the scenario TCA hint are grid points as the
    exact same floats.
    """
    if not fine_step < coarse_step:
        raise ValueError(f"fine_step {fine_step} must be smaller than coarse_step {coarse_step}")
    if not fine_window > 0:
        raise ValueError(f"fine_window must be positive, got {fine_window}")

    start = scenario.start.mjd2000
    span = scenario.end.seconds_since(scenario.start)
    dock = dock_epoch if dock_epoch is not None else table.rows[DOCKING_ROWS[-1]].t

    def to_seconds(mjd: float) -> float:
        return (mjd - start) * SECONDS_PER_DAY

    docking_anchors = [table.rows[i].t.mjd2000 for i in DOCKING_ROWS] + [dock.mjd2000]
    cam_anchors = [table.rows[i].t.mjd2000 for i in CAM_ROWS]
    intervals = _merge([
        (max(0.0, to_seconds(a) - fine_window), min(span, to_seconds(a) + fine_window), to_seconds(a))
        for a in docking_anchors + cam_anchors
    ])

    coarse = np.arange(0.0, span, coarse_step)
    if skip_step is not None and skip_step > coarse_step:
        skip_lo = max(to_seconds(a) for a in docking_anchors) + fine_window
        skip_hi = min(to_seconds(a) for a in cam_anchors) - fine_window
        if skip_hi > skip_lo:
            coarse = coarse[(coarse <= skip_lo) | (coarse >= skip_hi)]
            coarse = np.concatenate([coarse, np.arange(skip_lo, skip_hi, skip_step)])

    in_fine = np.zeros(len(coarse), dtype=bool)
    fine_parts = []
    for lo, hi, origins in intervals:
        in_fine |= (coarse >= lo - MERGE_TOLERANCE) & (coarse <= hi + MERGE_TOLERANCE)
        fine_parts.append(_fine_points(lo, hi, origins, fine_step))
    candidates = np.unique(np.concatenate([coarse[~in_fine]] + fine_parts))

    exact = [start, scenario.end.mjd2000] + docking_anchors + cam_anchors
    if scenario.tca_hint is not None and scenario.start <= scenario.tca_hint <= scenario.end:
        exact.append(scenario.tca_hint.mjd2000)
    exact_mjd = np.unique(np.array(exact))
    exact_s = to_seconds(exact_mjd)

    # drop candidates that would duplicate an exact point or each other
    pos = np.searchsorted(exact_s, candidates)
    gap_right = np.abs(exact_s[np.minimum(pos, len(exact_s) - 1)] - candidates)
    gap_left = np.abs(candidates - exact_s[np.maximum(pos - 1, 0)])
    candidates = candidates[(np.minimum(gap_left, gap_right) > MERGE_TOLERANCE)
                            & (candidates > 0.0) & (candidates < span)]
    if len(candidates):
        candidates = candidates[np.concatenate([[True], np.diff(candidates) > MERGE_TOLERANCE])]

    mjd = np.sort(np.concatenate([start + candidates / SECONDS_PER_DAY, exact_mjd]))
    seconds = to_seconds(mjd)
    fine = np.zeros(len(mjd), dtype=bool)
    for lo, hi, _ in intervals:
        fine |= (seconds >= lo - MERGE_TOLERANCE) & (seconds <= hi + MERGE_TOLERANCE)

    logger.debug(f"Time grid: {len(mjd)} points ({int(fine.sum())} fine) over {span:.1f} s")
    return TimeGrid(mjd, fine)
