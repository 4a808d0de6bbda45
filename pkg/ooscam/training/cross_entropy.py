"""
Cross-entropy search over action-table parameters.

An independent Gaussian per parameter is sampled every iteration; the mean is
pulled toward the elite sessions while sigma, the learning rate and the elite
percentile follow fixed geometric schedules.
"""
from dataclasses import asdict, dataclass, field, replace
import math
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from ooscam.astro.constants import EARTH, CentralBody
from ooscam.environment.simulator import run_episode
from ooscam.environment.types import (PARAMS_PER_ROW, ROWS, ActionTable, GridConfig, RewardThresholds,
                                      RewardWeights, Scenario)
from ooscam.workers.worker import evaluate_batch

MAX_PERCENTILE = 99.0

# Initial standard deviations per init mode: (dv component [m/s], time [day]).
INITIAL_SIGMAS = {"random": (1.0, 0.02), "lambert": (5.0, 0.005)}

LOG_COLUMNS = ("iteration", "mean_reward", "max_reward", "elite_threshold", "sigma_norm", "lr", "percentile",
               "policy_reward", "best_reward", "failed_sessions")


class TrainingAborted(Exception):
    """Raised when every session of an iteration failed to produce a reward."""
    pass


@dataclass(frozen=True)
class CEConfig:
    iterations: int = 35
    sessions: int = 30
    sigma_decay: float = 0.98
    learning_decay: float = 0.98
    percentile_growth: float = 1.005
    initial_percentile: float = 70.0
    learning_rate: float = 1.0
    sigma_dv: float = 1.0  # m/s
    sigma_t: float = 0.02  # day
    dv_bound: Optional[float] = 100.0  # m/s per component; None disables clipping
    patience: int = 10
    seed: int = 0
    failure_reward: float = -1e12

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if self.sessions < 2:
            raise ValueError(f"sessions must be >= 2, got {self.sessions}")
        for name in ("sigma_decay", "learning_decay"):
            if not 0.0 < getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1], got {getattr(self, name)}")
        if not self.percentile_growth >= 1.0:
            raise ValueError(f"percentile_growth must be >= 1, got {self.percentile_growth}")
        if not 0.0 < self.initial_percentile < 100.0:
            raise ValueError(f"initial_percentile must lie in (0, 100), got {self.initial_percentile}")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError(f"learning_rate must lie in (0, 1], got {self.learning_rate}")
        if self.sigma_dv < 0 or self.sigma_t < 0:
            raise ValueError("Initial sigmas must be non-negative")
        if self.patience < 1:
            raise ValueError(f"patience must be >= 1, got {self.patience}")
        if self.dv_bound is not None and not self.dv_bound > 0:
            raise ValueError(f"dv_bound must be positive, got {self.dv_bound}")

    @classmethod
    def for_init(cls, mode: str, **overrides) -> "CEConfig":
        if mode not in INITIAL_SIGMAS:
            raise ValueError(f"Unknown init mode {mode!r}, expected one of {sorted(INITIAL_SIGMAS)}")
        sigma_dv, sigma_t = INITIAL_SIGMAS[mode]
        return cls(**{"sigma_dv": sigma_dv, "sigma_t": sigma_t, **overrides})

    def initial_sigma(self) -> np.ndarray:
        return np.tile([self.sigma_dv, self.sigma_dv, self.sigma_dv, self.sigma_t], ROWS).astype(float)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class PolicyDistribution:
    """Independent Gaussian per parameter: `mean` is the expected table, `sigma` its spread."""

    mean: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float).copy()
        self.sigma = np.asarray(self.sigma, dtype=float).copy()
        if self.mean.shape != self.sigma.shape:
            raise ValueError(f"mean {self.mean.shape} and sigma {self.sigma.shape} differ in shape")
        if np.any(self.sigma < 0):
            raise ValueError("sigma must be non-negative")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.mean + self.sigma * rng.standard_normal((n, self.mean.size))


def select_elite(rewards: Sequence[float], percentile: float) -> np.ndarray:
    """
    Indices (ascending) whose reward reaches the `percentile`-th percentile of
    `rewards`; the best session is always included.
    """
    values = np.asarray(rewards, dtype=float)
    if values.size == 0:
        raise ValueError("select_elite needs at least one reward")
    threshold = np.percentile(values, percentile)
    elite = np.flatnonzero(values >= threshold)
    if elite.size == 0:
        elite = np.array([int(np.argmax(values))])
    return elite


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    mean_reward: float
    max_reward: float
    elite_threshold: float
    sigma_norm: float
    lr: float
    percentile: float
    policy_reward: float
    best_reward: float
    failed_sessions: int

    def as_row(self) -> list:
        return [getattr(self, name) for name in LOG_COLUMNS]


@dataclass
class TrainingLog:
    records: List[IterationRecord] = field(default_factory=list)
    best_params: Optional[np.ndarray] = None
    best_reward: float = -math.inf
    final_mean: Optional[np.ndarray] = None
    stopped_early: bool = False

    def rows(self) -> List[list]:
        return [r.as_row() for r in self.records]


class CrossEntropyTrainer:
    """
    Generic cross-entropy maximizer of `evaluate(params) -> reward or None`.

    `repair` maps any parameter vector onto the feasible set; it is applied to
    every sample and to the updated mean. Failed evaluations (None) never enter
    the elite set.
    """

    def __init__(self, evaluate: Callable[[np.ndarray], Optional[float]], cfg: CEConfig,
                 repair: Optional[Callable[[np.ndarray], np.ndarray]] = None, workers: int = 1):
        self.evaluate = evaluate
        self.cfg = cfg
        self.repair = repair if repair is not None else (lambda params: params)
        self.workers = workers

    def _evaluate_all(self, jobs: List[np.ndarray]) -> List[Optional[float]]:
        results = evaluate_batch(self.evaluate, jobs, self.workers)
        return [None if r is None or not math.isfinite(r) else float(r) for r in results]

    def run(self, init: np.ndarray, sigma: Optional[np.ndarray] = None) -> TrainingLog:
        cfg = self.cfg
        rng = np.random.default_rng(cfg.seed)
        sigma0 = np.asarray(sigma if sigma is not None else cfg.initial_sigma(), dtype=float)
        dist = PolicyDistribution(self.repair(np.asarray(init, dtype=float)), sigma0)
        log = TrainingLog()
        lr, percentile = cfg.learning_rate, cfg.initial_percentile
        stale = 0

        for k in range(cfg.iterations):
            samples = np.array([self.repair(s) for s in dist.sample(rng, cfg.sessions)])
            results = self._evaluate_all(list(samples) + [dist.mean.copy()])
            session_rewards, policy_reward = results[:-1], results[-1]
            ok = [r for r in session_rewards if r is not None]
            failed = len(session_rewards) - len(ok)
            if not ok:
                logger.error(f"Iteration {k}: all {cfg.sessions} sessions failed "
                             f"(sigma norm {float(np.linalg.norm(dist.sigma)):.4g}, lr {lr:.4g})")
                raise TrainingAborted(f"All {cfg.sessions} sessions failed in iteration {k}")

            rewards = np.array([r if r is not None else cfg.failure_reward for r in session_rewards])
            elite = select_elite(rewards, percentile)
            elite = elite[[session_rewards[i] is not None for i in elite]]
            if elite.size == 0:
                elite = np.array([max((i for i, r in enumerate(session_rewards) if r is not None),
                                      key=lambda i: session_rewards[i])])
            threshold = float(np.percentile(rewards, percentile))

            improved = False
            candidates = [(r, samples[i]) for i, r in enumerate(session_rewards) if r is not None]
            if policy_reward is not None:
                candidates.append((policy_reward, dist.mean.copy()))
            for reward, params in candidates:
                if reward > log.best_reward:
                    log.best_reward, log.best_params, improved = reward, params.copy(), True

            record = IterationRecord(
                iteration=k, mean_reward=float(np.mean(ok)), max_reward=float(np.max(ok)),
                elite_threshold=threshold, sigma_norm=float(np.linalg.norm(dist.sigma)), lr=lr,
                percentile=percentile, policy_reward=policy_reward if policy_reward is not None else math.nan,
                best_reward=log.best_reward, failed_sessions=failed,
            )
            log.records.append(record)
            logger.info(f"Iteration {k}: mean {record.mean_reward:.4f} max {record.max_reward:.4f} "
                        f"policy {record.policy_reward:.4f} best {log.best_reward:.4f} "
                        f"(|best| {abs(log.best_reward):.4f}), {len(elite)} elite, {failed} failed")

            dist.mean = self.repair(dist.mean + lr * (samples[elite].mean(axis=0) - dist.mean))
            dist.sigma = dist.sigma * cfg.sigma_decay
            lr *= cfg.learning_decay
            percentile = min(percentile * cfg.percentile_growth, MAX_PERCENTILE)

            stale = 0 if improved else stale + 1
            if stale >= cfg.patience and k + 1 < cfg.iterations:
                logger.warning(f"Best reward unchanged for {stale} iterations, stopping after iteration {k}")
                log.stopped_early = True
                break

        log.final_mean = dist.mean.copy()
        return log


def repair_table_vector(params: np.ndarray, start: float, end: float,
                        dv_bound: Optional[float] = None) -> np.ndarray:
    """
    Clamps maneuver times to [start, end] and re-sorts rows by time (each dv
    stays with its row); dv components are clipped to +-dv_bound when given.
    """
    rows = np.asarray(params, dtype=float).reshape(ROWS, PARAMS_PER_ROW).copy()
    rows[:, 3] = np.clip(rows[:, 3], start, end)
    if dv_bound is not None:
        rows[:, :3] = np.clip(rows[:, :3], -dv_bound, dv_bound)
    rows = rows[np.argsort(rows[:, 3], kind="stable")]
    return rows.reshape(-1)


class _EpisodeObjective:
    def __init__(self, scenario: Scenario, thr: RewardThresholds, grid: GridConfig, weights: RewardWeights,
                 body: CentralBody):
        self.scenario = scenario
        self.thr = thr
        self.grid = grid
        self.weights = weights
        self.body = body

    def __call__(self, params: np.ndarray) -> Optional[float]:
        trace, breakdown = run_episode(self.scenario, ActionTable.from_vector(params), self.thr, self.grid,
                                       self.weights, self.body)
        return None if trace.failed else breakdown.total


def train(scenario: Scenario, cfg: CEConfig, init: ActionTable, thr: RewardThresholds = RewardThresholds(),
          grid: GridConfig = GridConfig(), weights: RewardWeights = RewardWeights(), workers: int = 1,
          body: CentralBody = EARTH) -> Tuple[ActionTable, TrainingLog]:
    """
    Trains an action table for `scenario` starting from `init`.
    Returns the best table seen (sessions and per-iteration policy means) and the log.

    :raises TrainingAborted: if an iteration has no successful session.
    """
    init.check_window(scenario.start, scenario.end)
    cfg = replace(cfg, failure_reward=weights.failure_reward)
    start, end = scenario.start.mjd2000, scenario.end.mjd2000

    def repair(params: np.ndarray) -> np.ndarray:
        return repair_table_vector(params, start, end, cfg.dv_bound)

    logger.info(f"Training on {scenario.name}: {cfg.iterations} iterations x {cfg.sessions} sessions, "
                f"seed {cfg.seed}, {workers} worker(s)")
    trainer = CrossEntropyTrainer(_EpisodeObjective(scenario, thr, grid, weights, body), cfg, repair, workers)
    log = trainer.run(init.to_vector())
    best = ActionTable.from_vector(log.best_params)
    logger.info(f"Training finished after {len(log.records)} iterations, best reward {log.best_reward:.4f}")
    return best, log
