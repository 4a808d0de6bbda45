from dataclasses import asdict, dataclass, field

from ooscam.config.config import OUTPUT_DIR, THREADS
from ooscam.environment.types import GridConfig, RewardThresholds, RewardWeights
from ooscam.training.cross_entropy import INITIAL_SIGMAS, CEConfig
from ooscam.training.initializers import DEFAULT_DV_MAX

CASE_STUDY = "case-study"
# Lambert docking transfer length used by the published case study [day].
DEFAULT_DOCK_GAP_DAYS = 0.0704


@dataclass(frozen=True)
class RunConfig:
    """
    Fully resolved settings of one CLI run.
    Everything except `workers` is embedded in the run's output files.
    """

    scenario: str = CASE_STUDY
    init: str = "lambert"
    seed: int = 0
    output_dir: str = OUTPUT_DIR
    ce: CEConfig = field(default_factory=lambda: CEConfig.for_init("lambert"))
    thresholds: RewardThresholds = field(default_factory=RewardThresholds)
    weights: RewardWeights = field(default_factory=RewardWeights)
    grid: GridConfig = field(default_factory=GridConfig)
    t1_offset: float = 0.0  # s after scenario start
    dock_gap: float = DEFAULT_DOCK_GAP_DAYS
    dv_max: float = DEFAULT_DV_MAX
    workers: int = THREADS

    def __post_init__(self):
        if self.init not in INITIAL_SIGMAS:
            raise ValueError(f"init must be one of {sorted(INITIAL_SIGMAS)}, got {self.init!r}")
        if not self.grid.fine_step > 0:
            raise ValueError(f"fine_step must be positive, got {self.grid.fine_step}")
        if not self.dock_gap > 0:
            raise ValueError(f"dock_gap must be positive, got {self.dock_gap}")
        if self.t1_offset < 0:
            raise ValueError(f"t1_offset must be non-negative, got {self.t1_offset}")
        if self.dv_max < 0:
            raise ValueError(f"dv_max must be non-negative, got {self.dv_max}")

    def as_dict(self) -> dict:
        data = asdict(self)
        data.pop("workers")
        data.pop("output_dir")
        return data
