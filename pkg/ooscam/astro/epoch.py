from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
import math

from ooscam.astro.constants import SECONDS_PER_DAY

# Reference instant of the mjd2000 scale (UTC, no leap-second table).
MJD2000_REFERENCE = datetime(2000, 1, 1, tzinfo=timezone.utc)


@dataclass(frozen=True, order=True)
class Epoch:
    """An instant expressed as days since 2000-01-01T00:00:00 UTC."""

    mjd2000: float

    def __post_init__(self):
        if not math.isfinite(self.mjd2000):
            raise ValueError(f"Epoch must be finite, got {self.mjd2000}")

    @classmethod
    def from_datetime(cls, moment: datetime) -> "Epoch":
        """
        Converts a calendar instant to mjd2000.
        Naive datetimes are taken as UTC.
        """
        if moment.tzinfo is None:
            moment = moment.replace(tzinfo=timezone.utc)
        return cls((moment - MJD2000_REFERENCE) / timedelta(days=1))

    @classmethod
    def from_iso(cls, text: str) -> "Epoch":
        return cls.from_datetime(datetime.fromisoformat(text))

    def to_datetime(self) -> datetime:
        return MJD2000_REFERENCE + timedelta(days=self.mjd2000)

    def shifted(self, seconds: float) -> "Epoch":
        return Epoch(self.mjd2000 + seconds / SECONDS_PER_DAY)

    def seconds_since(self, other: "Epoch") -> float:
        return (self.mjd2000 - other.mjd2000) * SECONDS_PER_DAY

    def __str__(self) -> str:
        return f"{self.mjd2000:.6f} mjd2000 ({self.to_datetime().isoformat()})"
