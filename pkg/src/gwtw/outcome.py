from dataclasses import dataclass, field
from typing import Optional

import numpy as np

CONVERGED_OPTIMAL = "converged-optimal"
CONVERGED_NONOPTIMAL = "converged-nonoptimal"
TIMEOUT = "timeout"
STATUSES = (CONVERGED_OPTIMAL, CONVERGED_NONOPTIMAL, TIMEOUT)


@dataclass
class TrialOutcome:
    """Result of one trial.

    ``convergence_time`` is simulated time for the web model and a step count
    for the video model; it is None exactly when the trial timed out.
    ``final_user_hitrates`` holds each user's best current-candidate metric
    (windowed hit rate, or bitrate) when the trial stopped.
    """

    status: str
    convergence_time: Optional[float]
    final_user_hitrates: np.ndarray = field(repr=False)
    trace: np.ndarray = field(repr=False)
    seed: int = 0
    stream_id: int = 0
    model: str = "web"

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")
        if (self.convergence_time is None) != (self.status == TIMEOUT):
            raise ValueError("convergence_time must be set iff the trial converged")

    @property
    def converged(self):
        return self.status != TIMEOUT

    @property
    def optimal(self):
        return self.status == CONVERGED_OPTIMAL

    @property
    def minmax(self):
        return float(self.final_user_hitrates.min())
