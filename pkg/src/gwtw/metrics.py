"""Trial orchestration, system-wide metrics and parameter sweeps."""
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import List, Optional

import numpy as np

from . import video, web
from ._jit import njit
from .config import ConfigError
from .distributions import RngStream, choose_servers
from .outcome import (CONVERGED_NONOPTIMAL, CONVERGED_OPTIMAL, TIMEOUT,
                      TrialOutcome)
from .web import minmax_hitrate  # noqa: F401  (re-exported)

SWEEP_AXES = ("tau", "sigma", "alpha", "nu_over_ns", "f")
DEFAULT_PERCENTILES = ("min", 1, 5, 50)


def load(config):
    """Users per unit of system-wide cache capacity, n_u / (kappa * n_s)."""
    return config.n_u / (config.kappa * config.n_s)


# --- single trials -----------------------------------------------------------

def run_trial(config, stream_id=0, model="web", stop_at_convergence=True):
    if model == "web":
        state = web.new_state(config, stream_id)
        web.run(state, config.horizon, stop_at_convergence)
        if not web.is_converged(state):
            status = TIMEOUT
        else:
            status = CONVERGED_OPTIMAL if web.is_optimal(state) else CONVERGED_NONOPTIMAL
        return TrialOutcome(
            status=status,
            convergence_time=web.convergence_time(state),
            final_user_hitrates=web.user_hitrates(state),
            trace=state.trace,
            seed=config.seed,
            stream_id=stream_id,
            model="web",
        )
    if model == "video":
        state = video.new_video_state(config, stream_id)
        outcome = video.video_run(state, max(1, int(config.horizon)), stop_at_convergence)
        outcome.stream_id = stream_id
        return outcome
    raise ValueError(f"unknown model {model!r}")


@dataclass
class SweepPoint:
    """Aggregate over the trials of one parameter setting.

    ``failure_rate`` is non-optimal over converged trials and is None when no
    trial converged. Convergence-time statistics cover optimal trials only.
    """

    value: object
    trials: int
    converged_optimal: int
    converged_nonoptimal: int
    timeout: int
    failure_rate: Optional[float]
    timeout_rate: float
    mean_time: Optional[float]
    median_time: Optional[float]
    sem_time: Optional[float]
    outcomes: List[TrialOutcome] = field(default_factory=list, repr=False)

    @property
    def times(self):
        return np.array([o.convergence_time for o in self.outcomes if o.optimal])


def aggregate(outcomes, value=None):
    counts = {s: 0 for s in (CONVERGED_OPTIMAL, CONVERGED_NONOPTIMAL, TIMEOUT)}
    for o in outcomes:
        counts[o.status] += 1
    n = len(outcomes)
    converged = counts[CONVERGED_OPTIMAL] + counts[CONVERGED_NONOPTIMAL]
    times = np.sort([o.convergence_time for o in outcomes if o.optimal])
    mean = median = sem = None
    if times.size:
        mean = float(times.mean())
        median = float(np.median(times))
        if times.size > 1:
            sem = float(times.std(ddof=1) / math.sqrt(times.size))
    return SweepPoint(
        value=value,
        trials=n,
        converged_optimal=counts[CONVERGED_OPTIMAL],
        converged_nonoptimal=counts[CONVERGED_NONOPTIMAL],
        timeout=counts[TIMEOUT],
        failure_rate=counts[CONVERGED_NONOPTIMAL] / converged if converged else None,
        timeout_rate=counts[TIMEOUT] / n if n else 0.0,
        mean_time=mean,
        median_time=median,
        sem_time=sem,
        outcomes=list(outcomes),
    )


def run_trials(config, trials, model="web", jobs=1, stop_at_convergence=True, value=None):
    """Run trials on stream ids 0..trials-1; serial and parallel agree exactly."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    task = partial(run_trial, config, model=model, stop_at_convergence=stop_at_convergence)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(task, range(trials)))
    else:
        outcomes = [task(i) for i in range(trials)]
    return aggregate(outcomes, value)


# --- sweeps ------------------------------------------------------------------

@dataclass
class SweepResult:
    axis: str
    values: list
    points: List[SweepPoint]

    def point(self, value):
        return self.points[self.values.index(value)]


def apply_axis(base, axis, value):
    """Config for one sweep point; everything but ``axis`` stays fixed.

    ``nu_over_ns`` keeps n_u and the base load fixed, so n_s = n_u / value and
    kappa = n_u / (load * n_s), both rounded to integers.
    """
    if axis == "tau":
        return base.replace(tau=value)
    if axis == "sigma":
        return base.replace(sigma=value, f=None)
    if axis == "alpha":
        return base.replace(alpha=value)
    if axis == "f":
        return base.replace(f=value)
    if axis == "nu_over_ns":
        if value <= 0:
            raise ConfigError("nu_over_ns", f"must be > 0, got {value}")
        exact_ns = base.n_u / value
        n_s = max(1, round(exact_ns))
        if abs(n_s - exact_ns) > 0.1 * exact_ns:
            raise ConfigError("nu_over_ns", f"n_u/{value} = {exact_ns:g} servers is not close to an integer")
        exact_kappa = base.n_u / (load(base) * n_s)
        kappa = max(1, round(exact_kappa))
        if abs(kappa - exact_kappa) > 0.1 * exact_kappa:
            raise ConfigError("nu_over_ns", f"kappa = {exact_kappa:g} drifts more than 10% when rounded")
        sigma = min(base.sigma, n_s)
        return base.replace(n_s=n_s, kappa=kappa, sigma=sigma)
    raise ConfigError("sweep.axis", f"unknown axis {axis!r}; expected one of {', '.join(SWEEP_AXES)}")


def sweep(base, axis, values, trials=20, model="web", jobs=1):
    if not values:
        raise ConfigError("sweep.values", "must be non-empty")
    configs = [apply_axis(base, axis, v) for v in values]
    points = [run_trials(c, trials, model=model, jobs=jobs, value=v) for c, v in zip(configs, values)]
    return SweepResult(axis, list(values), points)


# --- order statistics --------------------------------------------------------

def order_statistics(hitrates, percentiles=DEFAULT_PERCENTILES):
    """Nearest-rank percentiles of ``hitrates``; ``"min"`` gives the minimum."""
    x = np.sort(np.asarray(hitrates, dtype=np.float64))
    if x.size == 0:
        raise ValueError("order_statistics of an empty sample")
    out = []
    for p in percentiles:
        if p == "min":
            out.append(float(x[0]))
            continue
        if not 0 < p <= 100:
            raise ValueError(f"percentile must be in (0, 100], got {p}")
        rank = max(1, math.ceil(p / 100.0 * x.size - 1e-9))
        out.append(float(x[rank - 1]))
    return out


def mixed_spread_experiment(config, measure_at=200.0, trials=10, percentiles=DEFAULT_PERCENTILES):
    """Run the web model to ``measure_at`` and take order statistics of the
    users' best-candidate window hit rates.

    Returns an array of shape (trials, len(percentiles)); average over axis 0
    for the per-setting figure values.
    """
    rows = []
    for i in range(trials):
        state = web.new_state(config, i)
        web.run(state, measure_at, stop_at_convergence=False)
        rows.append(order_statistics(web.user_hitrates(state), percentiles))
    return np.array(rows)


# --- balls into bins ---------------------------------------------------------

@njit
def _max_loads(n_u, n_s, sigma, rng, out):
    loads = np.zeros(n_s, dtype=np.int64)
    pick = np.empty(sigma, dtype=np.int64)
    for t in range(out.shape[0]):
        loads[:] = 0
        for _ in range(n_u):
            choose_servers(rng, n_s, pick)
            for i in range(sigma):
                loads[pick[i]] += 1
        out[t] = loads.max()


def balls_in_bins_max_load(n_u, n_s, sigma, trials, rng):
    """Max per-server count when each of n_u users picks sigma distinct servers.

    Returns one maximum load per trial.
    """
    if min(n_u, n_s, sigma, trials) < 1:
        raise ValueError("counts must be >= 1")
    if sigma > n_s:
        raise ValueError(f"sigma={sigma} exceeds n_s={n_s}")
    if not isinstance(rng, RngStream):
        rng = RngStream(int(rng))
    out = np.empty(trials, dtype=np.int64)
    _max_loads(n_u, n_s, sigma, rng.state, out)
    return out
