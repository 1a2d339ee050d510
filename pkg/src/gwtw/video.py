"""Discrete-time MaxBitRate simulation for video streaming.

Every step each user streams from all of its current candidates. A server
connected to ``N`` users gives each of them ``min(1, kappa / N)`` units of
bitrate. An undecided user that sees a full unit from some candidate keeps
that server (the lowest id if several qualify). Loads are computed from the
candidate sets at the start of the step and decisions are applied at its
end.
"""
import numpy as np

from .distributions import RngStream, ZipfSampler, choose_servers, zipf_ranks
from .outcome import CONVERGED_NONOPTIMAL, CONVERGED_OPTIMAL, TIMEOUT, TrialOutcome


class VideoState:
    def __init__(self, config, content, cand, n_cand):
        n_u, smax = cand.shape
        self.config = config
        self.kappa = config.kappa
        self.step = 0
        self.content = content
        self.cand = cand
        self.n_cand = n_cand
        self.chosen = np.full(n_u, -1, dtype=np.int64)
        self.decision_step = np.full(n_u, -1, dtype=np.int64)
        self.server_load = np.zeros(config.n_s, dtype=np.int64)
        self.last_bitrates = np.full((n_u, smax), np.nan)
        self.trace = []

    @property
    def n_u(self):
        return self.content.shape[0]

    def active(self):
        """Boolean (n_u, smax) mask of the slots each user currently streams from."""
        slots = np.arange(self.cand.shape[1])
        undecided = (self.chosen < 0)[:, None] & (slots[None, :] < self.n_cand[:, None])
        decided = slots[None, :] == self.chosen[:, None]
        return undecided | decided

    def candidates(self, u):
        return [int(s) for s in self.cand[u][self.active()[u]]]


def video_init(config, rng):
    """Same draw order as the web model: contents, then candidate sets."""
    n_u = config.n_u
    sampler = ZipfSampler(config.n_c, config.alpha)
    content = np.empty(n_u, dtype=np.int64)
    zipf_ranks(sampler.cdf, rng.state, content)
    spreads = config.spreads()
    cand = np.full((n_u, config.max_spread), -1, dtype=np.int64)
    for u in range(n_u):
        choose_servers(rng.state, config.n_s, cand[u, : spreads[u]])
    return VideoState(config, content, cand, spreads)


def new_video_state(config, stream_id=0):
    return video_init(config, RngStream(config.seed, stream_id))


def video_step(state):
    active = state.active()
    load = np.bincount(state.cand[active], minlength=state.config.n_s)
    rates = np.full(state.cand.shape, np.nan)
    rates[active] = np.minimum(1.0, state.kappa / load[state.cand[active]])

    full = rates == 1.0
    deciding = (state.chosen < 0) & full.any(axis=1)
    # argmax finds the first qualifying slot; slots are in ascending server id
    state.chosen[deciding] = np.argmax(full[deciding], axis=1)
    state.decision_step[deciding] = state.step

    state.server_load = load
    state.last_bitrates = rates
    state.step += 1
    state.trace.append((state.step, undecided_fraction(state), minmax_bitrate(state)))
    return state


def undecided_fraction(state):
    return float(np.mean(state.chosen < 0))


def is_converged(state):
    return bool(np.all(state.chosen >= 0))


def user_bitrates(state):
    if state.step == 0:
        raise RuntimeError("no step has been executed yet")
    return np.nanmax(state.last_bitrates, axis=1)


def minmax_bitrate(state):
    return float(user_bitrates(state).min())


def decided_loads(state):
    users = np.flatnonzero(state.chosen >= 0)
    return np.bincount(state.cand[users, state.chosen[users]], minlength=state.config.n_s)


def is_optimal(state):
    if not is_converged(state):
        raise RuntimeError("is_optimal is only defined once every user has decided")
    return bool(np.all(decided_loads(state) <= state.kappa))


def convergence_step(state):
    return int(state.decision_step.max()) + 1 if is_converged(state) else None


def video_run(state, max_steps, stop_at_convergence=True):
    """Step until every user has decided or ``max_steps`` steps have run."""
    if max_steps < 1:
        raise ValueError(f"max_steps must be >= 1, got {max_steps}")
    for _ in range(int(max_steps)):
        video_step(state)
        if stop_at_convergence and is_converged(state):
            break
    if not is_converged(state):
        status = TIMEOUT
    else:
        status = CONVERGED_OPTIMAL if is_optimal(state) else CONVERGED_NONOPTIMAL
    return TrialOutcome(
        status=status,
        convergence_time=convergence_step(state),
        final_user_hitrates=user_bitrates(state),
        trace=np.array(state.trace, dtype=np.float64).reshape(-1, 3),
        seed=state.config.seed,
        model="video",
    )
