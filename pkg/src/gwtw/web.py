"""Continuous-time simulation of GoWithTheWinner for web content.

Each user fixes one content item and issues Poisson(lam) requests. Until it
has decided, every request goes to all of its candidate servers; each
candidate keeps a window of the last ``tau`` hit/miss bits (zeros at the
start). The first candidate (lowest server id) whose window is all hits
becomes the user's server for good, and later requests go only there.

The whole state lives in flat numpy arrays so the event loop can run as one
compiled kernel. The pending-event queue is a binary heap of exactly one
entry per user ordered by ``(time, user)``. Only the root is ever replaced,
so each event costs one sift-down.
"""
from dataclasses import dataclass

import numpy as np

from ._jit import njit
from .cache import AccessOutcome, lru_access_row
from .distributions import RngStream, ZipfSampler, choose_servers, exponential, zipf_ranks

# counters layout
UNDECIDED, REQUESTS, ACCESSES, MISSES = range(4)


@dataclass(frozen=True, order=True)
class RequestEvent:
    time: float
    user: int
    seq: int


# --- kernels ---------------------------------------------------------------

@njit
def _before(ht, hu, a, b):
    return ht[a] < ht[b] or (ht[a] == ht[b] and hu[a] < hu[b])


@njit
def sift_down(ht, hu, i):
    n = ht.shape[0]
    while True:
        left = 2 * i + 1
        if left >= n:
            return
        c = left
        if left + 1 < n and _before(ht, hu, left + 1, left):
            c = left + 1
        if not _before(ht, hu, c, i):
            return
        ht[i], ht[c] = ht[c], ht[i]
        hu[i], hu[c] = hu[c], hu[i]
        i = c


@njit
def heapify(ht, hu):
    for i in range(ht.shape[0] // 2 - 1, -1, -1):
        sift_down(ht, hu, i)


@njit
def handle_request(u, t, content, cand, n_cand, chosen, decision_time, requests,
                   win, win_pos, hits, entries, sizes, counters,
                   out_srv, out_hit, out_evicted):
    """Serve one request of user ``u`` at time ``t``; returns fan-out size."""
    tau = win.shape[2]
    c = content[u]
    pos = win_pos[u]
    if chosen[u] >= 0:
        k0 = chosen[u]
        k1 = k0 + 1
    else:
        k0 = 0
        k1 = n_cand[u]
    n_out = 0
    for k in range(k0, k1):
        s = cand[u, k]
        hit, evicted = lru_access_row(entries, sizes, s, c)
        bit = 1 if hit else 0
        hits[u, k] += bit - win[u, k, pos]
        win[u, k, pos] = bit
        counters[ACCESSES] += 1
        if not hit:
            counters[MISSES] += 1
        out_srv[n_out] = s
        out_hit[n_out] = bit
        out_evicted[n_out] = evicted
        n_out += 1
    win_pos[u] = (pos + 1) % tau
    requests[u] += 1
    counters[REQUESTS] += 1
    if chosen[u] < 0:
        for k in range(n_cand[u]):
            if hits[u, k] == tau:
                chosen[u] = k
                decision_time[u] = t
                counters[UNDECIDED] -= 1
                break
    return n_out


@njit
def best_rates(n_cand, chosen, hits, tau, out):
    """Per-user max over current candidates of the windowed hit rate."""
    for u in range(out.shape[0]):
        if chosen[u] >= 0:
            best = hits[u, chosen[u]]
        else:
            best = 0
            for k in range(n_cand[u]):
                if hits[u, k] > best:
                    best = hits[u, k]
        out[u] = best / tau


@njit
def minmax_rate(n_cand, chosen, hits, tau):
    worst = tau
    for u in range(hits.shape[0]):
        if chosen[u] >= 0:
            best = hits[u, chosen[u]]
        else:
            best = 0
            for k in range(n_cand[u]):
                if hits[u, k] > best:
                    best = hits[u, k]
        if best < worst:
            worst = best
    return worst / tau


@njit
def step_event(lam, rng, ht, hu, content, cand, n_cand, chosen, decision_time,
               requests, win, win_pos, hits, entries, sizes, counters,
               out_srv, out_hit, out_evicted):
    t = ht[0]
    u = hu[0]
    n_out = handle_request(u, t, content, cand, n_cand, chosen, decision_time,
                           requests, win, win_pos, hits, entries, sizes,
                           counters, out_srv, out_hit, out_evicted)
    ht[0] = t + exponential(rng, lam)
    sift_down(ht, hu, 0)
    return n_out


@njit
def run_events(until, stop_at_convergence, dt, sample_idx, trace, lam, rng,
               ht, hu, content, cand, n_cand, chosen, decision_time, requests,
               win, win_pos, hits, entries, sizes, counters):
    """Process events with time <= until.

    Trace rows ``(time, undecided_fraction, minmax)`` are taken on the grid
    ``k * dt`` (state after every event at or before that time) plus one row
    at the convergence instant. Returns ``(rows written, next grid index,
    clock, converged)``.
    """
    n_u = content.shape[0]
    tau = win.shape[2]
    smax = cand.shape[1]
    out_srv = np.empty(smax, dtype=np.int64)
    out_hit = np.empty(smax, dtype=np.int64)
    out_evicted = np.empty(smax, dtype=np.int64)
    rows = 0
    clock = -1.0
    converged = False
    if stop_at_convergence and counters[UNDECIDED] == 0:
        return rows, sample_idx, clock, True
    while True:
        t = ht[0]
        if t > until:
            break
        while sample_idx * dt < t and rows < trace.shape[0]:
            trace[rows, 0] = sample_idx * dt
            trace[rows, 1] = counters[UNDECIDED] / n_u
            trace[rows, 2] = minmax_rate(n_cand, chosen, hits, tau)
            rows += 1
            sample_idx += 1
        step_event(lam, rng, ht, hu, content, cand, n_cand, chosen,
                   decision_time, requests, win, win_pos, hits, entries, sizes,
                   counters, out_srv, out_hit, out_evicted)
        clock = t
        if stop_at_convergence and counters[UNDECIDED] == 0:
            converged = True
            if rows < trace.shape[0]:
                trace[rows, 0] = t
                trace[rows, 1] = 0.0
                trace[rows, 2] = minmax_rate(n_cand, chosen, hits, tau)
                rows += 1
            break
    if not converged:
        while sample_idx * dt <= until and rows < trace.shape[0]:
            trace[rows, 0] = sample_idx * dt
            trace[rows, 1] = counters[UNDECIDED] / n_u
            trace[rows, 2] = minmax_rate(n_cand, chosen, hits, tau)
            rows += 1
            sample_idx += 1
        clock = until
    return rows, sample_idx, clock, converged


# --- state and operations --------------------------------------------------

class WebState:
    """All mutable state of one web-model trial."""

    def __init__(self, config, content, cand, n_cand, arrivals, rng):
        n_u, smax = cand.shape
        self.config = config
        self.rng = rng
        self.clock = 0.0
        self.content = content
        self.cand = cand
        self.n_cand = n_cand
        self.chosen = np.full(n_u, -1, dtype=np.int64)
        self.decision_time = np.full(n_u, np.nan)
        self.requests = np.zeros(n_u, dtype=np.int64)
        self.win = np.zeros((n_u, smax, config.tau), dtype=np.int64)
        self.win_pos = np.zeros(n_u, dtype=np.int64)
        self.hits = np.zeros((n_u, smax), dtype=np.int64)
        self.entries = np.full((config.n_s, config.kappa), -1, dtype=np.int64)
        self.sizes = np.zeros(config.n_s, dtype=np.int64)
        self.counters = np.zeros(4, dtype=np.int64)
        self.counters[UNDECIDED] = n_u
        self.heap_t = arrivals.copy()
        self.heap_u = np.arange(n_u, dtype=np.int64)
        heapify(self.heap_t, self.heap_u)
        self.sample_idx = 0
        self._trace = []

    @property
    def n_u(self):
        return self.content.shape[0]

    @property
    def decided(self):
        return self.chosen >= 0

    @property
    def total_requests(self):
        return int(self.counters[REQUESTS])

    @property
    def total_accesses(self):
        return int(self.counters[ACCESSES])

    @property
    def total_misses(self):
        return int(self.counters[MISSES])

    @property
    def trace(self):
        """Sampled ``(time, undecided_fraction, minmax_hitrate)`` rows."""
        if not self._trace:
            return np.empty((0, 3))
        return np.concatenate(self._trace)

    def candidates(self, u):
        """Current candidate set S_u (a singleton once decided)."""
        if self.chosen[u] >= 0:
            return [int(self.cand[u, self.chosen[u]])]
        return [int(s) for s in self.cand[u, : self.n_cand[u]]]

    def decided_server(self, u):
        return int(self.cand[u, self.chosen[u]]) if self.chosen[u] >= 0 else None

    def window(self, u, server):
        """Hit bits of candidate ``server`` for user ``u``, newest first."""
        k = int(np.flatnonzero(self.cand[u, : self.n_cand[u]] == server)[0])
        tau = self.config.tau
        order = (self.win_pos[u] - 1 - np.arange(tau)) % tau
        return self.win[u, k, order].copy()

    def hit_rate(self, u, server):
        k = int(np.flatnonzero(self.cand[u, : self.n_cand[u]] == server)[0])
        return self.hits[u, k] / self.config.tau

    def peek(self):
        return RequestEvent(float(self.heap_t[0]), int(self.heap_u[0]), self.total_requests)

    def _kernel_state(self):
        return (self.heap_t, self.heap_u, self.content, self.cand, self.n_cand,
                self.chosen, self.decision_time, self.requests, self.win,
                self.win_pos, self.hits, self.entries, self.sizes, self.counters)


def init_state(config, rng):
    """Draw contents, candidate sets and first arrivals for every user.

    Draw order on the stream: all contents, then candidates user by user,
    then first arrival times user by user.
    """
    n_u = config.n_u
    sampler = ZipfSampler(config.n_c, config.alpha)
    content = np.empty(n_u, dtype=np.int64)
    zipf_ranks(sampler.cdf, rng.state, content)
    spreads = config.spreads()
    cand = np.full((n_u, config.max_spread), -1, dtype=np.int64)
    for u in range(n_u):
        choose_servers(rng.state, config.n_s, cand[u, : spreads[u]])
    arrivals = np.empty(n_u)
    for u in range(n_u):
        arrivals[u] = exponential(rng.state, float(config.lam))
    return WebState(config, content, cand, spreads, arrivals, rng)


def new_state(config, stream_id=0):
    return init_state(config, RngStream(config.seed, stream_id))


def process_request(state, event):
    """Serve the queue-head request; returns ``[(server, AccessOutcome), ...]``."""
    head = state.peek()
    if event != head:
        raise ValueError(f"{event} is not the queue head {head}")
    smax = state.cand.shape[1]
    out_srv = np.empty(smax, dtype=np.int64)
    out_hit = np.empty(smax, dtype=np.int64)
    out_evicted = np.empty(smax, dtype=np.int64)
    n = step_event(float(state.config.lam), state.rng.state, *state._kernel_state(),
                   out_srv, out_hit, out_evicted)
    state.clock = event.time
    return [
        (int(out_srv[i]), AccessOutcome(bool(out_hit[i]), None if out_evicted[i] < 0 else int(out_evicted[i])))
        for i in range(n)
    ]


def run(state, until, stop_at_convergence=True):
    """Advance the simulation to time ``until`` (or to convergence)."""
    if until < state.clock:
        raise ValueError(f"until={until} is before the current clock {state.clock}")
    dt = float(state.config.sample_interval)
    cap = int(max(0.0, until - state.sample_idx * dt) // dt) + 2
    trace = np.empty((cap, 3))
    rows, state.sample_idx, clock, _ = run_events(
        float(until), stop_at_convergence, dt, state.sample_idx, trace,
        float(state.config.lam), state.rng.state, *state._kernel_state())
    if clock >= 0:
        state.clock = float(clock)
    if rows:
        state._trace.append(trace[:rows])
    return state


def is_converged(state):
    return int(state.counters[UNDECIDED]) == 0


def undecided_fraction(state):
    return int(state.counters[UNDECIDED]) / state.n_u


def convergence_time(state):
    return float(np.max(state.decision_time)) if is_converged(state) else None


def server_demand(state):
    """Distinct contents requested from each server by its decided users."""
    users = np.flatnonzero(state.chosen >= 0)
    srv = state.cand[users, state.chosen[users]]
    pairs = np.unique(np.stack([srv, state.content[users]], axis=1), axis=0)
    return np.bincount(pairs[:, 0], minlength=state.config.n_s)


def is_optimal(state):
    """True iff no server's decided users ask for more than kappa distinct items."""
    if not is_converged(state):
        raise RuntimeError("is_optimal is only defined once every user has decided")
    return bool(np.all(server_demand(state) <= state.config.kappa))


def user_hitrates(state):
    out = np.empty(state.n_u)
    best_rates(state.n_cand, state.chosen, state.hits, state.config.tau, out)
    return out


def minmax_hitrate(state):
    return float(minmax_rate(state.n_cand, state.chosen, state.hits, state.config.tau))
