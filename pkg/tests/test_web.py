import numpy as np
import pytest

from gwtw import web
from gwtw.config import SimConfig


def step(state):
    return web.process_request(state, state.peek())


def tiny(**kw):
    base = dict(n_u=1, n_s=2, n_c=1, kappa=1, sigma=2, tau=3, horizon=100.0, seed=1)
    base.update(kw)
    return web.new_state(SimConfig(**base))


def test_init_uniform_spread():
    st = web.new_state(SimConfig(n_u=500, n_s=100, n_c=50, kappa=2, sigma=2, seed=3))
    assert np.all(st.n_cand == 2)
    assert np.all(st.cand[:, 0] < st.cand[:, 1])
    assert np.all(st.win == 0) and np.all(st.hits == 0)
    assert web.undecided_fraction(st) == 1.0
    assert not web.is_converged(st)
    assert web.minmax_hitrate(st) == 0.0
    assert st.content.min() >= 1 and st.content.max() <= 50


def test_init_mixed_spread_counts():
    st = web.new_state(SimConfig(n_u=1000, n_s=100, n_c=50, kappa=2, f=0.7))
    assert np.sum(st.n_cand == 2) == 700
    assert np.sum(st.n_cand == 1) == 300
    assert np.all(st.cand[st.n_cand == 1, 1] == -1)


def test_decides_on_fourth_request_with_tau_3():
    st = tiny()
    first = step(st)
    assert [o.hit for _, o in first] == [False, False]
    for _ in range(2):
        assert all(o.hit for _, o in step(st))
    assert not st.decided[0]
    assert st.window(0, 0).tolist() == [1, 1, 0]
    ev = st.peek()
    step(st)
    # both windows fill at once; the lower server id wins
    assert st.decided_server(0) == 0
    assert st.decision_time[0] == ev.time
    assert web.is_converged(st)


def test_no_decision_before_tau_requests_even_when_warm():
    st = tiny(tau=5)
    st.entries[:, 0] = st.content[0]
    st.sizes[:] = 1
    for k in range(4):
        assert all(o.hit for _, o in step(st))
        assert not st.decided[0], k
    step(st)
    assert st.decided[0] and st.requests[0] == 5


def test_decided_user_only_contacts_its_server():
    st = tiny()
    for _ in range(4):
        step(st)
    s = st.decided_server(0)
    assert st.candidates(0) == [s]
    out = step(st)
    assert [srv for srv, _ in out] == [s] and out[0][1].hit
    assert st.window(0, s).tolist() == [1, 1, 1]


def test_process_request_rejects_non_head_event():
    st = tiny()
    ev = st.peek()
    with pytest.raises(ValueError):
        web.process_request(st, web.RequestEvent(ev.time + 1, ev.user, ev.seq))


def test_run_until_zero_processes_nothing():
    st = web.new_state(SimConfig(n_u=50, n_s=50, n_c=10, kappa=2))
    web.run(st, 0.0)
    assert st.total_requests == 0
    assert st.trace.tolist() == [[0.0, 1.0, 0.0]]


def _force(st, contents, chosen_servers):
    """Pretend every user decided on a given server (single-candidate setup)."""
    st.content[:] = contents
    st.cand[:, 0] = chosen_servers
    st.chosen[:] = 0
    st.counters[web.UNDECIDED] = 0


@pytest.mark.parametrize("kappa,contents,optimal", [
    (1, [1, 1, 1, 1, 1], True),
    (2, [1, 2, 1, 2, 2], True),
    (2, [1, 2, 3, 1, 2], False),
])
def test_is_optimal_examples(kappa, contents, optimal):
    st = web.new_state(SimConfig(n_u=5, n_s=1, n_c=3, kappa=kappa, sigma=1))
    _force(st, contents, 0)
    assert web.is_converged(st)
    assert web.is_optimal(st) is optimal


def test_is_optimal_counts_per_server():
    st = web.new_state(SimConfig(n_u=4, n_s=2, n_c=4, kappa=2, sigma=1))
    _force(st, [1, 2, 3, 4], [0, 0, 1, 1])
    assert web.is_optimal(st)
    _force(st, [1, 2, 3, 4], [0, 0, 0, 1])
    assert not web.is_optimal(st)


def test_is_optimal_requires_convergence():
    st = web.new_state(SimConfig(n_u=5, n_s=2, n_c=3, kappa=1))
    with pytest.raises(RuntimeError):
        web.is_optimal(st)


def test_undecided_fraction_example():
    st = web.new_state(SimConfig(n_u=1000, n_s=10, n_c=10, kappa=1, sigma=1))
    st.chosen[250:] = 0
    st.counters[web.UNDECIDED] = 250
    assert web.undecided_fraction(st) == 0.25


def test_invariants_while_stepping():
    cfg = SimConfig(n_u=150, n_s=150, n_c=150, kappa=2, sigma=2, tau=6, seed=5)
    st = web.new_state(cfg)
    tau = cfg.tau
    prev_undecided = st.n_u
    accesses = 0
    for _ in range(20_000):
        ev = st.peek()
        was_decided = st.decided[ev.user]
        out = step(st)
        u = ev.user
        accesses += len(out)
        assert len(out) == (1 if was_decided else st.n_cand[u])
        if st.decided[u] and not was_decided:
            assert st.requests[u] >= tau
            assert st.hit_rate(u, st.decided_server(u)) == 1.0
        if was_decided:
            assert st.decided[u]
        k = int(st.n_cand[u])
        assert np.array_equal(st.hits[u, :k], st.win[u, :k].sum(axis=1))
        undecided = int(np.sum(~st.decided))
        assert undecided == int(st.counters[web.UNDECIDED]) <= prev_undecided
        prev_undecided = undecided
        assert np.all(st.sizes <= cfg.kappa)
    assert accesses == st.total_accesses
    assert st.total_requests == int(st.requests.sum()) == 20_000


def test_trace_is_monotone_and_on_grid():
    cfg = SimConfig(n_u=300, n_s=300, n_c=300, kappa=2, sigma=2, tau=10, seed=2)
    st = web.run(web.new_state(cfg), cfg.horizon)
    tr = st.trace
    assert np.all(np.diff(tr[:, 0]) > 0)
    assert np.all(np.diff(tr[:, 1]) <= 0)
    assert np.all((tr[:, 2] >= 0) & (tr[:, 2] <= 1))
    off_grid = tr[:, 0] != np.round(tr[:, 0])
    assert off_grid.sum() <= 1
    if web.is_converged(st):
        assert tr[-1, 0] == web.convergence_time(st) and tr[-1, 1] == 0.0


def test_runs_are_deterministic():
    cfg = SimConfig(n_u=200, n_s=200, n_c=200, kappa=2, tau=8, seed=9)
    a = web.run(web.new_state(cfg, 3), cfg.horizon)
    b = web.run(web.new_state(cfg, 3), cfg.horizon)
    assert np.array_equal(a.trace, b.trace)
    assert np.array_equal(a.decision_time, b.decision_time, equal_nan=True)
    c = web.run(web.new_state(cfg, 4), cfg.horizon)
    assert not np.array_equal(a.content, c.content)


def test_resuming_run_matches_single_run():
    cfg = SimConfig(n_u=100, n_s=100, n_c=100, kappa=2, tau=5, seed=4)
    a = web.run(web.new_state(cfg), 300.0, stop_at_convergence=False)
    b = web.new_state(cfg)
    web.run(b, 120.5, stop_at_convergence=False)
    web.run(b, 300.0, stop_at_convergence=False)
    assert np.array_equal(a.trace, b.trace)
    assert np.array_equal(a.chosen, b.chosen)


def test_optimal_state_has_no_misses_afterwards():
    cfg = SimConfig(n_u=400, n_s=400, n_c=400, kappa=2, sigma=2, tau=20, seed=42)
    checked = 0
    for stream in range(5):
        st = web.run(web.new_state(cfg, stream), cfg.horizon)
        if not (web.is_converged(st) and web.is_optimal(st)):
            continue
        checked += 1
        chosen = st.chosen.copy()
        misses = st.total_misses
        web.run(st, st.clock + 10.0, stop_at_convergence=False)
        assert np.array_equal(st.chosen, chosen)
        assert st.total_misses == misses
        assert web.minmax_hitrate(st) == 1.0
    assert checked >= 3
