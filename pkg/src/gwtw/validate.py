"""Self-checks run by ``gwtw validate``.

Each check returns a :class:`Check`; none of them raise on failure.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import report
from .cache import LruCache, NaiveLru
from .config import SimConfig
from .distributions import RngStream, ZipfSampler, sample_contents
from .metrics import balls_in_bins_max_load, run_trial

ZIPF_SETTINGS = ((10, 0.0), (100, 0.65), (1000, 1.5))


@dataclass
class Check:
    name: str
    passed: bool
    detail: str

    def line(self):
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def check_lru_oracle(n_sequences=10_000, max_len=200, max_capacity=8, max_alphabet=16,
                     seed=0, cache_factory=LruCache):
    """Replay random access sequences through ``cache_factory`` and the naive
    reference; hits, evictions and final contents must agree."""
    gen = np.random.default_rng(seed)
    for i in range(n_sequences):
        cap = int(gen.integers(1, max_capacity + 1))
        alphabet = int(gen.integers(1, max_alphabet + 1))
        seq = gen.integers(0, alphabet, size=int(gen.integers(1, max_len + 1)))
        cache, ref = cache_factory(cap), NaiveLru(cap)
        for step, item in enumerate(seq.tolist()):
            got, want = cache.access(item), ref.access(item)
            if got != want or len(cache) > cap:
                return Check("lru-oracle", False,
                             f"sequence {i} step {step} (capacity {cap}, item {item}): "
                             f"got {got}, reference {want}")
        if cache.entries != ref.entries:
            return Check("lru-oracle", False, f"sequence {i}: final entries differ")
    return Check("lru-oracle", True, f"{n_sequences} random sequences match the reference")


def _merged_counts(observed, expected, min_expected=5.0):
    """Merge adjacent rank bins until each expects at least ``min_expected``."""
    obs, exp = [], []
    o_acc = e_acc = 0.0
    for o, e in zip(observed, expected):
        o_acc += o
        e_acc += e
        if e_acc >= min_expected:
            obs.append(o_acc)
            exp.append(e_acc)
            o_acc = e_acc = 0.0
    if e_acc > 0:
        obs[-1] += o_acc
        exp[-1] += e_acc
    return np.array(obs), np.array(exp)


def check_zipf_fit(n_c, alpha, draws=100_000, significance=0.001, seed=0):
    sampler = ZipfSampler(n_c, alpha)
    ranks = sample_contents(sampler, RngStream(seed, 0), draws)
    observed = np.bincount(ranks, minlength=n_c + 1)[1:]
    pmf = np.arange(1, n_c + 1, dtype=np.float64) ** -alpha / sampler.norm
    obs, exp = _merged_counts(observed, draws * pmf)
    res = stats.chisquare(obs, exp)
    return Check(f"zipf-chi2(n_c={n_c}, alpha={alpha})", bool(res.pvalue > significance),
                 f"chi2={res.statistic:.2f} over {len(obs)} bins, p={res.pvalue:.4f}")


def check_balls_in_bins(sigma, n_s=100, trials=100, seed=0):
    n_u = math.ceil(n_s * math.log(n_s))
    bound = 3 * sigma * n_u / n_s
    loads = balls_in_bins_max_load(n_u, n_s, sigma, trials, RngStream(seed, sigma))
    frac = float(np.mean(loads <= bound))
    return Check(f"balls-in-bins(sigma={sigma})", frac >= 0.95,
                 f"n_u={n_u}, n_s={n_s}: max load mean {loads.mean():.2f}, "
                 f"worst {loads.max()}, bound 3*sigma*n_u/n_s={bound:.2f}, "
                 f"{frac:.0%} of {trials} trials within bound")


def check_determinism(seed=7):
    cfg = SimConfig(n_u=200, n_s=200, n_c=200, kappa=2, sigma=2, tau=8, horizon=300.0, seed=seed)
    blobs = []
    for _ in range(2):
        w = run_trial(cfg, 0, "web")
        v = run_trial(cfg.replace(horizon=50), 0, "video")
        blobs.append(report.trace_csv(w.trace) + report.outcome_csv([w])
                     + report.trace_csv(v.trace) + report.outcome_csv([v]))
    same = blobs[0] == blobs[1]
    return Check("determinism", same, "seed replay gives byte-identical CSV" if same else "replay differs")


def run_all(seed=0):
    checks = [check_lru_oracle(seed=seed)]
    checks += [check_zipf_fit(n, a, seed=seed) for n, a in ZIPF_SETTINGS]
    checks += [check_balls_in_bins(s, seed=seed) for s in (1, 2)]
    checks.append(check_determinism())
    return checks
