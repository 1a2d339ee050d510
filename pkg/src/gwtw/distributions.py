"""Seeded random streams and the samplers the simulators draw from.

The generator is SplitMix64: a Weyl counter advanced by the golden-ratio
increment and passed through a 64-bit finalizer. A stream for
``(seed, stream_id)`` starts at::

    state0 = mix64(seed + GAMMA) ^ mix64((stream_id + 1) * MUL2)

where ``mix64`` is the SplitMix64 finalizer, and all arithmetic is modulo
2**64. Everything below is plain integer arithmetic, so a given
``(seed, stream_id)`` reproduces the same draws on any platform and on both
kernel backends.
"""
import math

import numpy as np

from ._jit import njit

_MASK = (1 << 64) - 1
GAMMA = np.uint64(0x9E3779B97F4A7C15)
MUL1 = np.uint64(0xBF58476D1CE4E5B9)
MUL2 = np.uint64(0x94D049BB133111EB)
_S11 = np.uint64(11)
_S27 = np.uint64(27)
_S30 = np.uint64(30)
_S31 = np.uint64(31)
_INV53 = 1.0 / 9007199254740992.0


class DomainError(ValueError):
    pass


# --- kernels ---------------------------------------------------------------

@njit
def mix64(z):
    z = (z ^ (z >> _S30)) * MUL1
    z = (z ^ (z >> _S27)) * MUL2
    return z ^ (z >> _S31)


@njit
def next_u64(state):
    state[0] += GAMMA
    return mix64(state[0])


@njit
def uniform01(state):
    """Uniform double on [0, 1) with 53 random bits."""
    return np.float64(next_u64(state) >> _S11) * _INV53


@njit
def uniform_open(state):
    """Uniform double on the open interval (0, 1)."""
    return (np.float64(next_u64(state) >> _S11) + 0.5) * _INV53


@njit
def randbelow(state, m):
    k = int(uniform01(state) * m)
    return k if k < m else m - 1


@njit
def exponential(state, rate):
    return -np.log(uniform_open(state)) / rate


@njit
def choose_servers(state, n_s, out):
    """Fill ``out`` with ``len(out)`` distinct ids from [0, n_s), ascending.

    Floyd's subset sampling: every subset of the requested size is equally
    likely and only ``len(out)`` draws are used.
    """
    sigma = out.shape[0]
    cnt = 0
    for j in range(n_s - sigma, n_s):
        t = randbelow(state, j + 1)
        dup = False
        for i in range(cnt):
            if out[i] == t:
                dup = True
                break
        out[cnt] = j if dup else t
        cnt += 1
    out.sort()


@njit
def zipf_rank(cdf, state):
    return np.searchsorted(cdf, uniform01(state), side="right") + 1


@njit
def zipf_ranks(cdf, state, out):
    for i in range(out.shape[0]):
        out[i] = np.searchsorted(cdf, uniform01(state), side="right") + 1


# --- public API --------------------------------------------------------------

def _stream_state(seed, stream_id):
    if not 0 <= seed <= _MASK:
        raise DomainError(f"seed must fit in 64 unsigned bits, got {seed}")
    if not 0 <= stream_id <= _MASK:
        raise DomainError(f"stream id must fit in 64 unsigned bits, got {stream_id}")
    a = int(mix64(np.uint64((seed + int(GAMMA)) & _MASK)))
    b = int(mix64(np.uint64(((stream_id + 1) * int(MUL2)) & _MASK)))
    return np.uint64(a ^ b)


class RngStream:
    """One independent SplitMix64 stream, owned by a single trial."""

    def __init__(self, seed, stream_id=0):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self.state = np.zeros(1, dtype=np.uint64)
        self.state[0] = _stream_state(self.seed, self.stream_id)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    def u64(self):
        return int(next_u64(self.state))

    def uniform(self):
        return float(uniform01(self.state))


def harmonic(n, alpha):
    """Generalized harmonic number H(n, alpha) = sum_{k=1..n} k**-alpha."""
    if n < 1:
        raise DomainError(f"harmonic: n must be >= 1, got {n}")
    if alpha < 0:
        raise DomainError(f"harmonic: alpha must be >= 0, got {alpha}")
    terms = np.arange(n, 0, -1, dtype=np.float64) ** -float(alpha)
    # fsum is correctly rounded, so descending order only matters for readers
    return math.fsum(terms)


def zipf_pmf(k, n_c, alpha):
    if not 1 <= k <= n_c:
        raise DomainError(f"zipf_pmf: rank {k} outside [1, {n_c}]")
    return 1.0 / (float(k) ** alpha * harmonic(n_c, alpha))


class ZipfSampler:
    """Inverse-CDF sampler over content ranks 1..n_c with p_k ~ k**-alpha."""

    def __init__(self, n_c, alpha):
        if n_c < 1:
            raise DomainError(f"n_c must be >= 1, got {n_c}")
        if alpha < 0:
            raise DomainError(f"alpha must be >= 0, got {alpha}")
        self.n_c = int(n_c)
        self.alpha = float(alpha)
        self.norm = harmonic(self.n_c, self.alpha)
        weights = np.arange(1, self.n_c + 1, dtype=np.float64) ** -self.alpha
        # tail mass summed smallest-first; 1 - tail keeps every step of the
        # cdf within a couple of ulps of the exact pmf
        tail = np.zeros(self.n_c)
        tail[:-1] = np.cumsum(weights[:0:-1])[::-1]
        cdf = 1.0 - tail / self.norm
        self.cdf = cdf
        self.cdf.flags.writeable = False

    def __repr__(self):
        return f"ZipfSampler(n_c={self.n_c}, alpha={self.alpha})"

    def pmf(self, k):
        if not 1 <= k <= self.n_c:
            raise DomainError(f"rank {k} outside [1, {self.n_c}]")
        return float(self.cdf[k - 1] - (self.cdf[k - 2] if k > 1 else 0.0))


def sample_content(sampler, rng):
    return int(zipf_rank(sampler.cdf, rng.state))


def sample_contents(sampler, rng, size):
    out = np.empty(size, dtype=np.int64)
    zipf_ranks(sampler.cdf, rng.state, out)
    return out


def sample_exponential(rate, rng):
    if not rate > 0:
        raise DomainError(f"rate must be > 0, got {rate}")
    return float(exponential(rng.state, float(rate)))


def sample_servers(n_s, sigma, rng):
    if not 1 <= sigma <= n_s:
        raise DomainError(f"need 1 <= sigma <= n_s, got sigma={sigma}, n_s={n_s}")
    out = np.empty(sigma, dtype=np.int64)
    choose_servers(rng.state, n_s, out)
    return out
