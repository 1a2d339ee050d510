"""LRU caches, stored as rows of a 2-D array so one kernel serves every server.

Row ``r`` of ``entries`` holds the cached content ids of server ``r``, most
recent first; ``sizes[r]`` says how many of them are valid.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._jit import njit
from .distributions import DomainError


@njit
def lru_access_row(entries, sizes, row, item):
    """Touch ``item`` in cache ``row``. Returns ``(hit, evicted id or -1)``."""
    size = sizes[row]
    pos = -1
    for i in range(size):
        if entries[row, i] == item:
            pos = i
            break
    hit = pos >= 0
    evicted = -1
    if not hit:
        cap = entries.shape[1]
        if size == cap:
            pos = cap - 1
            evicted = entries[row, pos]
        else:
            pos = size
            sizes[row] = size + 1
    for i in range(pos, 0, -1):
        entries[row, i] = entries[row, i - 1]
    entries[row, 0] = item
    return hit, evicted


@dataclass(frozen=True)
class AccessOutcome:
    hit: bool
    evicted: Optional[int] = None


class LruCache:
    """A single LRU cache of ``capacity`` unit-sized objects, cold at start."""

    def __init__(self, capacity):
        if capacity < 1:
            raise DomainError(f"cache capacity must be >= 1, got {capacity}")
        self.capacity = int(capacity)
        self._entries = np.full((1, self.capacity), -1, dtype=np.int64)
        self._sizes = np.zeros(1, dtype=np.int64)

    def __len__(self):
        return int(self._sizes[0])

    def __contains__(self, item):
        return item in self.entries

    @property
    def entries(self):
        """Cached ids, most recent first."""
        return [int(x) for x in self._entries[0, : self._sizes[0]]]

    def access(self, item):
        hit, evicted = lru_access_row(self._entries, self._sizes, 0, int(item))
        return AccessOutcome(bool(hit), None if evicted < 0 else int(evicted))


def lru_new(capacity):
    return LruCache(capacity)


def lru_access(cache, item):
    return cache.access(item)


class NaiveLru:
    """Reference LRU: a plain list of (last_use, item) re-scanned on every access.

    Shares no code with the array kernel; used as the oracle in tests and in
    ``gwtw validate``.
    """

    def __init__(self, capacity):
        self.capacity = capacity
        self.clock = 0
        self.stamps = {}

    def access(self, item):
        self.clock += 1
        hit = item in self.stamps
        evicted = None
        if not hit and len(self.stamps) == self.capacity:
            evicted = min(self.stamps, key=self.stamps.get)
            del self.stamps[evicted]
        self.stamps[item] = self.clock
        return AccessOutcome(hit, evicted)

    @property
    def entries(self):
        return sorted(self.stamps, key=self.stamps.get, reverse=True)
