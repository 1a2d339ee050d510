from dataclasses import dataclass, fields, replace
from typing import Optional

import numpy as np

DEFAULT_HORIZON = {"web": 1000.0, "video": 200}


class ConfigError(ValueError):
    """Invalid simulation parameter. ``field`` names the offending key."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


def _int_at_least(name, value, lo):
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ConfigError(name, f"expected an integer, got {value!r}")
    if value < lo:
        raise ConfigError(name, f"must be >= {lo}, got {value}")


def _real(name, value):
    if isinstance(value, bool) or not isinstance(value, (int, float, np.integer, np.floating)):
        raise ConfigError(name, f"expected a number, got {value!r}")
    if not np.isfinite(value):
        raise ConfigError(name, f"must be finite, got {value}")


@dataclass(frozen=True)
class SimConfig:
    """Parameters of one trial.

    The spread policy is either a uniform ``sigma`` for every user or, when
    ``f`` is set, a mix where the first ``round(f * n_u)`` users pick two
    candidate servers and the rest pick one (average spread ``1 + f``).
    """

    n_u: int
    n_s: int
    n_c: int
    kappa: int
    tau: int = 20
    sigma: int = 2
    f: Optional[float] = None
    alpha: float = 0.65
    lam: float = 1.0
    horizon: float = 1000.0
    seed: int = 0
    sample_interval: float = 1.0

    def __post_init__(self):
        for name in ("n_u", "n_s", "n_c", "kappa", "tau", "sigma"):
            _int_at_least(name, getattr(self, name), 1)
        _int_at_least("seed", self.seed, 0)
        if self.seed >= 1 << 64:
            raise ConfigError("seed", "must fit in 64 unsigned bits")
        for name in ("alpha", "lambda", "horizon", "sample_interval"):
            _real(name, getattr(self, "lam" if name == "lambda" else name))
        if self.alpha < 0:
            raise ConfigError("alpha", f"must be >= 0, got {self.alpha}")
        if self.lam <= 0:
            raise ConfigError("lambda", f"must be > 0, got {self.lam}")
        if self.horizon < 0:
            raise ConfigError("horizon", f"must be >= 0, got {self.horizon}")
        if self.sample_interval <= 0:
            raise ConfigError("sample_interval", f"must be > 0, got {self.sample_interval}")
        if self.f is None:
            if self.sigma > self.n_s:
                raise ConfigError("sigma", f"must be <= n_s={self.n_s}, got {self.sigma}")
        else:
            _real("f", self.f)
            if not 0 <= self.f <= 1:
                raise ConfigError("f", f"must lie in [0, 1], got {self.f}")
            if self.n_two_choice > 0 and self.n_s < 2:
                raise ConfigError("f", "two-choice users need n_s >= 2")

    @property
    def n_two_choice(self):
        return int(round(self.f * self.n_u)) if self.f is not None else 0

    @property
    def max_spread(self):
        if self.f is None:
            return self.sigma
        return 2 if self.n_two_choice > 0 else 1

    @property
    def mean_spread(self):
        return float(self.spreads().mean())

    @property
    def load(self):
        return self.n_u / (self.kappa * self.n_s)

    def spreads(self):
        """Per-user spread sigma_u as an int64 array."""
        if self.f is None:
            return np.full(self.n_u, self.sigma, dtype=np.int64)
        out = np.ones(self.n_u, dtype=np.int64)
        out[: self.n_two_choice] = 2
        return out

    def replace(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["lambda"] = d.pop("lam")
        return d
