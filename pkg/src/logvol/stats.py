"""Kolmogorov-Smirnov distances and the standard normal CDF."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np
from scipy.special import erfc, kolmogi

from .errors import DomainError


@dataclass(frozen=True)
class KSResult:
    statistic: float
    n_samples: int
    crit_1pct: float
    mc_halfwidth_95: float
    n_samples_2: int | None = None

    @property
    def rejects_at_1pct(self) -> bool:
        return self.statistic > self.crit_1pct

    def to_dict(self) -> dict:
        d = asdict(self)
        d["rejects_at_1pct"] = self.rejects_at_1pct
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def normal_cdf(x):
    """Standard normal CDF, accurate in both tails."""
    x = np.asarray(x, dtype=float)
    out = 0.5 * erfc(-x / math.sqrt(2.0))
    return out.item() if out.ndim == 0 else out


def _effective_size(n1: int, n2: int | None) -> float:
    return float(n1) if n2 is None else n1 * n2 / (n1 + n2)


def _critical(n_eff: float, level: float) -> float:
    # Asymptotic Kolmogorov quantile: P(sqrt(N) D > k) = level.
    return float(kolmogi(level)) / math.sqrt(n_eff)


def _clean(sample, name: str) -> np.ndarray:
    # SampleBatch and similar containers expose their draws as .values.
    arr = np.asarray(getattr(sample, "values", sample), dtype=float).ravel()
    if arr.size == 0:
        raise DomainError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite values")
    return arr


def ks_one_sample(sample, cdf: Callable[[np.ndarray], np.ndarray]) -> KSResult:
    """sup_x |F_N(x) - F(x)| against a vectorized CDF."""
    x = np.sort(_clean(sample, "sample"))
    n = x.size
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - f)
    d_minus = np.max(f - (i - 1) / n)
    stat = float(max(d_plus, d_minus, 0.0))
    return KSResult(stat, n, _critical(n, 0.01), _critical(n, 0.05))


def ks_two_sample(sample_a, sample_b) -> KSResult:
    """sup_x |F_a(x) - F_b(x)| over the pooled sample."""
    a = np.sort(_clean(sample_a, "sample_a"))
    b = np.sort(_clean(sample_b, "sample_b"))
    pooled = np.concatenate([a, b])
    fa = np.searchsorted(a, pooled, side="right") / a.size
    fb = np.searchsorted(b, pooled, side="right") / b.size
    stat = float(np.max(np.abs(fa - fb)))
    n_eff = _effective_size(a.size, b.size)
    return KSResult(stat, a.size, _critical(n_eff, 0.01), _critical(n_eff, 0.05), b.size)
