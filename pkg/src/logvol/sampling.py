"""Random streams, radial laws and the elementary samplers.

Every stochastic routine takes either an :class:`RngStream` or a
``numpy.random.Generator``.  Streams are counter-based (Philox) and keyed by
``(seed, stream_id)``; large batches are cut into fixed-size blocks and block
``b`` always draws from counter ``b``.  Results therefore depend only on the
seed, never on how the blocks are spread over worker processes.
"""

from __future__ import annotations

import io
import json
import math
import pickle
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Protocol, Union

import numpy as np
from scipy import integrate, optimize
from scipy.special import betainc, expit, gammainc, gammaincc

from .errors import AdmissibilityError, DomainError, QuadratureError, SamplerError
from .specfun import _polygamma, log_gamma

BLOCK_SIZE = 1024
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    """Counter-based random stream identified by a seed and a stream id."""

    seed: int
    stream_id: int = 0

    def generator(self, block: int = 0) -> np.random.Generator:
        key = np.array([self.seed & _MASK64, self.stream_id & _MASK64], dtype=np.uint64)
        counter = np.array([0, 0, block & _MASK64, 0], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key, counter=counter))

    def child(self, stream_id: int) -> "RngStream":
        return RngStream(self.seed, stream_id)


RngLike = Union[RngStream, np.random.Generator]


def as_generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator(0)
    raise TypeError("rng must be an RngStream or numpy Generator")


def _run_block(draw, stream: RngStream, block: int, size: int) -> np.ndarray:
    return np.asarray(draw(stream.generator(block), size), dtype=float)


def generate_blocks(
    draw: Callable[[np.random.Generator, int], np.ndarray],
    count: int,
    stream: RngStream,
    workers: int = 1,
    block_size: int = BLOCK_SIZE,
) -> np.ndarray:
    """Draw ``count`` values, block ``b`` using counter ``b`` of ``stream``.

    ``draw(gen, size)`` must return ``size`` values.  With ``workers > 1`` the
    blocks are evaluated in a process pool; the output is identical either way.
    """
    if count < 0:
        raise DomainError("count must be non-negative")
    sizes = [min(block_size, count - start) for start in range(0, count, block_size)]
    if workers > 1 and len(sizes) > 1:
        try:
            pickle.dumps(draw)
        except Exception:
            workers = 1
    if workers > 1 and len(sizes) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(
                pool.map(_run_block, [draw] * len(sizes), [stream] * len(sizes), range(len(sizes)), sizes)
            )
    else:
        parts = [_run_block(draw, stream, b, s) for b, s in enumerate(sizes)]
    if not parts:
        return np.empty(0)
    return np.concatenate(parts)


@dataclass
class SampleBatch:
    seed: int
    values: np.ndarray

    @property
    def count(self) -> int:
        return int(self.values.size)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("value\n")
        for v in self.values:
            buf.write(f"{float(v)!r}\n")
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {"seed": self.seed, "count": self.count, "values": [float(v) for v in self.values]}
        )

    @classmethod
    def from_json(cls, text: str) -> "SampleBatch":
        obj = json.loads(text)
        values = np.asarray(obj["values"], dtype=float)
        if values.size != obj["count"]:
            raise DomainError("count does not match number of values")
        return cls(seed=int(obj["seed"]), values=values)


# ---------------------------------------------------------------------------
# Elementary samplers.


def sample_log_gamma(lam, rng: RngLike, size=None) -> np.ndarray:
    """log G with G ~ Gamma(lam, 1), accurate for small shapes.

    For lam < 1 the draw uses G = G' U^(1/lam) with G' ~ Gamma(lam + 1), so
    log G = log G' - E / lam never underflows.
    """
    gen = as_generator(rng)
    lam = np.asarray(lam, dtype=float)
    if np.any(~np.isfinite(lam)) or np.any(lam <= 0):
        raise DomainError("gamma shape must be positive")
    shape = lam.shape if size is None else tuple(np.atleast_1d(size))
    lam_b = np.broadcast_to(lam, shape)
    small = lam_b < 1.0
    out = np.log(gen.standard_gamma(lam_b + small, size=shape))
    if np.any(small):
        out[small] -= gen.standard_exponential(int(small.sum())) / lam_b[small]
    return out


def sample_log_beta(zeta, eta, rng: RngLike, size=None) -> np.ndarray:
    """log B with B ~ Beta(zeta, eta), via two log-gamma draws."""
    gen = as_generator(rng)
    zeta = np.asarray(zeta, dtype=float)
    eta = np.asarray(eta, dtype=float)
    shape = np.broadcast_shapes(zeta.shape, eta.shape) if size is None else tuple(np.atleast_1d(size))
    la = sample_log_gamma(np.broadcast_to(zeta, shape), gen)
    lb = sample_log_gamma(np.broadcast_to(eta, shape), gen)
    return la - np.logaddexp(la, lb)


def sample_sphere_point(n: int, rng: RngLike, size=None) -> np.ndarray:
    """Uniform point(s) on the unit sphere in R^n; shape (n,) or (size, n)."""
    if n < 1:
        raise DomainError("dimension must be at least 1")
    gen = as_generator(rng)
    shape = (n,) if size is None else (int(size), n)
    z = gen.standard_normal(shape)
    norm = np.linalg.norm(z, axis=-1, keepdims=True)
    while np.any(norm == 0):  # probability zero, kept for completeness
        bad = (norm == 0).ravel()
        z.reshape(-1, n)[bad] = gen.standard_normal((int(bad.sum()), n))
        norm = np.linalg.norm(z, axis=-1, keepdims=True)
    return z / norm


# ---------------------------------------------------------------------------
# Radial laws.  Each law describes the distribution of log R for a radius R
# attached to a uniformly distributed direction in R^n.


class RadialLaw(Protocol):
    kind: str

    def sample(self, n: int, gen: np.random.Generator, size: int) -> np.ndarray: ...

    def cdf(self, r, n: int): ...

    def sf(self, r, n: int): ...

    def moments(self, n: int) -> tuple[float, float]: ...


def _check_dim(n: int) -> None:
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise DomainError("dimension must be a positive integer")


@dataclass(frozen=True)
class SphericalUnit:
    """R = 1, i.e. points uniform on the sphere."""

    kind: str = field(default="spherical", init=False)

    def sample(self, n, gen, size):
        return np.zeros(size)

    def cdf(self, r, n):
        return np.where(np.asarray(r, dtype=float) >= 0.0, 1.0, 0.0)

    def sf(self, r, n):
        return 1.0 - self.cdf(r, n)

    def moments(self, n):
        return 0.0, 0.0

    def scale_hint(self, n):
        return 0.0, 0.0


@dataclass(frozen=True)
class ScaledGaussian:
    """R = |X| / sqrt(n) with X standard Gaussian in R^n."""

    kind: str = field(default="gaussian", init=False)

    def sample(self, n, gen, size):
        _check_dim(n)
        return 0.5 * (math.log(2.0 / n) + sample_log_gamma(n / 2.0, gen, size))

    def _g(self, r, n):
        with np.errstate(over="ignore"):
            return 0.5 * n * np.exp(2.0 * np.asarray(r, dtype=float))

    def cdf(self, r, n):
        return gammainc(n / 2.0, self._g(r, n))

    def sf(self, r, n):
        return gammaincc(n / 2.0, self._g(r, n))

    def logpdf(self, r, n):
        r = np.asarray(r, dtype=float)
        with np.errstate(over="ignore"):
            g = self._g(r, n)
        return 0.5 * n * (math.log(0.5 * n) + 2.0 * r) - g - log_gamma(n / 2.0) + math.log(2.0)

    def moments(self, n):
        a = n / 2.0
        return 0.5 * (float(_polygamma(0, a)) + math.log(2.0 / n)), 0.25 * float(_polygamma(1, a))

    def scale_hint(self, n):
        mean, var = self.moments(n)
        return mean, math.sqrt(var)


@dataclass(frozen=True)
class BetaPrime:
    """R^2 = G1 / G2 with G1 ~ Gamma(n/2), G2 ~ Gamma(phi n / 2)."""

    phi: float
    kind: str = field(default="betaprime", init=False)

    def __post_init__(self):
        if not (np.isfinite(self.phi) and self.phi > 0):
            raise DomainError("phi must be positive")

    def _ab(self, n):
        return n / 2.0, self.phi * n / 2.0

    def sample(self, n, gen, size):
        _check_dim(n)
        a, b = self._ab(n)
        return 0.5 * (sample_log_gamma(a, gen, size) - sample_log_gamma(b, gen, size))

    def cdf(self, r, n):
        a, b = self._ab(n)
        x = 2.0 * np.asarray(r, dtype=float)
        return betainc(a, b, expit(x))

    def sf(self, r, n):
        a, b = self._ab(n)
        x = 2.0 * np.asarray(r, dtype=float)
        return betainc(b, a, expit(-x))

    def logpdf(self, r, n):
        a, b = self._ab(n)
        x = 2.0 * np.asarray(r, dtype=float)
        log_b = -np.logaddexp(0.0, -x)
        log_1mb = -np.logaddexp(0.0, x)
        lbeta = log_gamma(a) + log_gamma(b) - log_gamma(a + b)
        return a * log_b + b * log_1mb - lbeta + math.log(2.0)

    def moments(self, n):
        a, b = self._ab(n)
        mean = 0.5 * float(_polygamma(0, a) - _polygamma(0, b))
        var = 0.25 * float(_polygamma(1, a) + _polygamma(1, b))
        return mean, var

    def scale_hint(self, n):
        mean, var = self.moments(n)
        return mean, math.sqrt(var)


@dataclass(frozen=True)
class ParetoLogRadius:
    """log R = scale * X with X a unit Pareto(alpha) variable, X >= 1.

    ``side`` selects the upper tail (log R >= scale), the lower tail
    (log R <= -scale) or a symmetric random sign.  These laws do not depend on
    n and serve as heavy-tailed log-radius inputs for the stable limits.
    """

    alpha: float
    scale: float = 1.0
    side: str = "upper"
    kind: str = field(default="pareto", init=False)

    def __post_init__(self):
        if not (self.alpha > 0 and self.scale > 0):
            raise DomainError("alpha and scale must be positive")
        if self.side not in ("upper", "lower", "symmetric"):
            raise DomainError("side must be 'upper', 'lower' or 'symmetric'")

    @property
    def tail_weights(self) -> tuple[float, float]:
        """(lower, upper) masses of the two tails."""
        return {"upper": (0.0, 1.0), "lower": (1.0, 0.0), "symmetric": (0.5, 0.5)}[self.side]

    def sample(self, n, gen, size):
        x = self.scale * np.exp(gen.standard_exponential(size) / self.alpha)
        if self.side == "lower":
            return -x
        if self.side == "symmetric":
            return np.where(gen.random(size) < 0.5, -x, x)
        return x

    def _upper_sf(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(r <= self.scale, 1.0, (np.maximum(r, self.scale) / self.scale) ** -self.alpha)

    def sf(self, r, n=None):
        r = np.asarray(r, dtype=float)
        lo, up = self.tail_weights
        # P(log R > r) = up * P(X > r/s) + lo * P(-X > r / s)
        return up * self._upper_sf(r) + lo * (1.0 - self._upper_sf(-r))

    def cdf(self, r, n=None):
        return 1.0 - self.sf(r, n)

    def logpdf(self, r, n=None):
        r = np.asarray(r, dtype=float)
        lo, up = self.tail_weights
        a, s = self.alpha, self.scale
        with np.errstate(divide="ignore", invalid="ignore"):
            dens = np.where(np.abs(r) >= s, a / s * (np.abs(r) / s) ** (-a - 1.0), 0.0)
            weight = np.where(r > 0, up, lo)
            return np.log(weight * dens)

    def moments(self, n=None):
        lo, up = self.tail_weights
        a, s = self.alpha, self.scale
        mean = (up - lo) * a * s / (a - 1.0) if a > 1 else math.nan
        if a > 2:
            second = a * s * s / (a - 2.0)
            return mean, second - mean * mean
        return mean, math.inf

    def scale_hint(self, n=None):
        return 0.0, self.scale


@dataclass(frozen=True)
class AdmissibilityReport:
    ok: bool
    mode: float
    curvature: float
    failures: tuple[str, ...]


@dataclass(frozen=True, eq=False)
class CustomAdmissible:
    """log R with density proportional to g(r) exp(-n h(r)).

    ``g`` and ``h`` are vectorized callables on the log-radius scale; ``x0``
    is the minimizer of h and ``delta`` the radius of the local window.
    ``alpha``, ``c`` and ``C`` are the tail constants checked by
    :meth:`check_admissible`: g(x) <= C (1 + |x - x0|^alpha) and
    h(x) - h(x0) >= c log(1 + |x - x0|) outside the window.
    """

    g: Callable[[np.ndarray], np.ndarray]
    h: Callable[[np.ndarray], np.ndarray]
    x0: float
    delta: float
    alpha: float = 1.0
    c: float = 0.1
    C: float = 10.0
    kind: str = field(default="custom", init=False)

    def __post_init__(self):
        if not self.delta > 0:
            raise DomainError("delta must be positive")

    def log_unnormalized(self, r, n):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            return np.log(self.g(r)) - n * self.h(r)

    @lru_cache(maxsize=64)
    def _profile(self, n: int) -> dict:
        """Mode, curvature, log normalizer, mean and variance for dimension n."""
        l = lambda r: float(self.log_unnormalized(r, n))
        res = optimize.minimize_scalar(
            lambda r: -l(r), bracket=(self.x0 - self.delta, self.x0, self.x0 + self.delta)
        )
        mode = float(res.x)
        lmax = l(mode)
        step = 1e-4 * max(self.delta, 1e-3)
        curv = -(l(mode + step) - 2 * lmax + l(mode - step)) / step**2
        if not (np.isfinite(curv) and curv > 0):
            raise SamplerError("log-density is not strictly concave at its mode")
        s = 1.0 / math.sqrt(curv)
        pts = [mode - 30 * s, mode + 30 * s]

        def moment(k):
            f = lambda r: (r - mode) ** k * math.exp(l(r) - lmax)
            total, err = 0.0, 0.0
            for lo, hi in ((-np.inf, pts[0]), (pts[0], pts[1]), (pts[1], np.inf)):
                v, e = integrate.quad(f, lo, hi, limit=200, epsabs=1e-13 * s ** (k + 1), epsrel=1e-11)
                total += v
                err += e
            return total, err

        z, ez = moment(0)
        m1, e1 = moment(1)
        m2, e2 = moment(2)
        if not (z > 0 and ez <= 1e-8 * z):
            raise QuadratureError("normalizing integral did not converge")
        mean_off = m1 / z
        var = m2 / z - mean_off**2
        return {"mode": mode, "curv": curv, "lmax": lmax, "log_z": lmax + math.log(z),
                "mean": mode + mean_off, "var": var}

    def logpdf(self, r, n):
        return self.log_unnormalized(r, n) - self._profile(n)["log_z"]

    def moments(self, n):
        p = self._profile(n)
        return p["mean"], p["var"]

    def scale_hint(self, n):
        p = self._profile(n)
        return p["mean"], math.sqrt(p["var"])

    def cdf(self, r, n):
        prof = self._profile(n)
        f = lambda x: math.exp(float(self.logpdf(x, n)))
        r_arr = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.empty(r_arr.shape)
        for i, ri in enumerate(r_arr):
            if ri <= prof["mean"]:
                out[i] = integrate.quad(f, -np.inf, ri, limit=200)[0]
            else:
                out[i] = 1.0 - integrate.quad(f, ri, np.inf, limit=200)[0]
        return out if np.ndim(r) else float(out[0])

    def sf(self, r, n):
        return 1.0 - self.cdf(r, n)

    def check_admissible(self, n: int, grid_points: int = 10_000) -> AdmissibilityReport:
        """Grid diagnostics for unimodality, the local expansion and the tails."""
        failures = []
        x0, d = self.x0, self.delta
        x = np.linspace(x0 - 10 * d, x0 + 10 * d, grid_points)
        with np.errstate(all="ignore"):
            gv = np.asarray(self.g(x), dtype=float)
            hv = np.asarray(self.h(x), dtype=float)
        if not (np.all(np.isfinite(gv)) and np.all(np.isfinite(hv))):
            failures.append("g or h not finite on the grid")
            return AdmissibilityReport(False, math.nan, math.nan, tuple(failures))
        if np.any(gv <= 0):
            failures.append("g must be positive")
            return AdmissibilityReport(False, math.nan, math.nan, tuple(failures))
        l = np.log(gv) - n * hv
        imax = int(np.argmax(l))
        diffs = np.diff(l)
        tol = 1e-9 * max(1.0, float(np.max(np.abs(l))))
        if np.any(diffs[:imax] < -tol) or np.any(diffs[imax:] > tol):
            failures.append("g exp(-n h) is not unimodal")
        h0 = float(self.h(np.array([x0]))[0])
        step = 1e-4 * d
        hpp = float((self.h(np.array([x0 + step]))[0] - 2 * h0 + self.h(np.array([x0 - step]))[0]) / step**2)
        if not hpp > 0:
            failures.append("h has non-positive curvature at x0")
            return AdmissibilityReport(False, x[imax], hpp, tuple(failures))
        inner = np.abs(x - x0) <= d
        y = x[inner] - x0
        rem = (hv[inner] - h0) / hpp - 0.5 * y * y
        if np.any(np.abs(rem) > np.abs(y) ** 3 / (4 * d) * (1 + 1e-6) + 1e-12):
            failures.append("cubic remainder of h exceeds |y|^3/(4 delta)")
        g0 = float(self.g(np.array([x0]))[0])
        q = gv[inner] / g0 - 1.0
        if np.any(np.abs(q) > np.abs(y) / (4 * d) * (1 + 1e-6) + 1e-12):
            failures.append("relative deviation of g exceeds |y|/(4 delta)")
        probes = np.concatenate([x[~inner] - x0, np.outer([-1.0, 1.0], d * np.logspace(1, 6, 11)).ravel()])
        with np.errstate(all="ignore"):
            gp = np.asarray(self.g(x0 + probes), dtype=float)
            hp = np.asarray(self.h(x0 + probes), dtype=float)
        ay = np.abs(probes)
        if np.any(~(gp <= self.C * (1 + ay**self.alpha))):
            failures.append("g violates the polynomial growth bound")
        if np.any(~(hp - h0 >= self.c * np.log1p(ay) - 1e-12)):
            failures.append("h violates the logarithmic growth bound")
        return AdmissibilityReport(not failures, float(x[imax]), hpp, tuple(failures))

    @lru_cache(maxsize=64)
    def _envelope(self, n: int) -> tuple[float, float, float]:
        """Cauchy proposal (location, scale) and the log of the bounding constant."""
        rep = self.check_admissible(n)
        if not rep.ok:
            raise AdmissibilityError("; ".join(rep.failures))
        prof = self._profile(n)
        m, s = prof["mode"], 1.0 / math.sqrt(prof["curv"])
        u = np.linspace(-np.pi / 2, np.pi / 2, 40_003)[1:-1]
        z = np.tan(u)
        log_target = self.log_unnormalized(m + s * z, n) - prof["lmax"]
        log_prop = -math.log(math.pi * s) - np.log1p(z * z)
        ratio = log_target - log_prop
        log_m = float(np.max(ratio[np.isfinite(ratio)])) + math.log(1.05)
        # Tail check: the ratio must decay at the ends of the grid.
        if ratio[0] > log_m - 2 or ratio[-1] > log_m - 2:
            raise SamplerError("Cauchy envelope does not dominate the tails of the target")
        accept = math.exp(prof["lmax"] - prof["log_z"] - log_m)
        if accept < 1e-6:
            raise SamplerError(f"rejection acceptance rate {accept:.2e} below 1e-6")
        return m, s, log_m

    def sample(self, n, gen, size):
        m, s, log_m = self._envelope(n)
        lmax = self._profile(n)["lmax"]
        out = np.empty(size)
        filled = 0
        while filled < size:
            need = size - filled
            batch = int(need * 1.3 * math.exp(log_m - (lmax - self._profile(n)["log_z"]))) + 16
            z = gen.standard_cauchy(batch)
            u = gen.random(batch)
            r = m + s * z
            log_ratio = (self.log_unnormalized(r, n) - lmax) - (-math.log(math.pi * s) - np.log1p(z * z)) - log_m
            acc = r[np.log(u) < log_ratio]
            take = min(acc.size, need)
            out[filled:filled + take] = acc[:take]
            filled += take
        return out


def sample_log_radius(law, n: int, rng: RngLike, size=None) -> np.ndarray:
    """log R_i for i.i.d. radii drawn from ``law`` in dimension n."""
    _check_dim(n)
    gen = as_generator(rng)
    k = 1 if size is None else int(size)
    out = np.asarray(law.sample(n, gen, k), dtype=float)
    return float(out[0]) if size is None else out


def standardized_laplace_density(law, n: int, x):
    """Density of (log R - mean) / sd evaluated at x.

    ``mean`` and ``sd`` are the exact mean and standard deviation of log R in
    dimension n, so the result integrates to one and has unit variance.
    """
    if not hasattr(law, "logpdf"):
        raise DomainError(f"law '{law.kind}' has no density")
    mean, var = law.moments(n)
    if not (np.isfinite(var) and var > 0):
        raise DomainError("log-radius variance must be finite and positive")
    sd = math.sqrt(var)
    x = np.asarray(x, dtype=float)
    out = sd * np.exp(law.logpdf(mean + sd * x, n))
    return float(out) if out.ndim == 0 else out
