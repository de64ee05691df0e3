"""Truncated-moment conditions, centering sequences and stable limit laws.

The log-volume of p rotationally invariant vectors is the sum of p i.i.d.
log-radii and the independent spherical part.  When the log-radius has heavy
tails the sum is attracted to an alpha-stable law Z with

    E exp(i t Z) = exp{ i g t + a (c1 + c2) Gamma(-a) cos(pi a / 2) |t|^a (1 - i eta tan(pi a / 2) sign t) }

for a != 1 and the usual logarithmic form for a = 1, eta = (c2 - c1)/(c1 + c2).
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator
from scipy.special import betainc, sici

from .errors import DomainError, InversionError, QuadratureError
from .sampling import ParetoLogRadius, RngLike, SphericalUnit, as_generator
from .simplex import SimplexDims
from .specfun import _polygamma, log_gamma

EULER_GAMMA = 0.57721566490153286061


# ---------------------------------------------------------------------------
# Stable laws.


@dataclass(frozen=True)
class StableParams:
    alpha: float
    c1: float
    c2: float
    gamma_shift: float = 0.0

    def __post_init__(self):
        if not 0 < self.alpha < 2:
            raise DomainError("alpha must lie in (0, 2)")
        if self.c1 < 0 or self.c2 < 0 or self.c1 + self.c2 <= 0:
            raise DomainError("need c1, c2 >= 0 with c1 + c2 > 0")
        if not math.isfinite(self.gamma_shift):
            raise DomainError("gamma_shift must be finite")

    @property
    def eta(self) -> float:
        return (self.c2 - self.c1) / (self.c1 + self.c2)

    @property
    def decay_rate(self) -> float:
        """K with |cf(t)| = exp(-K |t|^alpha)."""
        a = self.alpha
        if a == 1.0:
            return (self.c1 + self.c2) * math.pi / 2
        return -a * (self.c1 + self.c2) * math.gamma(-a) * math.cos(math.pi * a / 2)

    @property
    def scale(self) -> float:
        return self.decay_rate ** (1.0 / self.alpha)


def compensator_drift(alpha: float, c1: float, c2: float) -> float:
    """Location of the Petrov limit relative to the displayed stable law.

    With Levy measure c2 a x^{-a-1} dx on (0, inf) (and c1 on the negative
    axis) and the compensator x / (1 + x^2), the limit is Z + kappa where Z
    has the displayed characteristic function and

        kappa = -(c2 - c1) a pi / (2 cos(pi a / 2))   (a != 1)
        kappa = (c2 - c1) (1 - Euler gamma)            (a = 1).
    """
    if alpha == 1.0:
        return (c2 - c1) * (1.0 - EULER_GAMMA)
    return -(c2 - c1) * alpha * math.pi / (2.0 * math.cos(math.pi * alpha / 2.0))


def _stable_cf_scalar(params: StableParams, t: float) -> complex:
    a = params.alpha
    at = abs(t)
    sgn = math.copysign(1.0, t) if t != 0 else 0.0
    c = params.c1 + params.c2
    if a == 1.0:
        tlog = at * math.log(at) if at > 0 else 0.0
        expo = complex(-c * math.pi / 2 * at, -c * params.eta * sgn * tlog)
    else:
        k = a * c * math.gamma(-a) * math.cos(math.pi * a / 2)
        expo = k * at**a * complex(1.0, -params.eta * math.tan(math.pi * a / 2) * sgn)
    return cmath.exp(expo + 1j * params.gamma_shift * t)


def stable_cf(params: StableParams, t):
    """Characteristic function of the stable law, shifted by ``gamma_shift``."""
    if np.ndim(t) == 0:
        return _stable_cf_scalar(params, float(t))
    t = np.asarray(t, dtype=float)
    a = params.alpha
    at = np.abs(t)
    sgn = np.sign(t)
    c = params.c1 + params.c2
    if a == 1.0:
        with np.errstate(divide="ignore", invalid="ignore"):
            tlog = np.where(at > 0, at * np.log(np.where(at > 0, at, 1.0)), 0.0)
        expo = -c * math.pi / 2 * at - 1j * c * params.eta * sgn * tlog
    else:
        k = a * c * math.gamma(-a) * math.cos(math.pi * a / 2)
        expo = k * at**a * (1 - 1j * params.eta * math.tan(math.pi * a / 2) * sgn)
    out = np.exp(expo + 1j * params.gamma_shift * t)
    return complex(out) if out.ndim == 0 else out


def _gil_pelaez(cf: Callable, x: float, t_max: float) -> float:
    """P(Z <= x) = 1/2 - (1/pi) int_0^T Im(e^{-itx} cf(t)) / t dt.

    Im(e^{-itx} cf) / t = cos(tx) Im cf / t - sin(tx) (Re cf - 1) / t - sin(tx) / t.
    The last term integrates to Si(T x).  The first two may carry a t^(alpha-1)
    cusp at 0, so the first few periods are integrated adaptively and the rest
    with QUADPACK's oscillatory rule.
    """
    def gi(t):
        return cf(t).imag / t if t > 0 else 0.0

    def gr(t):
        return (cf(t).real - 1.0) / t if t > 0 else 0.0

    def near(t):
        if t <= 0:
            return 0.0
        v = cf(t)
        return (math.cos(t * x) * v.imag - math.sin(t * x) * (v.real - 1.0)) / t

    opts = dict(limit=1000, epsabs=1e-11, epsrel=1e-10)
    t0 = t_max if x == 0.0 else min(t_max, 20.0 * math.pi / abs(x))
    # Convergence is judged from the returned error estimates below.
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        total, err = integrate.quad(near, 0.0, t0, **opts)
        if t0 < t_max:
            r1, e1 = integrate.quad(gi, t0, t_max, weight="cos", wvar=x, **opts)
            r2, e2 = integrate.quad(gr, t0, t_max, weight="sin", wvar=x, **opts)
            total += r1 - r2
            err += e1 + e2
    total -= float(sici(t_max * x)[0])
    if not (math.isfinite(total) and err < 1e-7):
        raise InversionError(f"characteristic-function inversion did not converge (error {err:.2e})")
    return 0.5 - total / math.pi


def _truncation_point(decay: float, alpha: float, gauss_var: float = 0.0) -> float:
    """t beyond which |cf| < e^{-40}."""
    t_max = (40.0 / decay) ** (1.0 / alpha)
    if gauss_var > 0:
        t_max = min(t_max, math.sqrt(80.0 / gauss_var))
    return t_max


def _invert(cf, x, t_max: float):
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.array([min(1.0, max(0.0, _gil_pelaez(cf, float(xi), t_max))) for xi in x_arr])
    return float(out[0]) if np.ndim(x) == 0 else out


def stable_cdf(params: StableParams, x, truncation: float = 1.0):
    """P(Z <= x) by Gil-Pelaez inversion of :func:`stable_cf`.

    ``truncation`` scales the upper integration limit (default reaches
    |cf| = e^{-40}); it exists for self-consistency checks.
    """
    cf = lambda t: stable_cf(params, t)
    return _invert(cf, x, truncation * _truncation_point(params.decay_rate, params.alpha))


def mixed_cf(q: float, params: StableParams, t):
    t = np.asarray(t, dtype=float)
    return np.exp(-0.5 * q * q * t * t) * stable_cf(params, t)


def mixed_cdf(q: float, params: StableParams, x):
    """P(q N + Z <= x) for independent standard normal N and stable Z."""
    if not q > 0:
        raise DomainError("q must be positive")
    q2 = 0.5 * q * q
    cf = lambda t: math.exp(-q2 * t * t) * _stable_cf_scalar(params, t)
    return _invert(cf, x, _truncation_point(params.decay_rate, params.alpha, q * q))


@dataclass
class CDFTable:
    """Monotone PCHIP interpolant of a CDF on an asinh-spaced grid.

    Points outside the tabulated range are evaluated exactly.
    """

    exact: Callable[[np.ndarray], np.ndarray]
    center: float
    scale: float
    half_width: float = 9.0
    points: int = 1201
    _interp: PchipInterpolator = field(init=False, repr=False)
    lo: float = field(init=False)
    hi: float = field(init=False)

    def __post_init__(self):
        u = np.linspace(-self.half_width, self.half_width, self.points)
        x = self.center + self.scale * np.sinh(u)
        y = np.maximum.accumulate(np.clip(np.asarray(self.exact(x), dtype=float), 0.0, 1.0))
        self._interp = PchipInterpolator(u, y)
        self.lo, self.hi = float(x[0]), float(x[-1])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.lo) & (x <= self.hi)
        out = np.empty(x.shape)
        out[inside] = self._interp(np.arcsinh((x[inside] - self.center) / self.scale))
        if np.any(~inside):
            out[~inside] = self.exact(x[~inside])
        return np.clip(out, 0.0, 1.0)

    def ppf(self, u):
        """Inverse CDF by monotone interpolation of the table."""
        grid = np.linspace(-self.half_width, self.half_width, self.points)
        y = self._interp(grid)
        y, idx = np.unique(y, return_index=True)
        x = self.center + self.scale * np.sinh(grid[idx])
        return np.interp(np.asarray(u, dtype=float), y, x)


@lru_cache(maxsize=16)
def stable_cdf_table(params: StableParams, q: float = 0.0, points: int = 1201) -> CDFTable:
    """Cached interpolation table for stable_cdf (q = 0) or mixed_cdf (q > 0)."""
    if q > 0:
        exact = lambda x: mixed_cdf(q, params, x)
        scale = max(params.scale, q)
    else:
        exact = lambda x: stable_cdf(params, x)
        scale = params.scale
    return CDFTable(exact, params.gamma_shift, scale, points=points)


# ---------------------------------------------------------------------------
# Truncated moments.


@dataclass(frozen=True)
class TruncatedMoments:
    mean: float
    var: float
    tail_prob: float
    method: str = "quadrature"
    half_width: float = 0.0


def _quad_pieces(f, pieces) -> tuple[float, float]:
    total, err = 0.0, 0.0
    for lo, hi in pieces:
        if hi <= lo:
            continue
        v, e = integrate.quad(f, lo, hi, limit=400, epsabs=1e-300, epsrel=1e-11)
        total += v
        err += e
    return total, err


def _breakpoints(law, n: int, lo: float, hi: float) -> list[float]:
    loc, scale = law.scale_hint(n)
    pts = [loc + k * scale for k in (-20, -8, -3, -1, 0, 1, 3, 8, 20)]
    if isinstance(law, ParetoLogRadius):
        pts += [law.scale, -law.scale]
    pts = sorted(p for p in set(pts) if lo < p < hi)
    return [lo] + pts + [hi]


def _radius_window_moments(law, n: int, lo: float, hi: float) -> tuple[float, float, float]:
    """int x^k f(x) dx over (lo, hi) for k = 0, 1, 2."""
    edges = _breakpoints(law, n, lo, hi)
    pieces = list(zip(edges[:-1], edges[1:]))
    out = []
    for k in range(3):
        f = lambda r, k=k: r**k * math.exp(float(law.logpdf(r, n)))
        v, e = _quad_pieces(f, pieces)
        if not math.isfinite(v):
            raise QuadratureError("truncated moment integral is not finite")
        out.append(v)
    return tuple(out)


def truncated_mean_var(law, n: int, cutoff: float, rng: RngLike | None = None, mc_samples: int = 10**6) -> TruncatedMoments:
    """E[X 1{|X|<c}], E[X^2 1{|X|<c}] - E[X 1{|X|<c}]^2 and P(|X| >= c) for X = log R."""
    if not cutoff > 0:
        raise DomainError("cutoff must be positive")
    if isinstance(law, SphericalUnit):
        return TruncatedMoments(0.0, 0.0, 0.0, "exact")
    tail = float(law.sf(cutoff, n) + law.cdf(-cutoff, n))
    if hasattr(law, "logpdf"):
        m0, m1, m2 = _radius_window_moments(law, n, -cutoff, cutoff)
        mean, var = law.moments(n)
        if math.isfinite(var) and tail < 0.5:
            # Full moments minus the two tails: better conditioned when the
            # window holds nearly all the mass.
            lo_edges = _breakpoints(law, n, -np.inf, -cutoff)
            hi_edges = _breakpoints(law, n, cutoff, np.inf)
            t1 = t2 = 0.0
            for edges in (lo_edges, hi_edges):
                pieces = list(zip(edges[:-1], edges[1:]))
                t1 += _quad_pieces(lambda r: r * math.exp(float(law.logpdf(r, n))), pieces)[0]
                t2 += _quad_pieces(lambda r: r * r * math.exp(float(law.logpdf(r, n))), pieces)[0]
            m1 = mean - t1
            m2 = var + mean * mean - t2
        return TruncatedMoments(m1, max(m2 - m1 * m1, 0.0), tail)
    if rng is None:
        raise DomainError("law has no density; pass rng for the Monte Carlo fallback")
    x = law.sample(n, as_generator(rng), mc_samples)
    inside = np.where(np.abs(x) < cutoff, x, 0.0)
    m1 = float(inside.mean())
    var = float((inside**2).mean() - m1 * m1)
    hw = 1.96 * float(inside.std()) / math.sqrt(mc_samples)
    return TruncatedMoments(m1, var, float(np.mean(np.abs(x) >= cutoff)), "monte-carlo", hw)


@dataclass(frozen=True)
class BetaTruncation:
    mean: np.ndarray
    var: np.ndarray
    tail: np.ndarray


def _log_beta_window(a: float, b: float, lower: float, k: int) -> float:
    """int_{lower}^0 y^k f(y) dy for Y = log B, B ~ Beta(a, b), via u = e^y."""
    lbeta = float(log_gamma(a) + log_gamma(b) - log_gamma(a + b))
    if b >= 1.0:
        # Bounded density in y; large shapes would overflow the u-form below.
        f = lambda y: y**k * math.exp(a * y + (b - 1) * math.log(-math.expm1(y)) - lbeta) if y < 0 else 0.0
        mode = max(math.log(a / (a + b - 1.0)), lower)
        sd = math.sqrt(float(_polygamma(1, a) - _polygamma(1, a + b)))
        cuts = {lower, 0.0} | {q for q in (mode - 8 * sd, mode, mode + 8 * sd) if lower < q < 0.0}
        edges = sorted(cuts)
        return _quad_pieces(f, zip(edges[:-1], edges[1:]))[0]
    f = lambda u: math.log(u) ** k * math.exp((a - 1) * math.log(u) - lbeta)
    # The (1 - u)^(b - 1) factor is the algebraic weight at the right end.
    v, e = integrate.quad(f, math.exp(lower), 1.0, weight="alg", wvar=(0.0, b - 1.0), limit=400)
    return v


def _log_beta_tail(a: float, b: float, upper: float, mean: float, sd: float, k: int) -> float:
    """int_{-inf}^{upper} y^k f(y) dy for Y = log B."""
    lbeta = float(log_gamma(a) + log_gamma(b) - log_gamma(a + b))
    f = lambda y: y**k * math.exp(a * y + (b - 1) * math.log(-math.expm1(y)) - lbeta)
    lo = min(upper, mean) - 80.0 * sd - 80.0 / a
    edges = sorted({lo, upper} | {p for p in (mean - 10 * sd, mean - 3 * sd, mean) if lo < p < upper})
    return _quad_pieces(f, zip(edges[:-1], edges[1:]))[0]


def beta_truncated_moments(dims: SimplexDims, cutoff: float) -> BetaTruncation:
    """Per-j truncated mean, variance and tail of log Beta((n-j)/2, j/2) at |y| < 2 cutoff."""
    if not cutoff > 0:
        raise DomainError("cutoff must be positive")
    n, p = dims.n, dims.p
    if p == 1:
        z = np.zeros(0)
        return BetaTruncation(z, z, z)
    j = np.arange(1, p, dtype=float)
    a, b = (n - j) / 2.0, j / 2.0
    full_mean = np.asarray(_polygamma(0, a) - _polygamma(0, n / 2.0))
    full_var = np.asarray(_polygamma(1, a) - _polygamma(1, n / 2.0))
    L = 2.0 * cutoff
    tail = np.asarray(betainc(a, b, math.exp(-L)), dtype=float)
    mean = full_mean.copy()
    var = full_var.copy()
    for i in np.nonzero(tail > 1e-18)[0]:
        ai, bi, sd = float(a[i]), float(b[i]), math.sqrt(float(full_var[i]))
        if tail[i] < 0.5:
            t1 = _log_beta_tail(ai, bi, -L, float(full_mean[i]), sd, 1)
            t2 = _log_beta_tail(ai, bi, -L, float(full_mean[i]), sd, 2)
            m1 = float(full_mean[i]) - t1
            m2 = float(full_var[i] + full_mean[i] ** 2) - t2
        else:
            m1 = _log_beta_window(ai, bi, -L, 1)
            m2 = _log_beta_window(ai, bi, -L, 2)
        mean[i] = m1
        var[i] = max(m2 - m1 * m1, 0.0)
    return BetaTruncation(mean, var, tail)


def beta_truncated_terms(dims: SimplexDims, cutoff: float) -> tuple[float, float]:
    """(sum_j truncated variance, sum_j tail probability) at |log beta| < 2 cutoff."""
    bt = beta_truncated_moments(dims, cutoff)
    return float(np.sum(bt.var)), float(np.sum(bt.tail))


# ---------------------------------------------------------------------------
# Normal-limit conditions and centering.


@dataclass(frozen=True)
class NormalConditionReport:
    dims: SimplexDims
    sigma_n: float
    condition1: float
    condition2: dict
    radius_part: float
    beta_part: float


def check_normal_conditions(law, dims: SimplexDims, sigma_n: float, epsilons=(0.5, 0.1)) -> NormalConditionReport:
    """Evaluate the variance condition (should be near 1) and the tail condition (near 0)."""
    if not sigma_n > 0:
        raise DomainError("sigma_n must be positive")
    tm = truncated_mean_var(law, dims.n, sigma_n)
    bvar, _ = beta_truncated_terms(dims, sigma_n)
    radius_part = dims.p * tm.var / sigma_n**2
    beta_part = 0.25 * bvar / sigma_n**2
    cond2 = {}
    for eps in epsilons:
        r_tail = 0.0 if isinstance(law, SphericalUnit) else float(law.sf(eps * sigma_n, dims.n) + law.cdf(-eps * sigma_n, dims.n))
        _, b_tail = beta_truncated_terms(dims, eps * sigma_n)
        cond2[float(eps)] = dims.p * r_tail + b_tail
    return NormalConditionReport(dims, float(sigma_n), radius_part + beta_part, cond2, radius_part, beta_part)


def scan_normal_conditions(law, dims_list, sigma_fn: Callable[[SimplexDims], float], epsilons=(0.5, 0.1)):
    """Condition reports across a schedule of (n, p) to show their trend."""
    return [check_normal_conditions(law, d, sigma_fn(d), epsilons) for d in dims_list]


def propose_sigma_normal(law, dims: SimplexDims, tol: float = 1e-10, max_iter: int = 200) -> float:
    """Heuristic sigma_n solving condition1(sigma) = 1 by fixed-point iteration.

    The conditions only require the ratio to tend to one; this picks the
    value at which it equals one exactly at the given (n, p).
    """
    from .simplex import spherical_moments

    mean, var = law.moments(dims.n)
    sph_var = spherical_moments(dims).variance
    s2 = dims.p * var + sph_var if math.isfinite(var) else max(sph_var, 1.0)
    for _ in range(max_iter):
        s = math.sqrt(s2)
        tm = truncated_mean_var(law, dims.n, s)
        bvar, _ = beta_truncated_terms(dims, s)
        new = dims.p * tm.var + 0.25 * bvar
        if abs(new - s2) <= tol * s2:
            return math.sqrt(new)
        s2 = new
    return math.sqrt(s2)


@dataclass(frozen=True)
class CenteringSequences:
    sigma_n: float
    b_n: float
    a_n: float
    c_n: float
    omega_n_sq: float

    def __post_init__(self):
        if not self.sigma_n > 0:
            raise DomainError("sigma_n must be positive")
        for name in ("b_n", "a_n", "c_n", "omega_n_sq"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} is not finite")


def _omega_sq(dims: SimplexDims) -> float:
    n, p = dims.n, dims.p
    return -0.5 * math.log((n - p + 1) / n) - p * p / (2.0 * n * (p + 1))


def _compensated_mean(law, n: int, sigma: float, a_n: float) -> float:
    """E[Y / (1 + Y^2)] with Y = log R / sigma - a_n."""
    if isinstance(law, SphericalUnit):
        y = -a_n
        return y / (1 + y * y)
    edges = _breakpoints(law, n, -np.inf, np.inf)
    extra = [sigma * (a_n + k) for k in (-10, -1, 0, 1, 10)]
    edges = sorted(set(edges) | set(extra))
    f = lambda r: (r / sigma - a_n) / (1 + (r / sigma - a_n) ** 2) * math.exp(float(law.logpdf(r, n)))
    return _quad_pieces(f, zip(edges[:-1], edges[1:]))[0]


def centering_normal(law, dims: SimplexDims, sigma_n: float) -> CenteringSequences:
    """b_n = p E[X 1{|X|<s}] - log p! + 1/2 sum_j E[Y_j 1{|Y_j| < 2 s}]."""
    if not sigma_n > 0:
        raise DomainError("sigma_n must be positive")
    tm = truncated_mean_var(law, dims.n, sigma_n)
    bt = beta_truncated_moments(dims, sigma_n)
    b_n = dims.p * tm.mean - math.lgamma(dims.p + 1) + 0.5 * float(np.sum(bt.mean))
    a_n = tm.mean / sigma_n
    c_n = a_n + _compensated_mean(law, dims.n, sigma_n, a_n)
    return CenteringSequences(float(sigma_n), b_n, a_n, c_n, _omega_sq(dims))


def centering_stable(law, dims: SimplexDims, sigma_n: float) -> CenteringSequences:
    """b_n = -log p! + 1/2 sum_j E[Y_j] + p sigma_n c_n with c_n = a_n + E[Y/(1+Y^2)]."""
    if not sigma_n > 0:
        raise DomainError("sigma_n must be positive")
    tm = truncated_mean_var(law, dims.n, sigma_n)
    a_n = tm.mean / sigma_n
    c_n = a_n + _compensated_mean(law, dims.n, sigma_n, a_n)
    j = np.arange(1, dims.p, dtype=float)
    beta_mean = float(np.sum(_polygamma(0, (dims.n - j) / 2.0) - _polygamma(0, dims.n / 2.0))) if dims.p > 1 else 0.0
    b_n = -math.lgamma(dims.p + 1) + 0.5 * beta_mean + dims.p * sigma_n * c_n
    return CenteringSequences(float(sigma_n), b_n, a_n, c_n, _omega_sq(dims))


def pareto_sigma(law: ParetoLogRadius, p: int, c_total: float = 1.0) -> float:
    """sigma_n making p P(|log R| > sigma x) = c_total x^{-alpha}."""
    return law.scale * (p / c_total) ** (1.0 / law.alpha)


def pareto_stable_params(law: ParetoLogRadius, p: int, sigma_n: float) -> StableParams:
    """Tail constants of p P(+-log R > sigma x) and the compensator drift."""
    lo, up = law.tail_weights
    k = p * (law.scale / sigma_n) ** law.alpha
    c1, c2 = lo * k, up * k
    return StableParams(law.alpha, c1, c2, compensator_drift(law.alpha, c1, c2))
