"""Explicit bounds, the constants c0 and c1, and characteristic-function checks."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import mpmath
import numpy as np
from scipy import integrate

from .errors import DegenerateVarianceError, DomainError, InstabilityError, QuadratureError
from .quadrature import gauss_kronrod
from .sampling import RngLike, as_generator, sample_log_gamma
from .simplex import MomentSummary, SimplexDims, gaussian_logdet_moments, spherical_moments
from .specfun import _polygamma, log_gamma

KS_CONSTANT = 28.0
# Constant in front of sigma^-3 sum_j [1/(n-j)^2 - 1/n^2] in the cubic
# characteristic-function bound.  STATED = 7/96 omits the
# factor 2^3 from |psi_3(z)| <= 14 / Re(z)^3 at Re(z) = (n - s)/2, and the
# third cumulant alone shows it is too small.  RIGOROUS restores the factor.
CHAR_CONSTANT_STATED = 7.0 / 96.0
CHAR_CONSTANT_RIGOROUS = 7.0 / 12.0
MIN_P_FOR_BOUND = 41
EULER_GAMMA = 0.57721566490153286061


@dataclass(frozen=True)
class BoundReport:
    dims: SimplexDims
    epsilon_np: float
    ks_bound: float
    bound_form: str
    applicable: bool
    reason: str = ""

    def __post_init__(self):
        if self.bound_form not in ("main", "capped_theta", "codimension"):
            raise DomainError(f"unknown bound form {self.bound_form!r}")
        if not self.ks_bound >= 0:
            raise DomainError("ks_bound must be non-negative")
        if not self.applicable and not self.reason:
            raise DomainError("an inapplicable bound needs a reason")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["dims"] = {"n": self.dims.n, "p": self.dims.p}
        d["theta"] = self.dims.theta
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


# ---------------------------------------------------------------------------
# Berry-Esseen quantities for the spherical simplex.


def epsilon_np(dims: SimplexDims, constant: float = CHAR_CONSTANT_STATED) -> float:
    """constant * sigma^-3 sum_{j<p} [1/(n-j)^2 - 1/n^2] with sigma the exact sd.

    The default is the stated constant 7/96; pass CHAR_CONSTANT_RIGOROUS
    for a value for which the cubic bound provably holds.
    """
    if dims.p < 2:
        raise DegenerateVarianceError("the spherical log-volume is constant for p = 1")
    sigma = math.sqrt(spherical_moments(dims).variance)
    j = np.arange(1, dims.p, dtype=float)
    total = float(np.sum(1.0 / (dims.n - j) ** 2 - 1.0 / dims.n**2))
    return constant * total / sigma**3


def epsilon_upper_bound(dims: SimplexDims) -> float:
    """Closed-form upper bound on epsilon_np valid for p >= 7."""
    th = dims.theta
    return 1.75 * th * th / (dims.n * (1 - th) * (-math.log1p(-th) - th) ** 1.5)


def _main_bound(dims: SimplexDims, constant: float) -> float:
    th = dims.theta
    if th == 0.0:
        return math.inf
    return constant * th * th / (dims.n * (1 - th) * (-math.log1p(-th) - th) ** 1.5)


def spherical_ks_bound(
    dims: SimplexDims, form: str = "main", phi: float = 0.5, constant: float = KS_CONSTANT
) -> BoundReport:
    """Kolmogorov distance bound for the standardized spherical log-volume.

    ``main`` is the main bound; ``capped_theta`` its simplification
    C_phi / (p - 1) for theta <= phi with C_phi = 2 sqrt(2) C / (1 - phi);
    ``codimension`` the form C / (q (log(n/q) - 1)^(3/2)) with q = n - p + 1.
    """
    eps = epsilon_np(dims) if dims.p >= 2 else math.nan
    reasons = []
    if dims.p < MIN_P_FOR_BOUND:
        reasons.append(f"p < {MIN_P_FOR_BOUND}")
    if form == "main":
        bound = _main_bound(dims, constant)
    elif form == "capped_theta":
        if not 0 < phi < 1:
            raise DomainError("phi must lie in (0, 1)")
        c_phi = 2.0 * math.sqrt(2.0) * constant / (1.0 - phi)
        bound = c_phi / (dims.p - 1) if dims.p > 1 else math.inf
        if dims.theta > phi:
            reasons.append(f"theta > phi = {phi}")
    elif form == "codimension":
        q = dims.n - dims.p + 1
        base = math.log(dims.n / q) - 1.0
        if base > 0:
            bound = constant / (q * base**1.5)
        else:
            bound = math.inf
            reasons.append("log(n/q) <= 1")
    else:
        raise DomainError(f"unknown bound form {form!r}")
    return BoundReport(dims, eps, bound, form, not reasons, "; ".join(reasons))


def bound_scan_csv(dims_list, form: str = "main") -> str:
    """CSV table (n, p, theta, epsilon_np, ks_bound, applicable) over a list of dims."""
    lines = ["n,p,theta,epsilon_np,ks_bound,applicable"]
    for d in dims_list:
        r = spherical_ks_bound(d, form)
        lines.append(f"{d.n},{d.p},{d.theta!r},{r.epsilon_np!r},{r.ks_bound!r},{int(r.applicable)}")
    return "\n".join(lines) + "\n"


def omega_sq(dims: SimplexDims) -> float:
    """-1/2 log((n - p + 1)/n) - p^2 / (2 n (p + 1))."""
    n, p = dims.n, dims.p
    return -0.5 * math.log((n - p + 1) / n) - p * p / (2.0 * n * (p + 1))


# ---------------------------------------------------------------------------
# The constants c0 and c1.


def _bracket(z):
    """1/2 - 1/z + 1/(e^z - 1), with a series near 0."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = z < 1e-2
    zs = z[small]
    z2 = zs * zs
    out[small] = zs * (1 / 12 - z2 * (1 / 720 - z2 * (1 / 30240 - z2 / 1209600)))
    zl = z[~small]
    out[~small] = 0.5 - 1.0 / zl + 1.0 / np.expm1(zl)
    return out


def _mean_kernel(z):
    return _bracket(z) / np.expm1(0.5 * np.asarray(z, dtype=float))


def _var_kernel(z):
    """((z - 1) e^z + 1) / ((e^z - 1)(e^(z/2) - 1)).

    The numerator over e^z - 1 equals z/2 + z * bracket(z).
    """
    z = np.asarray(z, dtype=float)
    return (0.5 * z + z * _bracket(z)) / np.expm1(0.5 * z)


def _var_kernel_display(z):
    z = np.asarray(z, dtype=float)
    return _bracket(z) * z / np.expm1(0.5 * z)


_SPLIT = 50.0
_UPPER = 120.0
# Both kernels are below z e^{-z/2} beyond _UPPER, whose tail integral is
# 2 (z + 2) e^{-z/2}.
_TAIL_BOUND = 2.0 * (_UPPER + 2.0) * math.exp(-_UPPER / 2.0)


def _gk_integral(kernel) -> tuple[float, float]:
    a = gauss_kronrod(kernel, 0.0, _SPLIT, tol=1e-13)
    b = gauss_kronrod(kernel, _SPLIT, _UPPER, tol=1e-13)
    return a.value + b.value, a.error + b.error + _TAIL_BOUND


def _tanh_sinh_integral(which: str) -> float:
    """The same integrals by mpmath tanh-sinh at 40 digits.

    [0, 1e-6] is integrated from the Taylor series of the bracket, since the
    direct formula cancels catastrophically there.
    """
    eps = mpmath.mpf("1e-6")
    with mpmath.workdps(40):
        def bracket(z):
            return mpmath.mpf(1) / 2 - 1 / z + 1 / mpmath.expm1(z)

        if which == "mean":
            f = lambda z: bracket(z) / mpmath.expm1(z / 2)
            # bracket/(e^{z/2}-1) ~ (z/12)/(z/2) = 1/6 - z/24 + ...
            head = eps / 6 - eps**2 / 48
        elif which == "var":
            f = lambda z: (z / 2 + z * bracket(z)) / mpmath.expm1(z / 2)
            head = eps - eps**2 / 12  # kernel ~ 1 - z/6 + ...
        else:
            f = lambda z: bracket(z) * z / mpmath.expm1(z / 2)
            head = eps**2 / 12
        body = mpmath.quad(f, [eps, 1, 10, 50, mpmath.inf], method="tanh-sinh")
        return float(body + head)


@dataclass(frozen=True)
class UniversalConstants:
    c0: float
    c1: float
    quadrature_error: float
    c1_display: float = field(default=math.nan)

    def __post_init__(self):
        if not (math.isfinite(self.c0) and math.isfinite(self.c1)):
            raise QuadratureError("constants are not finite")


@lru_cache(maxsize=1)
def universal_constants() -> UniversalConstants:
    """c0 and c1 in mean = 1/2 log (n-1)! + c0 + O(1/n), var = 1/2 log n + c1 + O(1/n).

    c0 = -gamma/2 - 1/2 I0 with I0 = int_0^inf bracket(z) / (e^{z/2} - 1) dz.
    c1 = gamma/2 + 1/4 I1 with I1 = int_0^inf ((z-1)e^z + 1)/((e^z-1)(e^{z/2}-1)) dz.

    ``c1_display`` keeps the variant gamma/2 + 1/4 int bracket(z) z/(e^{z/2}-1),
    which is smaller than c1 by exactly pi^2/12 and does not match the
    exact variances.
    """
    i0, e0 = _gk_integral(_mean_kernel)
    i1, e1 = _gk_integral(_var_kernel)
    i2, e2 = _gk_integral(_var_kernel_display)
    j0 = _tanh_sinh_integral("mean")
    j1 = _tanh_sinh_integral("var")
    disagreement = max(abs(i0 - j0), abs(i1 - j1))
    err = max(disagreement, e0, e1)
    if err > 1e-10:
        raise QuadratureError(f"quadrature schemes disagree by {err:.2e}")
    c0 = -0.5 * EULER_GAMMA - 0.5 * i0
    c1 = 0.5 * EULER_GAMMA + 0.25 * i1
    return UniversalConstants(c0, c1, err, 0.5 * EULER_GAMMA + 0.25 * i2)


@dataclass(frozen=True)
class GaussianLogdetApprox:
    n: int
    approx: MomentSummary
    exact: MomentSummary

    @property
    def mean_residual(self) -> float:
        return self.exact.mean - self.approx.mean

    @property
    def var_residual(self) -> float:
        return self.exact.variance - self.approx.variance


def gaussian_matrix_mean_var_approx(n: int) -> GaussianLogdetApprox:
    """1/2 log (n-1)! + c0 and 1/2 log n + c1, with residuals against the exact sums."""
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise DomainError("n must be an integer >= 2")
    uc = universal_constants()
    approx = MomentSummary(0.5 * math.lgamma(n) + uc.c0, 0.5 * math.log(n) + uc.c1)
    return GaussianLogdetApprox(int(n), approx, gaussian_logdet_moments(n))


def gaussian_residual_table(n_values) -> np.ndarray:
    """Rows (n, mean residual, variance residual) using cumulative exact sums."""
    from .simplex import gaussian_logdet_moment_table

    n_values = np.asarray(n_values, dtype=int)
    means, variances = gaussian_logdet_moment_table(int(n_values.max()))
    uc = universal_constants()
    lg = np.array([math.lgamma(k) for k in n_values])
    mean_res = means[n_values - 1] - (0.5 * lg + uc.c0)
    var_res = variances[n_values - 1] - (0.5 * np.log(n_values) + uc.c1)
    return np.column_stack([n_values, mean_res, var_res])


# ---------------------------------------------------------------------------
# Characteristic functions.


def spherical_log_cf(dims: SimplexDims, t) -> np.ndarray:
    """log of the characteristic function of the standardized spherical log-volume."""
    if dims.p < 2:
        raise DegenerateVarianceError("p = 1 has zero variance")
    t = np.atleast_1d(np.asarray(t, dtype=float))
    sigma = math.sqrt(spherical_moments(dims).variance)
    a = (dims.n - np.arange(1, dims.p, dtype=float)) / 2.0
    c = dims.n / 2.0
    mu = _polygamma(0, a) - _polygamma(0, c)
    base = log_gamma(a) - log_gamma(c)
    out = np.empty(t.shape, dtype=complex)
    for k, tk in enumerate(t):
        s = tk / (2.0 * sigma)
        z = log_gamma(a + 1j * s) - log_gamma(c + 1j * s) - base - 1j * s * mu
        out[k] = z.sum()
    return out


@dataclass(frozen=True)
class CharBoundRow:
    t: float
    lhs: float
    bound: float

    @property
    def violation(self) -> float:
        return self.lhs - self.bound


def third_cumulant_ratio(dims: SimplexDims) -> float:
    """|kappa_3| / (6 sigma^3) divided by epsilon_np with the stated constant.

    Since log phi(t) + t^2/2 = -i kappa_3 t^3 / 6 + O(t^4), a ratio above one
    means the stated cubic bound fails for all small t.
    """
    a = (dims.n - np.arange(1, dims.p, dtype=float)) / 2.0
    c = dims.n / 2.0
    var = 0.25 * float(np.sum(_polygamma(1, a) - _polygamma(1, c)))
    k3 = 0.125 * float(np.sum(_polygamma(2, a) - _polygamma(2, c)))
    return abs(k3) / (6.0 * var**1.5) / epsilon_np(dims)


@dataclass(frozen=True)
class CharBoundReport:
    dims: SimplexDims
    epsilon_np: float
    window: float
    rows: tuple[CharBoundRow, ...]

    @property
    def max_violation(self) -> float:
        return max(r.violation for r in self.rows)

    @property
    def violations(self) -> int:
        return sum(r.violation > 0 for r in self.rows)


def verify_char_bound(
    dims: SimplexDims, t_values, constant: float = CHAR_CONSTANT_STATED
) -> CharBoundReport:
    """Check |log phi(t) + t^2/2| <= eps |t|^3 on the given t values.

    t must lie in |t| <= 1/(4 eps), where the smoothing argument uses the bound.
    """
    eps = epsilon_np(dims, constant)
    window = 1.0 / (4.0 * eps)
    t_arr = np.asarray(list(t_values), dtype=float)
    if np.any(np.abs(t_arr) > window):
        raise InstabilityError(f"|t| exceeds the window 1/(4 eps) = {window:.4g}")
    logphi = spherical_log_cf(dims, t_arr)
    lhs = np.abs(logphi + 0.5 * t_arr**2)
    rows = tuple(CharBoundRow(float(t), float(l), float(eps * abs(t) ** 3)) for t, l in zip(t_arr, lhs))
    return CharBoundReport(dims, eps, window, rows)


def beta_cf_remainder_integral(n: int, j: int, t: float) -> complex:
    """(i/2) int_{0<t3<t2<t1<T} int_0^j psi_3((n-s)/2 + i t3) ds, T = t / sigma_{n,j}.

    Independent route for log phi_{n,j}(t) + t^2/2: the simplex region is
    collapsed to int_0^T (T - u)^2 / 2 (...) du and both remaining integrals
    are done numerically over complex psi_3.
    """
    sigma = math.sqrt(float(_polygamma(1, (n - j) / 2.0) - _polygamma(1, n / 2.0)))
    T = t / sigma
    xs, ws = np.polynomial.legendre.leggauss(40)
    s_nodes = 0.5 * j * (xs + 1.0)
    s_weights = 0.5 * j * ws

    def inner(u: float) -> complex:
        return complex(np.sum(s_weights * _polygamma(3, (n - s_nodes) / 2.0 + 1j * u)))

    def integrand(u, part):
        v = 0.5 * (T - u) ** 2 * inner(u)
        return v.real if part == 0 else v.imag

    re = integrate.quad(integrand, 0.0, T, args=(0,), epsabs=1e-14, epsrel=1e-12, limit=200)[0]
    im = integrate.quad(integrand, 0.0, T, args=(1,), epsabs=1e-14, epsrel=1e-12, limit=200)[0]
    return 0.5j * complex(re, im)


def beta_log_cf(n: int, j: int, t: float) -> complex:
    """log phi_{n,j}(t) for the standardized log Beta((n-j)/2, j/2) variable."""
    a, c = (n - j) / 2.0, n / 2.0
    sigma = math.sqrt(float(_polygamma(1, a) - _polygamma(1, c)))
    mu = float(_polygamma(0, a) - _polygamma(0, c))
    s = t / sigma
    return complex(
        log_gamma(complex(a, s)) - log_gamma(complex(c, s)) - log_gamma(a) + log_gamma(c) - 1j * s * mu
    )


@dataclass(frozen=True)
class LogGammaCFRow:
    t: float
    analytic: complex
    integral: complex
    empirical: complex | None

    @property
    def integral_gap(self) -> float:
        return abs(self.analytic - self.integral)

    @property
    def empirical_gap(self) -> float | None:
        return None if self.empirical is None else abs(self.analytic - self.empirical)


@dataclass(frozen=True)
class LogGammaCFReport:
    lam: float
    n_samples: int
    rows: tuple[LogGammaCFRow, ...]


def loggamma_cf(lam: float, t) -> np.ndarray:
    """E exp(i t (log W - psi_0(lam)) / sqrt(psi_1(lam))) for W ~ Gamma(lam)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    sd = math.sqrt(float(_polygamma(1, lam)))
    mu = float(_polygamma(0, lam))
    s = t / sd
    return np.exp(log_gamma(lam + 1j * s) - log_gamma(lam) - 1j * s * mu)


def loggamma_cf_integral(lam: float, t: float) -> complex:
    """exp(-t^2/2 - i int_{0<t3<t2<t1<T} psi_2(lam + i t3)), T = t / sqrt(psi_1(lam))."""
    T = t / math.sqrt(float(_polygamma(1, lam)))

    def f(u, part):
        v = 0.5 * (T - u) ** 2 * complex(_polygamma(2, complex(lam, u)))
        return v.real if part == 0 else v.imag

    re = integrate.quad(f, 0.0, T, args=(0,), epsabs=1e-14, epsrel=1e-12, limit=200)[0]
    im = integrate.quad(f, 0.0, T, args=(1,), epsabs=1e-14, epsrel=1e-12, limit=200)[0]
    return complex(np.exp(-0.5 * t * t - 1j * complex(re, im)))


def verify_loggamma_char(
    lam: float, t_values, rng: RngLike | None = None, n_samples: int = 0
) -> LogGammaCFReport:
    """Compare the Gamma-ratio cf with the triple-integral form and, optionally, an empirical cf."""
    if not lam > 0:
        raise DomainError("lambda must be positive")
    t_arr = np.asarray(list(t_values), dtype=float)
    analytic = loggamma_cf(lam, t_arr)
    emp = None
    if rng is not None and n_samples > 0:
        q = sample_log_gamma(lam, as_generator(rng), n_samples)
        q = (q - float(_polygamma(0, lam))) / math.sqrt(float(_polygamma(1, lam)))
        emp = [complex(np.mean(np.exp(1j * t * q))) for t in t_arr]
    rows = tuple(
        LogGammaCFRow(float(t), complex(a), loggamma_cf_integral(lam, float(t)), None if emp is None else emp[i])
        for i, (t, a) in enumerate(zip(t_arr, analytic))
    )
    return LogGammaCFReport(float(lam), int(n_samples if emp is not None else 0), rows)


# ---------------------------------------------------------------------------
# Gaussian comparison.


def ks_composite_bound(epsilon: float, mu: float, mu_t: float, sigma: float, sigma_t: float) -> float:
    """Kolmogorov distance from X to N(mu_t, sigma_t^2) given d_KS((X-mu)/sigma, N(0,1)) <= epsilon.

    epsilon + |mu - mu_t| / max(sigma, sigma_t) + (3/8) |sigma^2 - sigma_t^2| / min(sigma^2, sigma_t^2).
    """
    if not (sigma > 0 and sigma_t > 0):
        raise DomainError("scales must be positive")
    if epsilon < 0:
        raise DomainError("epsilon must be non-negative")
    s2, t2 = sigma * sigma, sigma_t * sigma_t
    return epsilon + abs(mu - mu_t) / max(sigma, sigma_t) + 0.375 * abs(s2 - t2) / min(s2, t2)
