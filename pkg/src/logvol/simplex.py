"""Log-volumes of random simplices and log-determinants of Gaussian matrices.

The simplex spanned by the origin and p random vectors in R^n has volume
sqrt(det Gram) / p!.  For rotationally invariant vectors the log-volume
splits into independent pieces:

    log Vol = -log p! + sum_i log R_i + 1/2 sum_{j=1}^{p-1} log B_j,
    B_j ~ Beta((n - j)/2, j/2),

and for an n x n standard Gaussian matrix

    log|det A| = (n/2) log 2 + 1/2 sum_{j=1}^{n} log G_j,  G_j ~ Gamma(j/2).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, RankDeficiencyError
from .sampling import (
    RngLike,
    ScaledGaussian,
    as_generator,
    sample_log_beta,
    sample_log_gamma,
    sample_sphere_point,
)
from .specfun import _polygamma

_CHUNK_ELEMENTS = 1 << 21


@dataclass(frozen=True)
class SimplexDims:
    n: int
    p: int

    def __post_init__(self):
        if not (isinstance(self.n, (int, np.integer)) and isinstance(self.p, (int, np.integer))):
            raise DomainError("n and p must be integers")
        if not 1 <= self.p <= self.n:
            raise DomainError(f"need 1 <= p <= n, got n={self.n}, p={self.p}")

    @property
    def theta(self) -> float:
        return (self.p - 1) / self.n


@dataclass(frozen=True)
class MomentSummary:
    mean: float
    variance: float
    third_abs_bound: float | None = None

    def __post_init__(self):
        if not self.variance >= 0:
            raise DomainError("variance must be non-negative")


# ---------------------------------------------------------------------------
# Gram determinant route.


def _pivoted_logdet(gram: np.ndarray) -> np.ndarray:
    """log det of a batch of PSD matrices by diagonal-pivoted Cholesky.

    Entries whose pivot falls below 1e3 * eps * max diag are marked NaN.
    """
    a = np.array(gram, dtype=float, copy=True)
    b, p, _ = a.shape
    tol = 1e3 * np.finfo(float).eps * np.max(np.diagonal(a, axis1=1, axis2=2), axis=1)
    # Fast path: plain LAPACK Cholesky when every pivot clears the tolerance.
    try:
        piv = np.diagonal(np.linalg.cholesky(a), axis1=1, axis2=2) ** 2
        if np.all(piv > tol[:, None]):
            return np.sum(np.log(piv), axis=1)
    except np.linalg.LinAlgError:
        pass
    logdet = np.zeros(b)
    bad = np.zeros(b, dtype=bool)
    rows = np.arange(b)
    for k in range(p):
        diag = np.diagonal(a, axis1=1, axis2=2)[:, k:]
        piv = k + np.argmax(diag, axis=1)
        # Symmetric swap of rows/columns k and piv in each matrix.
        if np.any(piv != k):
            perm = np.tile(np.arange(p), (b, 1))
            perm[rows, k] = piv
            perm[rows, piv] = k
            a = np.take_along_axis(a, perm[:, :, None], axis=1)
            a = np.take_along_axis(a, perm[:, None, :], axis=2)
        d = a[:, k, k].copy()
        small = ~(d > tol)
        bad |= small
        d[small] = 1.0
        logdet += np.log(d)
        col = a[:, k + 1:, k] / d[:, None]
        a[:, k + 1:, k + 1:] -= col[:, :, None] * a[:, k, None, k + 1:]
    logdet[bad] = np.nan
    return logdet


def log_volume_gram_batch(vectors) -> np.ndarray:
    """Log-volumes for a batch of shape (batch, p, n); NaN marks degenerate simplices."""
    v = np.asarray(vectors, dtype=float)
    if v.ndim != 3:
        raise DomainError("expected an array of shape (batch, p, n)")
    _, p, n = v.shape
    if not 1 <= p <= n:
        raise DomainError("need 1 <= p <= n")
    gram = v @ np.swapaxes(v, 1, 2)
    return -math.lgamma(p + 1) + 0.5 * _pivoted_logdet(gram)


def log_volume_gram(vectors) -> float:
    """Log-volume of the simplex spanned by 0 and the rows of ``vectors`` (p x n)."""
    v = np.asarray(vectors, dtype=float)
    if v.ndim != 2:
        raise DomainError("expected a (p, n) array of vectors")
    out = float(log_volume_gram_batch(v[None])[0])
    if math.isnan(out):
        raise RankDeficiencyError("vectors are numerically linearly dependent; log-volume is -inf")
    return out


# ---------------------------------------------------------------------------
# Distributional route.


def _rows_per_chunk(width: int) -> int:
    return max(1, _CHUNK_ELEMENTS // max(width, 1))


def _spherical_part(dims: SimplexDims, gen: np.random.Generator, size: int) -> np.ndarray:
    n, p = dims.n, dims.p
    out = np.full(size, -math.lgamma(p + 1))
    if p == 1:
        return out
    j = np.arange(1, p, dtype=float)
    zeta, eta = (n - j) / 2.0, j / 2.0
    step = _rows_per_chunk(p - 1)
    for start in range(0, size, step):
        m = min(step, size - start)
        lb = sample_log_beta(np.broadcast_to(zeta, (m, p - 1)), np.broadcast_to(eta, (m, p - 1)), gen)
        out[start:start + m] += 0.5 * lb.sum(axis=1)
    return out


def sample_logvol_spherical(dims: SimplexDims, rng: RngLike, size=None):
    """Log-volume of the simplex spanned by 0 and p uniform points on S^{n-1}."""
    gen = as_generator(rng)
    k = 1 if size is None else int(size)
    out = _spherical_part(dims, gen, k)
    return float(out[0]) if size is None else out


def sample_logvol_radial(law, dims: SimplexDims, rng: RngLike, size=None):
    """Log-volume for p i.i.d. vectors R_i * Theta_i with log R_i drawn from ``law``."""
    gen = as_generator(rng)
    k = 1 if size is None else int(size)
    out = _spherical_part(dims, gen, k)
    step = _rows_per_chunk(dims.p)
    for start in range(0, k, step):
        m = min(step, k - start)
        lr = np.asarray(law.sample(dims.n, gen, m * dims.p), dtype=float).reshape(m, dims.p)
        out[start:start + m] += lr.sum(axis=1)
    return float(out[0]) if size is None else out


def sample_logvol_direct(law, dims: SimplexDims, rng: RngLike, size: int) -> np.ndarray:
    """Log-volume through explicit vectors and the Gram determinant.

    Much slower than :func:`sample_logvol_radial`; it exists to cross-check
    the distributional identity.
    """
    gen = as_generator(rng)
    n, p = dims.n, dims.p
    out = np.empty(size)
    step = _rows_per_chunk(p * n)
    for start in range(0, size, step):
        m = min(step, size - start)
        if isinstance(law, ScaledGaussian):
            v = gen.standard_normal((m, p, n)) / math.sqrt(n)
        else:
            theta = sample_sphere_point(n, gen, m * p).reshape(m, p, n)
            r = np.exp(np.asarray(law.sample(n, gen, m * p), dtype=float)).reshape(m, p, 1)
            v = r * theta
        out[start:start + m] = log_volume_gram_batch(v)
    return out


def spherical_moments(dims: SimplexDims) -> MomentSummary:
    """Exact mean and variance of the spherical log-volume.

    ``third_abs_bound`` bounds E|S - ES|^3 by (E (S - ES)^4)^(3/4), where the
    fourth central moment is 3 var^2 plus the fourth cumulant.
    """
    n, p = dims.n, dims.p
    mean = -math.lgamma(p + 1)
    if p == 1:
        return MomentSummary(mean, 0.0, 0.0)
    a = (n - np.arange(1, p, dtype=float)) / 2.0
    c = n / 2.0
    mean += 0.5 * float(np.sum(_polygamma(0, a) - _polygamma(0, c)))
    var = 0.25 * float(np.sum(_polygamma(1, a) - _polygamma(1, c)))
    kappa4 = float(np.sum(_polygamma(3, a) - _polygamma(3, c))) / 16.0
    third = (3.0 * var * var + kappa4) ** 0.75
    return MomentSummary(mean, var, third)


def spherical_variance_lower_bounds(dims: SimplexDims) -> tuple[float, float | None]:
    """Closed-form lower bounds on the spherical log-volume variance.

    Returns (fine, rough): fine = 1/2 [-log(1 - theta) - theta (1 + 3/(2n))]
    for every p <= n, and rough = 1/4 (log(1/(1 - theta)) - theta), which is
    only claimed for p >= 7 (None otherwise).
    """
    n, th = dims.n, dims.theta
    fine = 0.5 * (-math.log1p(-th) - th * (1.0 + 1.5 / n))
    rough = 0.25 * (-math.log1p(-th) - th) if dims.p >= 7 else None
    return fine, rough


def radial_moments(law, dims: SimplexDims) -> MomentSummary:
    """Mean and variance of the log-volume for a radial law with finite variance."""
    sph = spherical_moments(dims)
    m, v = law.moments(dims.n)
    return MomentSummary(sph.mean + dims.p * m, sph.variance + dims.p * v)


# ---------------------------------------------------------------------------
# Gaussian determinants.


def goodman_sample_logdet(n: int, rng: RngLike, size=None, paired: bool = False):
    """log|det A| for an n x n standard Gaussian matrix.

    With ``paired=True`` the shapes j/2 are combined two at a time through
    2 sqrt(X Y) ~ Gamma(2a) for X ~ Gamma(a), Y ~ Gamma(a + 1/2), which halves
    the number of gamma draws and leaves the distribution unchanged.
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise DomainError("n must be a positive integer")
    gen = as_generator(rng)
    k = 1 if size is None else int(size)
    if paired:
        # Pairs (j, j+1) = (2i-1, 2i) give log G_{2i-1} - log 2 per pair.
        shapes = np.arange(1, n // 2 + 1, dtype=float) * 2.0 - 1.0
        const = 0.5 * n * math.log(2.0) - (n // 2) * math.log(2.0)
        half_weight = 1.0
        if n % 2:
            shapes = np.append(shapes, n / 2.0)
    else:
        shapes = np.arange(1, n + 1, dtype=float) / 2.0
        const = 0.5 * n * math.log(2.0)
        half_weight = 0.5
    weights = np.full(shapes.size, half_weight)
    if paired and n % 2:
        weights[-1] = 0.5
    out = np.full(k, const)
    step = _rows_per_chunk(shapes.size)
    for start in range(0, k, step):
        m = min(step, k - start)
        lg = sample_log_gamma(np.broadcast_to(shapes, (m, shapes.size)), gen)
        out[start:start + m] += lg @ weights
    return float(out[0]) if size is None else out


def gaussian_logdet_moments(n: int) -> MomentSummary:
    """Exact mean and variance of log|det A| for an n x n Gaussian matrix."""
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise DomainError("n must be a positive integer")
    a = np.arange(1, n + 1, dtype=float) / 2.0
    mean = 0.5 * n * math.log(2.0) + 0.5 * float(np.sum(_polygamma(0, a)))
    var = 0.25 * float(np.sum(_polygamma(1, a)))
    return MomentSummary(mean, var)


def gaussian_logdet_moment_table(n_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact means and variances of log|det A_n| for n = 1..n_max."""
    a = np.arange(1, n_max + 1, dtype=float) / 2.0
    n = np.arange(1, n_max + 1, dtype=float)
    means = 0.5 * n * math.log(2.0) + 0.5 * np.cumsum(_polygamma(0, a))
    variances = 0.25 * np.cumsum(_polygamma(1, a))
    return means, variances


# ---------------------------------------------------------------------------
# Batch output.


@dataclass
class LogVolumeBatch:
    dims: SimplexDims
    law: str
    seed: int
    values: np.ndarray

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("n,p,law,seed,value\n")
        for v in self.values:
            buf.write(f"{self.dims.n},{self.dims.p},{self.law},{self.seed},{float(v)!r}\n")
        return buf.getvalue()
