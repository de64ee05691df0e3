"""Log-gamma, polygamma and moments of log-beta variables.

All kernels accept scalars or numpy arrays, real or complex, with Re z > 0.
Small arguments are shifted upward with the recurrence and then evaluated
with the Bernoulli asymptotic series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import CombinatorialLimitError, DomainError, UnsupportedOrderError

ComplexValue = complex

MAX_PUBLIC_ORDER = 6
MAX_MOMENT_ORDER = 12
# Partition sums of order k call polygamma up to order k - 1.
MAX_INTERNAL_ORDER = MAX_MOMENT_ORDER - 1

_N_BERNOULLI = 14


def _bernoulli_numbers(count: int) -> list[float]:
    """B_2, B_4, ..., B_{2*count} via the Akiyama-Tanigawa algorithm."""
    m_max = 2 * count
    a = [Fraction(0)] * (m_max + 1)
    out = {}
    for m in range(m_max + 1):
        a[m] = Fraction(1, m + 1)
        for j in range(m, 0, -1):
            a[j - 1] = j * (a[j - 1] - a[j])
        out[m] = a[0]
    return [float(out[2 * j]) for j in range(1, count + 1)]


_B2J = _bernoulli_numbers(_N_BERNOULLI)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _shift_threshold(k: int) -> float:
    # The asymptotic series for order k loses accuracy roughly like (k / |z|)^j,
    # so higher orders are pushed further out before the series is applied.
    return 12.0 + 2.0 * k


def _as_complex_or_real(z):
    arr = np.asarray(z)
    if np.iscomplexobj(arr):
        return arr.astype(np.complex128), True
    return arr.astype(np.float64), False


def _check_right_half_plane(arr) -> None:
    re = np.real(arr)
    if np.any(~np.isfinite(re)) or np.any(re <= 0):
        raise DomainError("argument must have a finite, strictly positive real part")


def _return(arr, scalar_in: bool, is_complex: bool):
    if scalar_in:
        v = arr.reshape(()).item()
        return complex(v) if is_complex else float(v)
    return arr


def _log_gamma_array(z, is_complex: bool):
    threshold = _shift_threshold(0)
    z = z.copy()
    # Accumulate log of the shift product as log-modulus plus summed arguments,
    # which keeps the imaginary part on the continuous branch.
    log_mod = np.zeros(z.shape)
    arg_sum = np.zeros(z.shape)
    while True:
        small = np.real(z) < threshold
        if not small.any():
            break
        zs = z[small]
        log_mod[small] += np.log(np.abs(zs))
        if is_complex:
            arg_sum[small] += np.angle(zs)
        z[small] = zs + 1.0
    inv = 1.0 / z
    inv2 = inv * inv
    series = np.zeros_like(z)
    power = inv.copy()
    for j, b in enumerate(_B2J[:10], start=1):
        series = series + b / (2 * j * (2 * j - 1)) * power
        power = power * inv2
    out = (z - 0.5) * np.log(z) - z + _HALF_LOG_2PI + series
    if is_complex:
        return out - (log_mod + 1j * arg_sum)
    return out - log_mod


def log_gamma(z):
    """Continuous-branch log Gamma for Re z > 0.

    For real positive input this is the ordinary real log-gamma.  For complex
    input the imaginary part is the continuous branch (not reduced mod 2*pi),
    matching ``scipy.special.loggamma``.
    """
    scalar_in = np.ndim(z) == 0
    arr, is_complex = _as_complex_or_real(z)
    _check_right_half_plane(arr)
    out = _log_gamma_array(np.atleast_1d(arr), is_complex)
    return _return(out, scalar_in, is_complex)


def _polygamma_array(k: int, z, is_complex: bool):
    threshold = _shift_threshold(k)
    z = z.copy()
    acc = np.zeros_like(z)
    # psi_k(z) = psi_k(z + 1) - (-1)^k k! / z^(k+1)
    coef = -((-1.0) ** k) * math.factorial(k)
    while True:
        small = np.real(z) < threshold
        if not small.any():
            break
        zs = z[small]
        acc[small] += coef / zs ** (k + 1)
        z[small] = zs + 1.0
    inv = 1.0 / z
    inv2 = inv * inv
    if k == 0:
        series = np.zeros_like(z)
        power = inv2.copy()
        for j, b in enumerate(_B2J, start=1):
            series = series + b / (2 * j) * power
            power = power * inv2
        out = np.log(z) - 0.5 * inv - series
    else:
        sign = (-1.0) ** (k + 1)
        inv_k = inv ** k
        body = math.factorial(k - 1) * inv_k + 0.5 * math.factorial(k) * inv_k * inv
        power = inv_k * inv2
        for j, b in enumerate(_B2J, start=1):
            c = b * math.factorial(2 * j + k - 1) / math.factorial(2 * j)
            body = body + c * power
            power = power * inv2
        out = sign * body
    return out + acc


def _polygamma(k: int, z):
    """Polygamma without the public order cap; used by the moment sums."""
    if not 0 <= k <= MAX_INTERNAL_ORDER:
        raise UnsupportedOrderError(f"polygamma order {k} outside [0, {MAX_INTERNAL_ORDER}]")
    scalar_in = np.ndim(z) == 0
    arr, is_complex = _as_complex_or_real(z)
    _check_right_half_plane(arr)
    out = _polygamma_array(k, np.atleast_1d(arr), is_complex)
    return _return(out, scalar_in, is_complex)


def polygamma(k: int, z):
    """psi_k(z), the (k+1)-th derivative of log Gamma, for 0 <= k <= 6."""
    if not isinstance(k, (int, np.integer)) or not 0 <= k <= MAX_PUBLIC_ORDER:
        raise UnsupportedOrderError(f"polygamma order must be an integer in [0, {MAX_PUBLIC_ORDER}]")
    return _polygamma(int(k), z)


def digamma(z):
    return _polygamma(0, z)


def trigamma(z):
    return _polygamma(1, z)


# ---------------------------------------------------------------------------
# Partition sums for moments of log-beta variables.


@lru_cache(maxsize=None)
def integer_partitions(k: int) -> tuple[tuple[int, ...], ...]:
    """All integer partitions of k as non-increasing tuples."""
    if k == 0:
        return ((),)
    out = []

    def rec(remaining, largest, prefix):
        if remaining == 0:
            out.append(tuple(prefix))
            return
        for part in range(min(remaining, largest), 0, -1):
            prefix.append(part)
            rec(remaining - part, part, prefix)
            prefix.pop()

    rec(k, k, [])
    return tuple(out)


def _set_partitions_with_shape(shape: tuple[int, ...]) -> int:
    """Number of set partitions of {1..k} whose block sizes form ``shape``."""
    k = sum(shape)
    count = math.factorial(k)
    for s in shape:
        count //= math.factorial(s)
    for s in set(shape):
        count //= math.factorial(shape.count(s))
    return count


@lru_cache(maxsize=None)
def partition_shapes(k: int, singleton_free: bool = False) -> tuple[tuple[tuple[int, ...], int], ...]:
    """Pairs (block sizes, number of set partitions with those sizes)."""
    shapes = []
    for shape in integer_partitions(k):
        if singleton_free and 1 in shape:
            continue
        shapes.append((shape, _set_partitions_with_shape(shape)))
    return tuple(shapes)


def set_partition_count(k: int, singleton_free: bool = False) -> int:
    """Bell number of k, or the number of singleton-free set partitions."""
    return sum(c for _, c in partition_shapes(k, singleton_free))


@dataclass(frozen=True)
class PartitionMoment:
    order: int
    central: bool
    value: float


def _check_moment_args(k, zeta, eta) -> None:
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise DomainError("moment order must be a positive integer")
    if k > MAX_MOMENT_ORDER:
        raise CombinatorialLimitError(f"moment order {k} exceeds {MAX_MOMENT_ORDER}")
    for name, v in (("zeta", zeta), ("eta", eta)):
        if not (np.isfinite(v) and v > 0):
            raise DomainError(f"{name} must be finite and positive")


def _cumulant_terms(k: int, zeta: float, eta: float) -> list[float]:
    """q_j = psi_{j-1}(zeta) - psi_{j-1}(zeta + eta) for j = 1..k."""
    return [
        float(_polygamma(j - 1, zeta) - _polygamma(j - 1, zeta + eta)) for j in range(1, k + 1)
    ]


def _partition_sum(k: int, q: list[float], singleton_free: bool) -> float:
    total = 0.0
    for shape, count in partition_shapes(k, singleton_free):
        term = float(count)
        for s in shape:
            term *= q[s - 1]
        total += term
    return total


def log_beta_moment(k: int, zeta: float, eta: float) -> PartitionMoment:
    """E[(log B)^k] for B ~ Beta(zeta, eta)."""
    _check_moment_args(k, zeta, eta)
    q = _cumulant_terms(k, zeta, eta)
    return PartitionMoment(order=int(k), central=False, value=_partition_sum(k, q, False))


def log_beta_central_moment(k: int, zeta: float, eta: float) -> PartitionMoment:
    """E[(log B - E log B)^k] for B ~ Beta(zeta, eta)."""
    _check_moment_args(k, zeta, eta)
    q = _cumulant_terms(k, zeta, eta)
    return PartitionMoment(order=int(k), central=True, value=_partition_sum(k, q, True))


def log_beta_cumulant(k: int, zeta: float, eta: float) -> float:
    """k-th cumulant of log B, i.e. psi_{k-1}(zeta) - psi_{k-1}(zeta + eta)."""
    _check_moment_args(k, zeta, eta)
    return _cumulant_terms(k, zeta, eta)[-1]
