"""Named experiments producing deterministic data tables.

Each experiment takes a parameter dict and returns a :class:`Table`.  All
random draws go through :func:`logvol.sampling.generate_blocks`, so results
depend on the seed only, not on the number of workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from typing import Callable

import numpy as np

from . import asymptotics as asy
from . import limits as lim
from .errors import ConfigError
from .sampling import (
    BetaPrime,
    ParetoLogRadius,
    RngStream,
    ScaledGaussian,
    SphericalUnit,
    generate_blocks,
)
from .simplex import (
    SimplexDims,
    goodman_sample_logdet,
    gaussian_logdet_moments,
    log_volume_gram_batch,
    radial_moments,
    sample_logvol_direct,
    sample_logvol_radial,
    sample_logvol_spherical,
    spherical_moments,
)
from .stats import ks_one_sample, ks_two_sample, normal_cdf


@dataclass
class Table:
    columns: list[str]
    rows: list[list]
    notes: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Experiment:
    name: str
    exercises: str
    run: Callable[[dict, RngStream, int], Table]
    defaults: dict


def parse_law(spec: str):
    """'spherical', 'gaussian', 'betaprime:PHI' or 'pareto:ALPHA[:SCALE[:SIDE]]'."""
    parts = str(spec).split(":")
    kind = parts[0]
    try:
        if kind == "spherical":
            return SphericalUnit()
        if kind == "gaussian":
            return ScaledGaussian()
        if kind == "betaprime":
            return BetaPrime(float(parts[1]))
        if kind == "pareto":
            alpha = float(parts[1])
            scale = float(parts[2]) if len(parts) > 2 else 1.0
            side = parts[3] if len(parts) > 3 else "upper"
            return ParetoLogRadius(alpha, scale, side)
    except (IndexError, ValueError) as exc:
        raise ConfigError(f"bad law spec {spec!r}: {exc}") from exc
    raise ConfigError(f"unknown law {spec!r}")


# Module-level draw functions so that worker processes can unpickle them.


def _draw_spherical(dims: SimplexDims, gen, size):
    return sample_logvol_spherical(dims, gen, size)


def _draw_radial(law, dims: SimplexDims, gen, size):
    return sample_logvol_radial(law, dims, gen, size)


def _draw_direct(law, dims: SimplexDims, gen, size):
    return sample_logvol_direct(law, dims, gen, size)


def _draw_goodman(n: int, paired: bool, gen, size):
    return goodman_sample_logdet(n, gen, size, paired=paired)


def _draw_det_direct(n: int, gen, size):
    out = np.empty(size)
    step = max(1, (1 << 20) // (n * n))
    for start in range(0, size, step):
        m = min(step, size - start)
        _, logabs = np.linalg.slogdet(gen.standard_normal((m, n, n)))
        out[start:start + m] = logabs
    return out


def _draw_t_layout(dims: SimplexDims, dof: float, layout: str, gen, size):
    """Log-volumes when the p vectors (layout='vectors') or the n coordinate
    slices (layout='coordinates') are multivariate t with ``dof`` degrees of freedom."""
    n, p = dims.n, dims.p
    out = np.empty(size)
    for i in range(size):
        z = gen.standard_normal((p, n))
        if layout == "vectors":
            w = gen.chisquare(dof, size=(p, 1))
        else:
            w = gen.chisquare(dof, size=(1, n))
        out[i] = log_volume_gram_batch((z / np.sqrt(w / dof))[None])[0]
    return out


def _dims(params) -> SimplexDims:
    return SimplexDims(int(params["n"]), int(params["p"]))


def _dims_grid(params) -> list[SimplexDims]:
    return [SimplexDims(int(n), int(p)) for n, p in params["grid"]]


# ---------------------------------------------------------------------------


def run_miles(params, stream, workers) -> Table:
    rows = []
    for k, d in enumerate(_dims_grid(params)):
        a = generate_blocks(partial(_draw_direct, SphericalUnit(), d), params["samples"], stream.child(2 * k), workers)
        b = generate_blocks(partial(_draw_spherical, d), params["samples"], stream.child(2 * k + 1), workers)
        r = ks_two_sample(a, b)
        rows.append([d.n, d.p, r.statistic, r.crit_1pct, int(not r.rejects_at_1pct)])
    return Table(["n", "p", "ks", "crit_1pct", "pass"], rows)


def run_goodman(params, stream, workers) -> Table:
    rows = []
    for k, n in enumerate(params["n_values"]):
        n = int(n)
        a = generate_blocks(partial(_draw_det_direct, n), params["samples"], stream.child(2 * k), workers)
        b = generate_blocks(partial(_draw_goodman, n, False), params["samples"], stream.child(2 * k + 1), workers)
        r = ks_two_sample(a, b)
        rows.append([n, r.statistic, r.crit_1pct, int(not r.rejects_at_1pct)])
    return Table(["n", "ks", "crit_1pct", "pass"], rows)


def _standardized_spherical(d: SimplexDims, samples: int, stream, workers) -> np.ndarray:
    m = spherical_moments(d)
    x = generate_blocks(partial(_draw_spherical, d), samples, stream, workers)
    return (x - m.mean) / math.sqrt(m.variance)


def run_spherical_scan(params, stream, workers) -> Table:
    rows = []
    theta = float(params["theta"])
    for k, n in enumerate(params["n_values"]):
        n = int(n)
        p = min(n, max(2, int(round(theta * n)) + 1))
        d = SimplexDims(n, p)
        z = _standardized_spherical(d, params["samples"], stream.child(k), workers)
        dks = ks_one_sample(z, normal_cdf).statistic
        rep = asy.spherical_ks_bound(d)
        rows.append([n, p, d.theta, dks, rep.ks_bound, dks / rep.ks_bound, int(rep.applicable)])
    return Table(["n", "p", "theta", "d_ks", "ks_bound", "ratio", "applicable"], rows)


def run_histogram_radial(params, stream, workers) -> Table:
    d = _dims(params)
    rows = []
    for k, law in enumerate((SphericalUnit(), ScaledGaussian())):
        m = radial_moments(law, d)
        x = generate_blocks(partial(_draw_radial, law, d), params["samples"], stream.child(k), workers)
        z = (x - m.mean) / math.sqrt(m.variance)
        rows += [[law.kind, i, float(v)] for i, v in enumerate(z)]
    return Table(["law", "index", "value"], rows, {"standardization": "exact mean and variance"})


def run_histogram_t(params, stream, workers) -> Table:
    d = _dims(params)
    rows = []
    for k, layout in enumerate(("vectors", "coordinates")):
        fn = partial(_draw_t_layout, d, float(params["dof"]), layout)
        x = generate_blocks(fn, params["samples"], stream.child(k), workers, block_size=64)
        z = (x - x.mean()) / x.std(ddof=1)
        rows += [[layout, i, float(v)] for i, v in enumerate(z)]
    return Table(["t_layout", "index", "value"], rows, {"standardization": "sample mean and sd"})


def run_gaussian_det(params, stream, workers) -> Table:
    results = []
    for k, n in enumerate(params["n_values"]):
        n = int(n)
        m = gaussian_logdet_moments(n)
        x = generate_blocks(partial(_draw_goodman, n, True), params["samples"], stream.child(k), workers)
        z = (x - m.mean) / math.sqrt(m.variance)
        results.append((n, ks_one_sample(z, normal_cdf).statistic))
    n0, d0 = results[0]
    const = d0 * math.log(n0) ** 1.5
    rows = [[n, dks, const / math.log(n) ** 1.5, dks * math.log(n) ** 1.5] for n, dks in results]
    return Table(["n", "d_ks", "reference", "d_ks_times_log15"], rows,
                 {"reference": "C / log(n)^1.5 with C matched at the smallest n"})


def run_char_bound(params, stream, workers) -> Table:
    rows = []
    for d in _dims_grid(params):
        for label, c in (("stated", asy.CHAR_CONSTANT_STATED), ("rigorous", asy.CHAR_CONSTANT_RIGOROUS)):
            eps = asy.epsilon_np(d, c)
            ts = [t for t in params["t_values"] if abs(t) <= 1 / (4 * eps)]
            rep = asy.verify_char_bound(d, ts, c)
            rows += [[d.n, d.p, label, r.t, r.lhs, r.bound, int(r.violation <= 0)] for r in rep.rows]
    return Table(["n", "p", "constant", "t", "lhs", "bound", "holds"], rows)


def _limit_row(y, cdf, extra) -> list:
    r = ks_one_sample(y, cdf)
    return extra + [r.statistic, r.mc_halfwidth_95]


def run_normal_limit(params, stream, workers) -> Table:
    d = _dims(params)
    law = parse_law(params["law"])
    sigma = lim.propose_sigma_normal(law, d)
    cs = lim.centering_normal(law, d, sigma)
    rep = lim.check_normal_conditions(law, d, sigma)
    x = generate_blocks(partial(_draw_radial, law, d), params["samples"], stream, workers)
    y = (x - cs.b_n) / cs.sigma_n
    row = _limit_row(y, normal_cdf, [d.n, d.p, cs.sigma_n, cs.b_n, rep.condition1, max(rep.condition2.values())])
    return Table(["n", "p", "sigma_n", "b_n", "condition1", "condition2", "ks", "mc_halfwidth"], [row])


def run_stable_limit(params, stream, workers) -> Table:
    d = _dims(params)
    law = parse_law(params["law"])
    if not isinstance(law, ParetoLogRadius):
        raise ConfigError("the stable-limit experiment needs a pareto law")
    sigma = lim.pareto_sigma(law, d.p)
    cs = lim.centering_stable(law, d, sigma)
    sp = lim.pareto_stable_params(law, d.p, sigma)
    x = generate_blocks(partial(_draw_radial, law, d), params["samples"], stream, workers)
    y = (x - cs.b_n) / cs.sigma_n
    row = _limit_row(y, lim.stable_cdf_table(sp), [d.n, d.p, sp.alpha, sp.c1, sp.c2, sp.gamma_shift, cs.sigma_n, cs.b_n])
    return Table(["n", "p", "alpha", "c1", "c2", "drift", "sigma_n", "b_n", "ks", "mc_halfwidth"], [row])


def mixed_limit_law(dims: SimplexDims, alpha: float) -> ParetoLogRadius:
    """Symmetric Pareto log-radius whose stable scale matches omega_n, so q = 1."""
    omega = math.sqrt(asy.omega_sq(dims))
    return ParetoLogRadius(alpha, omega * dims.p ** (-1.0 / alpha), "symmetric")


def run_mixed_limit(params, stream, workers) -> Table:
    d = _dims(params)
    law = mixed_limit_law(d, float(params["alpha"]))
    sigma = lim.pareto_sigma(law, d.p)
    q = math.sqrt(asy.omega_sq(d)) / sigma
    cs = lim.centering_stable(law, d, sigma)
    sp = lim.pareto_stable_params(law, d.p, sigma)
    x = generate_blocks(partial(_draw_radial, law, d), params["samples"], stream, workers)
    y = (x - cs.b_n) / cs.sigma_n
    row = _limit_row(y, lim.stable_cdf_table(sp, q=round(q, 12)), [d.n, d.p, sp.alpha, q, cs.sigma_n, cs.b_n])
    return Table(["n", "p", "alpha", "q", "sigma_n", "b_n", "ks", "mc_halfwidth"], [row])


EXPERIMENTS: dict[str, Experiment] = {
    e.name: e
    for e in [
        Experiment("miles", "Gram determinant vs beta-product representation of spherical log-volumes",
                   run_miles, {"grid": [[4, 2], [6, 4], [8, 8]], "samples": 10000}),
        Experiment("goodman", "Gaussian |det| vs product-of-gammas representation",
                   run_goodman, {"n_values": [1, 2, 3, 5], "samples": 10000}),
        Experiment("spherical-ks-scan", "spherical log-volume Berry-Esseen bound (C=28)",
                   run_spherical_scan, {"n_values": list(range(100, 1001, 100)), "theta": 0.5, "samples": 10000}),
        Experiment("histogram-radial", "standardized log-volumes, spherical and Gaussian vectors",
                   run_histogram_radial, {"n": 1000, "p": 300, "samples": 400}),
        Experiment("histogram-t", "multivariate-t vectors vs multivariate-t coordinate slices",
                   run_histogram_t, {"n": 1000, "p": 300, "samples": 300, "dof": 60}),
        Experiment("gaussian-det-ks", "normal approximation of Gaussian log-determinants at rate log(n)^-1.5",
                   run_gaussian_det, {"n_values": [100, 1000, 10000, 100000, 1000000], "samples": 2000}),
        Experiment("char-bound", "cubic bound on the log characteristic function of the spherical log-volume",
                   run_char_bound, {"grid": [[50, 20], [200, 100], [500, 400]], "t_values": [0.25, 0.5, 1, 2, 4]}),
        Experiment("normal-limit", "normal limit under truncated-variance conditions",
                   run_normal_limit, {"n": 1000, "p": 300, "law": "gaussian", "samples": 10000}),
        Experiment("stable-limit", "alpha-stable limit for Pareto-tailed log-radii",
                   run_stable_limit, {"n": 20000, "p": 10000, "law": "pareto:1.5", "samples": 10000}),
        Experiment("mixed-limit", "normal plus alpha-stable limit when both parts have the same scale",
                   run_mixed_limit, {"n": 10000, "p": 5000, "alpha": 1.5, "samples": 10000}),
    ]
}
