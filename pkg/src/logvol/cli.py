"""Command-line driver.

Precedence for every setting: command-line flag, then the ``--config`` JSON
document, then the experiment defaults.  Exit codes: 0 on success, 2 on a
configuration or domain error, 3 on a numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import asymptotics as asy
from . import limits as lim
from .errors import (
    ConfigError,
    DomainError,
    InstabilityError,
    InversionError,
    LogVolError,
)
from .experiments import EXPERIMENTS, Table, parse_law
from .sampling import RngStream
from .simplex import SimplexDims, gaussian_logdet_moments, radial_moments
from .stats import ks_one_sample, ks_two_sample, normal_cdf

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _plain(v):
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer, bool)):
        return int(v)
    return v


def _cell(v) -> str:
    v = _plain(v)
    return repr(v) if isinstance(v, float) else str(v)


def render(table: Table, header: dict, fmt: str) -> str:
    """Serialize a table with a header block.  No timestamps, so reruns are byte-identical."""
    if fmt == "json":
        doc = {
            "header": header,
            "columns": table.columns,
            "rows": [[_plain(v) for v in row] for row in table.rows],
            "notes": table.notes,
        }
        return json.dumps(doc, sort_keys=True, indent=1) + "\n"
    buf = io.StringIO()
    for key in ("version", "experiment", "exercises"):
        if key in header:
            buf.write(f"# {key}: {header[key]}\r\n")
    buf.write(f"# config: {json.dumps(header.get('config', {}), sort_keys=True)}\r\n")
    for key, val in sorted(table.notes.items()):
        buf.write(f"# {key}: {val}\r\n")
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return doc


def _merge(defaults: dict, config: dict, flags: dict) -> dict:
    out = dict(defaults)
    out.update(config)
    out.update({k: v for k, v in flags.items() if v is not None})
    return out


def _check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    return seed


# ---------------------------------------------------------------------------
# Subcommands


def cmd_simulate(args, config: dict) -> tuple[Table, dict]:
    name = args.experiment or config.get("experiment")
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}; choose from {sorted(EXPERIMENTS)}")
    exp = EXPERIMENTS[name]
    params = _merge(
        {**exp.defaults, "seed": 0},
        {k: v for k, v in config.items() if k not in ("experiment", "out", "format", "workers")},
        {"seed": args.seed, "samples": args.samples},
    )
    if "samples" in params:
        params["samples"] = int(params["samples"])
        if params["samples"] < 1:
            raise ConfigError("samples must be at least 1")
    seed = _check_seed(params["seed"])
    table = exp.run(params, RngStream(seed, 0), args.workers or int(config.get("workers", 1)))
    header = {"version": __version__, "experiment": name, "exercises": exp.exercises, "config": params}
    return table, header


def _dims_from(args, config) -> SimplexDims:
    n = args.n if args.n is not None else config.get("n")
    p = args.p if args.p is not None else config.get("p")
    if n is None or p is None:
        raise ConfigError("both n and p are required")
    return SimplexDims(int(n), int(p))


def cmd_moments(args, config) -> tuple[Table, dict]:
    if args.gaussian_det:
        rows = []
        for n in args.gaussian_det:
            m = gaussian_logdet_moments(int(n))
            rows.append([int(n), m.mean, m.variance])
        table = Table(["n", "mean", "variance"], rows)
        exercises = "exact mean and variance of the Gaussian log-determinant"
    else:
        d = _dims_from(args, config)
        law = parse_law(args.law or config.get("law", "spherical"))
        m = radial_moments(law, d)
        table = Table(["n", "p", "law", "mean", "variance"], [[d.n, d.p, law.kind, m.mean, m.variance]])
        exercises = "exact mean and variance of the simplex log-volume"
    return table, {"version": __version__, "experiment": "moments", "exercises": exercises, "config": vars_clean(args)}


def cmd_bounds(args, config) -> tuple[Table, dict]:
    d = _dims_from(args, config)
    rows = []
    for form in ("main", "capped_theta", "codimension"):
        rep = asy.spherical_ks_bound(d, form)
        rows.append([d.n, d.p, form, rep.epsilon_np, rep.ks_bound, int(rep.applicable), rep.reason or ""])
    table = Table(["n", "p", "form", "epsilon", "ks_bound", "applicable", "reason"], rows)
    header = {"version": __version__, "experiment": "bounds",
              "exercises": "Kolmogorov distance bounds for the spherical log-volume", "config": vars_clean(args)}
    return table, header


def cmd_constants(args, config) -> tuple[Table, dict]:
    uc = asy.universal_constants()
    table = Table(["name", "value"], [["c0", uc.c0], ["c1", uc.c1], ["c1_display", uc.c1_display],
                                      ["quadrature_error", uc.quadrature_error]])
    header = {"version": __version__, "experiment": "constants",
              "exercises": "constants in the Gaussian log-determinant mean and variance expansions", "config": {}}
    return table, header


def cmd_limits(args, config) -> tuple[Table, dict]:
    d = _dims_from(args, config)
    law = parse_law(args.law or config.get("law", "gaussian"))
    regime = args.regime or config.get("regime", "normal")
    if regime == "normal":
        sigma = args.sigma or lim.propose_sigma_normal(law, d)
        cs = lim.centering_normal(law, d, sigma)
    elif regime == "stable":
        sigma = args.sigma or lim.pareto_sigma(law, d.p)
        cs = lim.centering_stable(law, d, sigma)
    else:
        raise ConfigError(f"unknown regime {regime!r}")
    table = Table(["n", "p", "law", "regime", "sigma_n", "b_n", "a_n", "c_n", "omega_n_sq"],
                  [[d.n, d.p, law.kind, regime, cs.sigma_n, cs.b_n, cs.a_n, cs.c_n, cs.omega_n_sq]])
    header = {"version": __version__, "experiment": "limits",
              "exercises": "centering and scaling sequences for the log-volume limit laws", "config": vars_clean(args)}
    return table, header


def _read_values(path: str) -> np.ndarray:
    try:
        lines = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    reader = csv.DictReader(lines)
    if reader.fieldnames is None or "value" not in reader.fieldnames:
        raise ConfigError(f"{path} has no 'value' column")
    return np.array([float(r["value"]) for r in reader])


def cmd_ks(args, config) -> tuple[Table, dict]:
    a = _read_values(args.input)
    if args.reference:
        r = ks_two_sample(a, _read_values(args.reference))
        against = "two-sample"
    else:
        r = ks_one_sample(a, normal_cdf)
        against = "standard normal"
    table = Table(["against", "statistic", "n_samples", "crit_1pct", "mc_halfwidth_95"],
                  [[against, r.statistic, r.n_samples, r.crit_1pct, r.mc_halfwidth_95]])
    header = {"version": __version__, "experiment": "ks",
              "exercises": "Kolmogorov-Smirnov distance of a sample", "config": vars_clean(args)}
    return table, header


def vars_clean(args) -> dict:
    skip = {"func", "out", "format", "workers", "config", "command"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip and v is not None}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="logvol", description="Log-volumes of random simplices: experiments and exact formulas.")
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH")
    common.add_argument("--seed", type=int)
    common.add_argument("--samples", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--out", metavar="PATH")
    common.add_argument("--format", choices=["csv", "json"])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="run a registered experiment")
    p.add_argument("experiment", nargs="?", help=", ".join(sorted(EXPERIMENTS)))
    p.set_defaults(func=cmd_simulate)

    for name, func, help_ in (
        ("moments", cmd_moments, "exact log-volume or log-determinant moments"),
        ("bounds", cmd_bounds, "Kolmogorov distance bounds"),
        ("limits", cmd_limits, "centering sequences for the limit laws"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("-n", type=int)
        p.add_argument("-p", type=int)
        p.add_argument("--law")
        if name == "moments":
            p.add_argument("--gaussian-det", type=int, nargs="+", metavar="N")
        if name == "limits":
            p.add_argument("--regime", choices=["normal", "stable"])
            p.add_argument("--sigma", type=float)
        p.set_defaults(func=func)

    p = sub.add_parser("constants", parents=[common], help="universal constants c0 and c1")
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("ks", parents=[common], help="KS distance of a CSV sample")
    p.add_argument("input", help="CSV file with a 'value' column")
    p.add_argument("--reference", help="second CSV sample for a two-sample test")
    p.set_defaults(func=cmd_ks)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        table, header = args.func(args, config)
        fmt = args.format or config.get("format", "csv")
        if fmt not in ("csv", "json"):
            raise ConfigError(f"unknown format {fmt!r}")
        text = render(table, header, fmt)
        out = args.out or config.get("out")
        if out:
            Path(out).write_text(text, newline="")
        else:
            sys.stdout.write(text)
    except (ConfigError, DomainError, TypeError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InstabilityError, InversionError, LogVolError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
