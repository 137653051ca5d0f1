"""Command-line front end: seeded, parallel experiments written as CSV (+ SVG).

Exit codes: 0 success, 2 configuration error, 3 an internal assertion failed
(details in ``<command>-<family>-<seed>-failures.json``), 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bounds, svg
from .assumptions import table1_report
from .core import DomainError, check_mean
from .estimators import Dataset, PriorHyper, map_estimate, smd_run, smd_run_primal
from .families import GammaKnownShapeFamily, GaussianCovarianceFamily, QuadraticFamily, get_family
from .parallel import stream
from .risk import Estimator, bias_variance_mc, prior_landscape, risk_curve

EXIT_OK, EXIT_CONFIG, EXIT_ASSERT, EXIT_IO = 0, 2, 3, 4
SMD_FAMILIES = ("quadratic", "gaussian-variance", "full-gaussian-1d", "categorical:3", "gaussian-cov:2")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    command: str
    family: str
    mu_star: np.ndarray
    n0: float
    mu0: np.ndarray | None
    n_grid: list
    trials: int
    seed: int
    workers: int = 1
    out: Path = Path(".")
    emit: tuple = ("csv", "svg")
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("--trials must be at least 1")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ConfigError("--n-grid must be strictly increasing")

    @property
    def stem(self):
        return f"{self.command}-{self.family.replace(':', '_')}-{self.seed}"


# --- parsing -----------------------------------------------------------------

def parse_n_grid(spec):
    """'1,2,5' (list), 'a:b' (inclusive range) or 'a:b:count' (log-spaced integers)."""
    try:
        if ":" in spec:
            parts = [float(p) for p in spec.split(":")]
            if len(parts) == 2:
                grid = list(range(int(parts[0]), int(parts[1]) + 1))
            elif len(parts) == 3:
                raw = np.geomspace(parts[0], parts[1], int(parts[2]))
                grid = sorted({int(round(v)) for v in raw})
            else:
                raise ValueError(spec)
        else:
            grid = [int(p) for p in spec.split(",") if p.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse n grid {spec!r}") from None
    if not grid or grid[0] < 0:
        raise ConfigError(f"empty or negative n grid {spec!r}")
    return grid


def _vector(text):
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise ConfigError(f"cannot parse vector {text!r}") from None


_DEFAULTS = {
    "risk-curve": dict(family="gaussian-variance", n_grid="1:100", trials=100_000),
    "bias-variance": dict(family="full-gaussian-1d", mu_star="0,1", mu0="1,2", n_grid="1:100", trials=100_000),
    "prior-landscape": dict(family="gaussian-variance", n_grid="1,5,10", trials=10_000),
    "smd-check": dict(family="all", n_grid="50", trials=100),
    "table1": dict(family="gaussian-variance", n_grid="1", trials=20_000),
    "bounds-table": dict(family="gaussian-variance", n_grid="1:100", trials=1),
}


def build_parser():
    parser = argparse.ArgumentParser(prog="expfam-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, defaults in _DEFAULTS.items():
        p = sub.add_parser(name)
        p.add_argument("--family", default=defaults["family"])
        p.add_argument("--mu-star", default=defaults.get("mu_star"))
        p.add_argument("--n0", type=float, default=1.0)
        p.add_argument("--mu0", default=defaults.get("mu0"))
        p.add_argument("--n-grid", default=defaults["n_grid"])
        p.add_argument("--trials", type=int, default=defaults["trials"])
        p.add_argument("--seed", type=int, required=True)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--out", default=".")
        p.add_argument("--emit", default="csv,svg")
        if name == "prior-landscape":
            p.add_argument("--grid-size", type=int, default=40)
        if name == "table1":
            p.add_argument("--batch", type=int, default=2)
        if name == "bounds-table":
            p.add_argument("--alpha", type=float, default=0.5)
            p.add_argument("--ratio", type=float, default=1.0)
            p.add_argument("--dim", type=int, default=2)
    return parser


def config_from_args(args):
    fam = None if args.family == "all" else _family(args.family)
    mu_star = _vector(args.mu_star) if args.mu_star else (fam.default_mean() if fam else None)
    mu0 = _vector(args.mu0) if args.mu0 else None
    if fam is not None:
        try:
            check_mean(fam, mu_star)
            if mu0 is not None:
                check_mean(fam, mu0)
        except DomainError as exc:
            raise ConfigError(str(exc)) from None
    emit = tuple(e.strip() for e in args.emit.split(",") if e.strip())
    if set(emit) - {"csv", "svg"} or "csv" not in emit:
        raise ConfigError("--emit must include csv and may add svg")
    if args.n0 < 0:
        raise ConfigError("--n0 must be nonnegative")
    extra = {k: getattr(args, k) for k in ("grid_size", "batch", "alpha", "ratio", "dim") if hasattr(args, k)}
    return ExperimentConfig(args.command, args.family, mu_star, args.n0, mu0, parse_n_grid(args.n_grid),
                            args.trials, args.seed, max(1, args.workers), Path(args.out), emit, extra)


def _family(family_id):
    try:
        return get_family(family_id)
    except KeyError as exc:
        raise ConfigError(str(exc)) from None


# --- output --------------------------------------------------------------------

def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def to_csv(columns, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row[c]) for c in columns])
    return buf.getvalue()


@dataclass
class Result:
    files: dict = field(default_factory=dict)  # file name -> text
    failures: list = field(default_factory=list)


def write_result(cfg, result):
    cfg.out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in result.files.items():
        if name.endswith(".svg") and "svg" not in cfg.emit:
            continue
        path = cfg.out / name
        path.write_text(text, encoding="utf-8")
        written.append(path)
    report = cfg.out / f"{cfg.stem}-failures.json"
    if result.failures:
        report.write_text(json.dumps({"command": cfg.command, "family": cfg.family, "seed": cfg.seed,
                                      "failures": result.failures}, indent=2, default=float) + "\n",
                          encoding="utf-8")
        written.append(report)
    elif report.exists():
        report.unlink()
    return written


# --- overlays ----------------------------------------------------------------------

def _gamma_scale(fam, mu_star, mu0):
    return float(mu0[0] / mu_star[0])


def mle_bound_for(fam, n):
    if isinstance(fam, GammaKnownShapeFamily):
        return bounds.mle_bound_gamma(fam.alpha, n)
    if isinstance(fam, GaussianCovarianceFamily):
        return bounds.mle_bound_multivariate(fam.d, n)
    if isinstance(fam, QuadraticFamily):
        return bounds.asymptote(fam.dim, n)
    return float("nan")


def map_bound_for(fam, n, n0, mu_star, mu0):
    if isinstance(fam, GammaKnownShapeFamily) and n0 > 0:
        ratio = _gamma_scale(fam, mu_star, mu0)
        if fam.alpha == 0.5:
            return bounds.map_bound_gaussian_variance(n, n0, ratio)
        return bounds.map_bound_gamma(fam.alpha, n, n0, ratio)
    if isinstance(fam, QuadraticFamily):
        return bounds.quadratic_map_exact(fam.dim, n, n0, float(np.sum((mu_star - mu0) ** 2)))
    return float("nan")


def _exceeds(mean, se, bound, k=3.0):
    if not math.isfinite(bound) or not math.isfinite(mean):
        return False
    return mean - k * (se if math.isfinite(se) else 0.0) > bound


# --- commands ----------------------------------------------------------------------

def cmd_risk_curve(cfg):
    fam = _family(cfg.family)
    theta_star = fam.to_natural(cfg.mu_star)
    mu0 = cfg.mu0 if cfg.mu0 is not None else cfg.mu_star
    estimators = [("mle", Estimator.mle()), ("map", Estimator.map(cfg.n0, mu0))]
    rows, failures, series = [], [], []
    grid = [n for n in cfg.n_grid if n >= 1]
    for label, est in estimators:
        curve = risk_curve(fam, theta_star, est, grid, cfg.trials, cfg.seed, cfg.workers)
        xs, ys, lo, hi, bd = [], [], [], [], []
        for n, r in curve:
            bound = mle_bound_for(fam, n) if label == "mle" else map_bound_for(fam, n, cfg.n0, cfg.mu_star, mu0)
            rows.append(dict(n=n, estimator=label, **{k: v for k, v in r.row().items() if k != "trials"},
                             bound=bound, asymptote=bounds.asymptote(fam.dim, n)))
            if _exceeds(r.mean, r.std_err, bound):
                failures.append(dict(check=f"{label} risk <= bound", n=n, mean=r.mean, std_err=r.std_err, bound=bound))
            if label == "map" and r.divergent:
                failures.append(dict(check="map risk finite", n=n, mean=r.mean))
            xs.append(n)
            ys.append(r.mean if not r.divergent else float("inf"))
            lo.append(r.ci90[0])
            hi.append(r.ci90[1])
            bd.append(bound)
        series.append(svg.Series(f"{label} (MC)", xs, ys, lo, hi))
        series.append(svg.Series(f"{label} bound", xs, bd, dashed=True))
    series.append(svg.Series("d/(2n)", grid, [bounds.asymptote(fam.dim, n) for n in grid], dashed=True))
    cols = ["n", "estimator", "mean", "std_err", "lo90", "hi90", "infinite_fraction", "bound", "asymptote"]
    plot = svg.LinePlot(f"expected KL, {fam.name}", "n", "E[KL]", series)
    return Result({f"{cfg.stem}.csv": to_csv(cols, rows), f"{cfg.stem}.svg": svg.render_lines(plot)}, failures)


def cmd_bias_variance(cfg):
    fam = _family(cfg.family)
    theta_star = fam.to_natural(cfg.mu_star)
    mu0 = cfg.mu0 if cfg.mu0 is not None else cfg.mu_star
    est = Estimator.map(cfg.n0, mu0) if cfg.n0 > 0 else Estimator.mle()
    rows, failures = [], []
    for n in (n for n in cfg.n_grid if n >= 1):
        bv = bias_variance_mc(fam, theta_star, est, n, cfg.trials, cfg.seed, cfg.workers)
        rows.append(dict(n=n, total=bv.total, bias=bv.bias, variance=bv.variance, se_total=bv.se_total,
                         se_bias=bv.se_bias, se_variance=bv.se_variance, residual=bv.residual,
                         asymptote=bounds.asymptote(fam.dim, n)))
        if bv.divergent:
            failures.append(dict(check="decomposition finite", n=n))
        elif abs(bv.residual) > 4 * bv.combined_se:
            failures.append(dict(check="total = bias + variance", n=n, residual=bv.residual, se=bv.combined_se))
    cols = ["n", "total", "bias", "variance", "se_total", "se_bias", "se_variance", "residual", "asymptote"]
    ns = [r["n"] for r in rows]
    plot = svg.LinePlot(f"Bregman bias-variance, {fam.name}", "n", "expected divergence", [
        svg.Series("total", ns, [r["total"] for r in rows]),
        svg.Series("bias", ns, [r["bias"] for r in rows]),
        svg.Series("variance", ns, [r["variance"] for r in rows]),
        svg.Series("d/(2n)", ns, [r["asymptote"] for r in rows], dashed=True),
    ])
    return Result({f"{cfg.stem}.csv": to_csv(cols, rows), f"{cfg.stem}.svg": svg.render_lines(plot)}, failures)


def landscape_grid(size):
    return np.geomspace(1e-2, 1e2, size)


def valley_report(grid_n0, grid_mu0, risk, mu_star, reference):
    """Per-n0 argmin over mu0 and its distance (in cells) to a reference curve."""
    log_mu0 = np.log(grid_mu0)
    cell = log_mu0[1] - log_mu0[0]
    rows = []
    for i, n0 in enumerate(grid_n0):
        j = int(np.argmin(risk[i]))
        ref = mu_star * reference(n0)
        rows.append(dict(n0=n0, argmin_mu0=grid_mu0[j], reference_mu0=ref,
                         cells_off=abs(log_mu0[j] - math.log(ref)) / cell))
    return rows


def cmd_prior_landscape(cfg):
    fam = _family(cfg.family)
    if not isinstance(fam, GammaKnownShapeFamily):
        raise ConfigError("prior-landscape needs a gamma family")
    theta_star = fam.to_natural(cfg.mu_star)
    mu_star = float(cfg.mu_star[0])
    grid = landscape_grid(cfg.extra.get("grid_size", 40))
    rows, valley_rows, failures, files = [], [], [], {}
    for n in [n for n in cfg.n_grid if n >= 1]:
        risk, se = prior_landscape(fam, theta_star, n, grid, grid * mu_star, cfg.trials, cfg.seed, cfg.workers)
        for i, n0 in enumerate(grid):
            for j, mu0 in enumerate(grid * mu_star):
                rows.append(dict(n=n, n0=n0, mu0=mu0, risk=risk[i, j], std_err=se[i, j]))
        if not np.all(np.isfinite(risk)):
            failures.append(dict(check="landscape finite", n=n))
        report = valley_report(grid, grid * mu_star, risk, mu_star, lambda n0: 1 + 1 / n0)
        tight = valley_report(grid, grid * mu_star, risk, mu_star, lambda n0: 1 + 1 / (fam.alpha * n0))
        frac = float(np.mean([r["cells_off"] <= 1 + 1e-9 for r in report]))
        frac_tight = float(np.mean([r["cells_off"] <= 1 + 1e-9 for r in tight]))
        for r, t in zip(report, tight):
            valley_rows.append(dict(n=n, **r, tight_reference_mu0=t["reference_mu0"], tight_cells_off=t["cells_off"]))
        if frac < 0.9:
            failures.append(dict(check="argmin within one cell of mu*(1+1/n0)", n=n, fraction=frac,
                                 fraction_for_mu_star_times_1_plus_1_over_alpha_n0=frac_tight))
        files[f"{cfg.stem}-n{n}.svg"] = svg.render_heatmap(
            f"MAP expected KL, n={n}", grid, grid * mu_star, risk, "n0", "mu0",
            overlay=[(x, mu_star * (1 + 1 / x)) for x in grid])
    files[f"{cfg.stem}.csv"] = to_csv(["n", "n0", "mu0", "risk", "std_err"], rows)
    files[f"{cfg.stem}-valley.csv"] = to_csv(
        ["n", "n0", "argmin_mu0", "reference_mu0", "cells_off", "tight_reference_mu0", "tight_cells_off"],
        valley_rows)
    return Result(files, failures)


def smd_gaps(fam, runs, n, seed, key=0):
    """Max relative MAP/SMD gap (dual path) and max gap of the primal path, over random runs."""
    worst, worst_primal = 0.0, 0.0
    for r in range(runs):
        rng = stream(seed, 0x5D, key, r)
        mu_star = fam.random_mean(rng)
        prior = PriorHyper(float(np.exp(rng.uniform(np.log(0.1), np.log(10.0)))), fam.random_mean(rng))
        data = Dataset.draw(fam, fam.to_natural(mu_star), n, rng)
        closed = map_estimate(fam, data, prior)
        traj = smd_run(fam, data, prior)
        gap = np.abs(traj.final - closed) / np.maximum(np.abs(closed), np.finfo(float).tiny)
        # coordinates that are zero by cancellation are compared on the scale of the summands
        scale = (prior.n0 * np.abs(prior.mu0) + np.abs(data.suffstats).sum(axis=0)) / (prior.n0 + n)
        gap = np.minimum(gap, np.abs(traj.final - closed) / scale)
        worst = max(worst, float(gap.max()))
        primal = smd_run_primal(fam, data, prior)
        images = np.array([fam.to_natural(m) for m in traj.iterates])
        rel = np.abs(np.array(primal) - images) / np.maximum(1.0, np.abs(images))
        worst_primal = max(worst_primal, float(rel.max()))
    return worst, worst_primal


def cmd_smd_check(cfg):
    fams = SMD_FAMILIES if cfg.family == "all" else (cfg.family,)
    n = cfg.n_grid[-1]
    rows, failures = [], []
    for i, fid in enumerate(fams):
        fam = _family(fid)
        gap, primal = smd_gaps(fam, cfg.trials, n, cfg.seed, key=i)
        rows.append(dict(family=fam.name, runs=cfg.trials, n=n, max_rel_gap=gap, max_primal_gap=primal))
        if gap > 1e-12:
            failures.append(dict(check="SMD final iterate equals MAP", family=fam.name, gap=gap))
        if primal > 1e-10:
            failures.append(dict(check="primal SMD path matches", family=fam.name, gap=primal))
    cols = ["family", "runs", "n", "max_rel_gap", "max_primal_gap"]
    return Result({f"{cfg.stem}.csv": to_csv(cols, rows)}, failures)


TABLE1_EXPECTED = {"variance_on_theta": "unbounded", "variance_at_opt": "unbounded", "optimality_gap": "bounded"}


def cmd_table1(cfg):
    fam = _family(cfg.family)
    theta_star = fam.to_natural(cfg.mu_star)
    report = table1_report(fam, theta_star, cfg.trials, cfg.seed, cfg.extra.get("batch", 2))
    rows = [p.csv_row() for p in report]
    failures = []
    if isinstance(fam, GammaKnownShapeFamily):
        for p in report:
            if p.verdict != TABLE1_EXPECTED[p.assumption]:
                failures.append(dict(check=f"{p.assumption} verdict", got=p.verdict,
                                     expected=TABLE1_EXPECTED[p.assumption]))
    cols = ["assumption", "family", "verdict", "C_or_witness"]
    return Result({f"{cfg.stem}.csv": to_csv(cols, rows)}, failures)


def cmd_bounds_table(cfg):
    alpha = cfg.extra.get("alpha", 0.5)
    ratio = cfg.extra.get("ratio", 1.0)
    d = cfg.extra.get("dim", 2)
    n0 = cfg.n0
    rows, failures = [], []
    for n in cfg.n_grid:
        if n < 1:
            continue
        row = dict(
            n=n,
            mle_lower_gamma=bounds.mle_lower_bound_gamma(alpha, n),
            mle_exact_gamma=bounds.mle_exact_gamma(alpha, n),
            mle_bound_gamma=bounds.mle_bound_gamma(alpha, n),
            map_exact_symmetrized_gamma=float("nan"),
            map_bound_gamma=float("nan"),
            map_bound_gaussian_variance=float("nan"),
            nat_lo=float("nan"), nat_exact=float("nan"), nat_hi=float("nan"),
            mle_exact_multivariate=bounds.mle_exact_multivariate(d, n),
            mle_bound_multivariate=bounds.mle_bound_multivariate(d, n),
            asymptote=bounds.asymptote(1, n),
        )
        if n0 > 0:
            row["map_exact_symmetrized_gamma"] = bounds.map_exact_symmetrized_gamma(alpha, n, n0, ratio)
            row["map_bound_gamma"] = bounds.map_bound_gamma(alpha, n, n0, ratio)
            if alpha == 0.5:
                row["map_bound_gaussian_variance"] = bounds.map_bound_gaussian_variance(n, n0, ratio)
            row["nat_lo"], row["nat_hi"] = bounds.nat_param_sandwich(alpha, n, n0, ratio)
            row["nat_exact"] = bounds.map_exact_expected_inverse(alpha, n, n0, ratio)
        rows.append(row)
        checks = [
            ("mle_lower_gamma", "mle_exact_gamma"), ("mle_exact_gamma", "mle_bound_gamma"),
            ("map_exact_symmetrized_gamma", "map_bound_gamma"),
            ("map_exact_symmetrized_gamma", "map_bound_gaussian_variance"),
            ("nat_lo", "nat_exact"), ("nat_exact", "nat_hi"),
            ("mle_exact_multivariate", "mle_bound_multivariate"),
        ]
        for small, big in checks:
            a, b = row[small], row[big]
            if math.isfinite(a) and math.isfinite(b) and a > b * (1 + 1e-12):
                failures.append(dict(check=f"{small} <= {big}", n=n, lhs=a, rhs=b))
    cols = list(rows[0]) if rows else ["n"]
    return Result({f"{cfg.stem}.csv": to_csv(cols, rows)}, failures)


COMMANDS = {
    "risk-curve": cmd_risk_curve,
    "bias-variance": cmd_bias_variance,
    "prior-landscape": cmd_prior_landscape,
    "smd-check": cmd_smd_check,
    "table1": cmd_table1,
    "bounds-table": cmd_bounds_table,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = config_from_args(args)
        result = COMMANDS[cfg.command](cfg)
    except (ConfigError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        written = write_result(cfg, result)
    except OSError as exc:
        print(f"I/O error: {exc.filename or cfg.out}: {exc.strerror}", file=sys.stderr)
        return EXIT_IO
    for path in written:
        print(path)
    if result.failures:
        print(f"{len(result.failures)} assertion(s) failed; see {cfg.stem}-failures.json", file=sys.stderr)
        return EXIT_ASSERT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
