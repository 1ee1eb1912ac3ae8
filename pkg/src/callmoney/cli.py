"""Command-line interface for simulating and verifying the call money market.

Subcommands
-----------
simulate   one path on the time grid, full state table
ensemble   Monte Carlo moment series across many paths
table1     zero-rate hitting probabilities vs their analytic majorants
figure N   data (CSV) and rendering (PNG) for the standard figures 1-7
verify     theorem suite at reduced scale; exit 3 on any failure

All outputs are CSV files with a ``#``-prefixed manifest echo (including
the master seed) followed by a column-name row; reruns of the same
command and arguments reproduce them byte for byte.  Figure commands
additionally render a PNG next to each CSV unless ``--no-plot`` is
given.

Exit codes: 0 success, 1 usage error, 2 parameter or domain error,
3 verification failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from collections.abc import Sequence

import numpy as np

from .analysis import (
    TheoremReport,
    doob_majorant,
    envelope_margin_minimum,
    epanechnikov_kde,
    relative_std_bounds,
    theorem_suite,
)
from .engine import PathStream, SimConfig, simulate_path
from .ensemble import (
    DEFAULT_OBSERVABLES,
    EnsembleSpec,
    hitting_probability,
    moment_series,
    run_ensemble,
    terminal_samples,
)
from .errors import DomainError, ParameterError, UsageError
from .manifest import ExperimentManifest, build_manifest, validate_document, write_csv
from .model import demand_quantity, derive_params, equilibrium_rate

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARAMETER = 2
EXIT_VERIFY = 3
EXIT_IO = 4

# Used when neither a config document nor a flag pins a value.
DEFAULTS: dict[str, float | int] = {
    "nu": 0.09,
    "sigma": 0.15,
    "q0": 1.0,
    "V0": 1.0,
    "horizon": 10.0,
    "steps": 50_000,
    "paths": 1,
    "seed": 0,
}

# Scale of the pathwise envelope segment inside `verify`.
_ENVELOPE_HORIZON = 10.0
_ENVELOPE_STEPS = 2_000
_ENVELOPE_PATHS = 64


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad flags; the contract wants 1."""

    def error(self, message: str):  # noqa: D102 - argparse hook
        raise UsageError(f"{self.prog}: {message}")


def _add_market_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="FILE",
                   help="JSON config document; explicit flags override it")
    p.add_argument("--nu", type=float, help="index log growth rate per year")
    p.add_argument("--sigma", type=float, help="index volatility per year")
    p.add_argument("--q0", type=float, help="initial loan pool size")
    p.add_argument("--v0", type=float, help="initial gambler equity")
    p.add_argument("--horizon", type=float, help="years simulated")
    p.add_argument("--permissive", action="store_true",
                   help="accept drift below sigma^2/2 (rate pinned at zero)")


def _add_scale_flags(p: argparse.ArgumentParser, *, paths: bool = True) -> None:
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--steps", type=int, help="time steps on the grid")
    if paths:
        p.add_argument("--paths", type=int, help="number of Monte Carlo paths")


def _add_out_flag(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", metavar="DIR", default=".",
                   help="output directory (created if missing)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="callmoney", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="write one path's full state table")
    _add_market_flags(p)
    _add_scale_flags(p, paths=False)
    _add_out_flag(p)
    p.add_argument("--record-every", type=int, default=1, metavar="K",
                   help="keep every K-th step (default 1)")
    p.add_argument("--decouple-shocks", action="store_true",
                   help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ensemble", help="write Monte Carlo moment series")
    _add_market_flags(p)
    _add_scale_flags(p)
    _add_out_flag(p)
    p.add_argument("--record-every", type=int, default=None, metavar="K",
                   help="keep every K-th step (default steps/200)")
    p.add_argument("--workers", type=int, help="process count for the reduction")
    p.add_argument("--decouple-shocks", action="store_true",
                   help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("table1", help="hitting probabilities vs majorants, 15 markets")
    _add_scale_flags(p)
    _add_out_flag(p)
    p.add_argument("--workers", type=int, help="process count for the reduction")
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("figure", help="data and rendering for one standard figure")
    p.add_argument("n", type=int, choices=range(1, 8), metavar="N",
                   help="figure number, 1-7")
    _add_scale_flags(p)
    _add_out_flag(p)
    p.add_argument("--workers", type=int, help="process count for the reduction")
    p.add_argument("--no-plot", action="store_true", help="skip PNG rendering")
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("verify", help="run the theorem suite; exit 3 on failure")
    _add_market_flags(p)
    _add_scale_flags(p)
    p.add_argument("--out", metavar="DIR", default=None,
                   help="also write verify_report.csv into DIR")
    p.add_argument("--workers", type=int, help="process count for the reduction")
    p.add_argument("--decouple-shocks", action="store_true",
                   help="negative control: break the equity/index coupling")
    p.set_defaults(func=cmd_verify)

    return parser


def _load_config(path: str) -> dict[str, float | int]:
    with open(path, encoding="utf-8") as fh:
        try:
            document = json.load(fh)
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {path}: invalid JSON ({exc})") from exc
    return validate_document(document)


def _gather_values(args: argparse.Namespace,
                   defaults: dict[str, float | int]) -> dict[str, float | int]:
    """Defaults, then the config document, then explicit flags."""
    values = dict(defaults)
    if getattr(args, "config", None):
        values.update(_load_config(args.config))
    for flag, key in (
        ("nu", "nu"), ("sigma", "sigma"), ("q0", "q0"), ("v0", "V0"),
        ("horizon", "horizon"), ("steps", "steps"), ("paths", "paths"),
        ("seed", "seed"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            values[key] = value
    return values


def _manifest(args: argparse.Namespace, name: str,
              defaults: dict[str, float | int], *, record_every: int = 1,
              outputs: Sequence[str] = ()) -> ExperimentManifest:
    v = _gather_values(args, defaults)
    return build_manifest(
        name,
        nu=v["nu"], sigma=v["sigma"], q0=v["q0"], v0=v["V0"],
        horizon=v["horizon"], steps=int(v["steps"]), paths=int(v["paths"]),
        seed=int(v["seed"]), record_every=record_every,
        strict=not getattr(args, "permissive", False),
        decouple_shocks=getattr(args, "decouple_shocks", False),
        outputs=outputs,
    )


def _out_dir(args: argparse.Namespace) -> str:
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _path_table(path) -> tuple[tuple[str, ...], np.ndarray]:
    p = path.params
    index = np.exp(path.log_s)
    equity = np.exp(path.log_v)
    pool = np.exp(path.log_q)
    rel_size = np.exp(path.log_q - path.log_v)
    gamma = path.rate + 0.5 * (p.sigma * path.leverage) ** 2
    equity_ps = np.exp(path.log_v - path.log_s)
    pool_ps = np.exp(path.log_q - path.log_s)
    columns = (
        "t", "index", "equity", "pool", "rel_size", "rate", "leverage",
        "growth_coeff", "equity_per_share", "pool_per_share", "wealth_per_share",
    )
    data = np.column_stack([
        path.times, index, equity, pool, rel_size, path.rate, path.leverage,
        gamma, equity_ps, pool_ps, equity_ps + pool_ps,
    ])
    return columns, data


def cmd_simulate(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    m = _manifest(args, "simulate", DEFAULTS, record_every=args.record_every,
                  outputs=("simulate_path.csv",))
    path = simulate_path(m.params, m.config, PathStream(m.master_seed, 0),
                         decouple_shocks=m.decouple_shocks)
    columns, data = _path_table(path)
    target = os.path.join(out, "simulate_path.csv")
    write_csv(target, m, columns, data,
              extra_header=[f"hit_zero={'true' if path.hit_zero else 'false'}"])
    print(f"wrote {target}")
    return EXIT_OK


def _aligned_series(stats, name: str) -> tuple[np.ndarray, np.ndarray]:
    """Mean/std series padded with nan where the observable is undefined."""
    times, mean, std = moment_series(stats, name)
    pad = stats.times.size - times.size
    if pad:
        mean = np.concatenate([np.full(pad, np.nan), mean])
        std = np.concatenate([np.full(pad, np.nan), std])
    return mean, std


def cmd_ensemble(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    values = _gather_values(args, {**DEFAULTS, "paths": 10_000})
    record_every = args.record_every or max(1, int(values["steps"]) // 200)
    m = _manifest(args, "ensemble", {**DEFAULTS, "paths": 10_000},
                  record_every=record_every, outputs=("ensemble_moments.csv",))
    spec = EnsembleSpec(m.params, m.config, m.n_paths, m.master_seed,
                        decouple_shocks=m.decouple_shocks)
    stats = run_ensemble(spec, workers=args.workers)

    columns = ["t"]
    series = [stats.times]
    for name in DEFAULT_OBSERVABLES:
        mean, std = _aligned_series(stats, name)
        columns += [f"mean_{name}", f"std_{name}"]
        series += [mean, std]
    p_hat, p_se = hitting_probability(stats)
    target = os.path.join(out, "ensemble_moments.csv")
    write_csv(target, m, columns, np.column_stack(series),
              extra_header=[f"hit_probability={p_hat!r} hit_se={p_se!r}"])
    print(f"wrote {target}")
    return EXIT_OK


# The 15 market rows: volatility sweeps inside each drift level.
TABLE1_MARKETS: tuple[tuple[float, float], ...] = tuple(
    (sigma, nu)
    for nu in (0.09, 0.08, 0.07, 0.06, 0.05)
    for sigma in (0.10, 0.15, 0.20)
)

TABLE1_HORIZON = 200.0
TABLE1_STEPS = 25_000
TABLE1_PATHS = 25_000


def cmd_table1(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    seed = args.seed if args.seed is not None else 0
    n_paths = args.paths if args.paths is not None else TABLE1_PATHS
    n_steps = args.steps if args.steps is not None else TABLE1_STEPS
    m = build_manifest("table1", nu=0.09, sigma=0.15, q0=1.0, v0=1.0,
                       horizon=TABLE1_HORIZON, steps=n_steps, paths=n_paths,
                       seed=seed, record_every=n_steps, outputs=("table1.csv",))
    rows = []
    for sigma, nu in TABLE1_MARKETS:
        p = derive_params(1.0, 1.0, 1.0, nu, sigma)
        spec = EnsembleSpec(p, m.config, n_paths, seed, observables=("rate",))
        estimate, se = hitting_probability(run_ensemble(spec, workers=args.workers))
        rows.append((
            sigma, nu, float(equilibrium_rate(p.initial_ratio, p)),
            p.choke_rate, doob_majorant(p), estimate, se,
        ))
        print(f"  sigma={sigma:.2f} nu={nu:.2f}: hit {100 * estimate:.2f}% "
              f"(se {100 * se:.2f}pp) <= bound {100 * rows[-1][4]:.1f}%",
              file=sys.stderr)
    target = os.path.join(out, "table1.csv")
    write_csv(
        target, m,
        ("sigma", "nu", "r_L0", "r_inf", "majorant", "mc_estimate", "mc_se"),
        rows,
        extra_header=["sweep: 15 markets with q0/V0=1; per-row parameters in the "
                      "sigma and nu columns"],
    )
    print(f"wrote {target}")
    return EXIT_OK


def _opt(value, fallback):
    return fallback if value is None else value


def _figure1(args, out: str) -> list[str]:
    outputs = ("figure1_path.csv", "figure1_demand.csv")
    m = build_manifest("figure1", nu=0.09, sigma=0.15, q0=1.0, v0=1.0,
                       horizon=10.0, steps=_opt(args.steps, 50_000), paths=1,
                       seed=_opt(args.seed, 0), outputs=outputs)
    path = simulate_path(m.params, m.config, PathStream(m.master_seed, 0))
    pool = np.exp(path.log_q)
    path_csv = os.path.join(out, outputs[0])
    write_csv(path_csv, m, ("t", "pool", "rate"),
              np.column_stack([path.times, pool, path.rate]))

    rate_grid = np.linspace(0.0, m.params.choke_rate, 201)
    demand_t0 = demand_quantity(np.exp(path.log_v[0]), rate_grid, m.params)
    demand_t10 = demand_quantity(np.exp(path.log_v[-1]), rate_grid, m.params)
    demand_csv = os.path.join(out, outputs[1])
    write_csv(demand_csv, m, ("rate", "demand_t0", "demand_t10"),
              np.column_stack([rate_grid, demand_t0, demand_t10]),
              extra_header=[f"supply_q_t0={pool[0]!r} supply_q_t10={pool[-1]!r}"])

    written = [path_csv, demand_csv]
    if not args.no_plot:
        from . import plots
        png = os.path.join(out, "figure1.png")
        plots.render_figure1(png, rate_grid, demand_t0, demand_t10, pool, path.rate)
        written.append(png)
    return written


def _figure2(args, out: str) -> list[str]:
    steps = _opt(args.steps, 50_000)
    seed = _opt(args.seed, 0)
    outputs = ("figure2_path.csv", "figure2_stats.csv")
    m = build_manifest("figure2", nu=0.09, sigma=0.15, q0=1.0, v0=1.0,
                       horizon=100.0, steps=steps, paths=_opt(args.paths, 50_000),
                       seed=seed, record_every=max(1, steps // 500),
                       outputs=outputs)
    spec = EnsembleSpec(m.params, m.config, m.n_paths, seed,
                        observables=("leverage", "rate"))
    stats = run_ensemble(spec, workers=args.workers)
    _, mean_lev, std_lev = moment_series(stats, "leverage")
    _, mean_rate, std_rate = moment_series(stats, "rate")

    sample_cfg = SimConfig(100.0, steps, record_every=max(1, steps // 5000))
    sample = simulate_path(m.params, sample_cfg, PathStream(seed, 0))

    path_csv = os.path.join(out, outputs[0])
    write_csv(path_csv, m, ("t", "leverage", "rate"),
              np.column_stack([sample.times, sample.leverage, sample.rate]),
              extra_header=[f"path_record_every={sample_cfg.record_every}"])
    stats_csv = os.path.join(out, outputs[1])
    write_csv(stats_csv, m,
              ("t", "mean_leverage", "std_leverage", "mean_rate", "std_rate"),
              np.column_stack([stats.times, mean_lev, std_lev, mean_rate, std_rate]))

    written = [path_csv, stats_csv]
    if not args.no_plot:
        from . import plots
        png = os.path.join(out, "figure2.png")
        plots.render_figure2(png, sample.times, sample.leverage, sample.rate,
                             stats.times, mean_lev, std_lev, mean_rate, std_rate)
        written.append(png)
    return written


def _figure3(args, out: str) -> list[str]:
    steps = _opt(args.steps, 40_000)
    seed = _opt(args.seed, 0)
    outputs = ("figure3_path.csv", "figure3_stats.csv")
    m = build_manifest("figure3", nu=0.09, sigma=0.15, q0=1.0, v0=1.0,
                       horizon=30.0, steps=steps, paths=_opt(args.paths, 40_000),
                       seed=seed, record_every=max(1, steps // 500),
                       outputs=outputs)
    spec = EnsembleSpec(m.params, m.config, m.n_paths, seed,
                        observables=("growth_coeff",))
    stats = run_ensemble(spec, workers=args.workers)
    _, mean_g, std_g = moment_series(stats, "growth_coeff")

    sample_cfg = SimConfig(30.0, steps, record_every=max(1, steps // 5000))
    sample = simulate_path(m.params, sample_cfg, PathStream(seed, 0))
    sample_gamma = sample.rate + 0.5 * (m.params.sigma * sample.leverage) ** 2

    path_csv = os.path.join(out, outputs[0])
    write_csv(path_csv, m, ("t", "growth_coeff"),
              np.column_stack([sample.times, sample_gamma]),
              extra_header=[f"path_record_every={sample_cfg.record_every}"])
    stats_csv = os.path.join(out, outputs[1])
    write_csv(stats_csv, m, ("t", "mean_growth_coeff", "std_growth_coeff"),
              np.column_stack([stats.times, mean_g, std_g]))

    written = [path_csv, stats_csv]
    if not args.no_plot:
        from . import plots
        png = os.path.join(out, "figure3.png")
        plots.render_figure3(png, sample.times, sample_gamma,
                             stats.times, mean_g, std_g)
        written.append(png)
    return written


def _figure4(args, out: str) -> list[str]:
    steps = _opt(args.steps, 100_000)
    outputs = ("figure4_std.csv",)
    m = build_manifest("figure4", nu=0.09, sigma=0.15, q0=1.0, v0=1.0,
                       horizon=2.0, steps=steps, paths=_opt(args.paths, 100_000),
                       seed=_opt(args.seed, 0),
                       record_every=max(1, steps // 200), outputs=outputs)
    spec = EnsembleSpec(m.params, m.config, m.n_paths, m.master_seed,
                        observables=("rel_size",))
    stats = run_ensemble(spec, workers=args.workers)
    times, _, std_rel = moment_series(stats, "rel_size")
    lower, upper = relative_std_bounds(m.params, times)

    target = os.path.join(out, outputs[0])
    write_csv(target, m, ("t", "std_rel_size", "lower_bound", "upper_bound"),
              np.column_stack([times, std_rel, lower, upper]))
    written = [target]
    if not args.no_plot:
        from . import plots
        png = os.path.join(out, "figure4.png")
        plots.render_figure4(png, times, std_rel, lower, upper)
        written.append(png)
    return written


def _figure5(args, out: str) -> list[str]:
    steps = _opt(args.steps, 200_000)
    outputs = ("figure5_growth.csv",)
    m = build_manifest("figure5", nu=0.09, sigma=0.15, q0=1.0, v0=1.0,
                       horizon=200.0, steps=steps, paths=1,
                       seed=_opt(args.seed, 0),
                       record_every=max(1, steps // 5000), outputs=outputs)
    path = simulate_path(m.params, m.config, PathStream(m.master_seed, 0))
    t = path.times[1:]  # realized rates are averages over (0, t]
    g_pool = (path.log_q[1:] - path.log_q[0]) / t
    g_index = (path.log_s[1:] - path.log_s[0]) / t
    g_equity = (path.log_v[1:] - path.log_v[0]) / t

    target = os.path.join(out, outputs[0])
    write_csv(target, m, ("t", "growth_pool", "growth_index", "growth_equity"),
              np.column_stack([t, g_pool, g_index, g_equity]))
    written = [target]
    if not args.no_plot:
        from . import plots
        png = os.path.join(out, "figure5.png")
        plots.render_figure5(png, t, g_pool, g_index, g_equity,
                             m.params.choke_rate, m.params.nu)
        written.append(png)
    return written


def _figure6(args, out: str) -> list[str]:
    steps = _opt(args.steps, 100_000)
    outputs = ("figure6_path.csv",)
    m = build_manifest("figure6", nu=0.08, sigma=0.20, q0=1.0, v0=1.0,
                       horizon=100.0, steps=steps, paths=1,
                       seed=_opt(args.seed, 0),
                       record_every=max(1, steps // 5000), outputs=outputs)
    path = simulate_path(m.params, m.config, PathStream(m.master_seed, 0))
    equity_ps = np.exp(path.log_v - path.log_s)
    pool_ps = np.exp(path.log_q - path.log_s)

    target = os.path.join(out, outputs[0])
    write_csv(target, m,
              ("t", "equity_per_share", "wealth_per_share", "pool_per_share", "rate"),
              np.column_stack([path.times, equity_ps, equity_ps + pool_ps,
                               pool_ps, path.rate]))
    written = [target]
    if not args.no_plot:
        from . import plots
        png = os.path.join(out, "figure6.png")
        plots.render_figure6(png, path.times, equity_ps, equity_ps + pool_ps,
                             pool_ps, path.rate)
        written.append(png)
    return written


FIGURE7_BANDWIDTH = 0.0193


def _figure7(args, out: str) -> list[str]:
    steps = _opt(args.steps, 25_000)
    outputs = ("figure7_density.csv", "figure7_samples.csv")
    m = build_manifest("figure7", nu=0.09, sigma=0.15, q0=1.0, v0=1.0,
                       horizon=200.0, steps=steps, paths=_opt(args.paths, 100_000),
                       seed=_opt(args.seed, 0), record_every=steps,
                       outputs=outputs)
    spec = EnsembleSpec(m.params, m.config, m.n_paths, m.master_seed,
                        observables=("growth_factor",))
    stats = run_ensemble(spec, workers=args.workers)
    samples = terminal_samples(stats, "growth_factor")
    estimate = epanechnikov_kde(samples, FIGURE7_BANDWIDTH)
    share_below = float(np.mean(samples < 1.0))

    density_csv = os.path.join(out, outputs[0])
    write_csv(density_csv, m, ("x", "density"),
              np.column_stack([estimate.grid, estimate.density]),
              extra_header=[f"bandwidth={FIGURE7_BANDWIDTH!r} "
                            f"underperform_share={share_below!r}"])
    samples_csv = os.path.join(out, outputs[1])
    write_csv(samples_csv, m, ("growth_factor",), samples[:, None])

    written = [density_csv, samples_csv]
    if not args.no_plot:
        from . import plots
        png = os.path.join(out, "figure7.png")
        plots.render_figure7(png, estimate.grid, estimate.density, share_below)
        written.append(png)
    return written


_FIGURES = {1: _figure1, 2: _figure2, 3: _figure3, 4: _figure4,
            5: _figure5, 6: _figure6, 7: _figure7}


def cmd_figure(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    written = _FIGURES[args.n](args, out)
    print("wrote " + ", ".join(written))
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    defaults = {**DEFAULTS, "horizon": 100.0, "steps": 2_500, "paths": 2_000}
    values = _gather_values(args, defaults)
    record_every = max(1, int(values["steps"]) // 100)
    m = _manifest(args, "verify", defaults, record_every=record_every,
                  outputs=("verify_report.csv",) if args.out else ())
    spec = EnsembleSpec(m.params, m.config, m.n_paths, m.master_seed,
                        decouple_shocks=m.decouple_shocks)
    stats = run_ensemble(spec, workers=args.workers)
    reports = theorem_suite(stats, m.params)

    # Pathwise relative-growth envelope on a short full-resolution
    # segment; this is the check a broken coupling cannot sneak past.
    check = envelope_margin_minimum(
        m.params, _ENVELOPE_HORIZON, _ENVELOPE_STEPS, m.master_seed,
        min(m.n_paths, _ENVELOPE_PATHS), decouple_shocks=m.decouple_shocks,
    )
    reports.append(TheoremReport(
        theorem="pathwise-growth-envelope",
        passed=bool(check.min_margin >= -1e-9),
        measured={"min_margin": check.min_margin,
                  "path_index": float(check.path_index), "time": check.time},
        tolerances={"min_margin": -1e-9},
        note=f"full-resolution margins on a {_ENVELOPE_HORIZON:g}y segment",
    ))

    for r in reports:
        print(f"{r.theorem:<34}{'PASS' if r.passed else 'FAIL'}")
    n_pass = sum(1 for r in reports if r.passed)
    print(f"verification: {n_pass}/{len(reports)} reports passed "
          f"(paths={m.n_paths}, horizon={m.config.horizon_years:g}y, "
          f"seed={m.master_seed})")

    if args.out is not None:
        os.makedirs(args.out, exist_ok=True)
        target = os.path.join(args.out, "verify_report.csv")
        rows = [
            (r.theorem, "pass" if r.passed else "fail",
             ";".join(f"{k}={v!r}" for k, v in r.measured.items()), r.note)
            for r in reports
        ]
        write_csv(target, m, ("theorem", "verdict", "measured", "note"), rows)
        print(f"wrote {target}")
    return EXIT_OK if n_pass == len(reports) else EXIT_VERIFY


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParameterError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMETER
    except FloatingPointError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_PARAMETER
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
