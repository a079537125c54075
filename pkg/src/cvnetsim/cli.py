"""Command line: ``run``, ``sweep``, ``report`` and ``presets``.

``--config`` takes a TOML file or a preset name. The default output
directory is ``$CVNETSIM_OUT_DIR`` or ``./out``.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Callable, Optional, Sequence

from . import __version__
from .config import ConfigError, ScenarioConfig, load_config, parse_rate, parse_speed
from .metrics import assert_oracle_equal, recompute_oracle, OracleMismatch
from .output import (
    METRIC_COLUMNS,
    SUMMARY_COLUMNS,
    aggregate_columns,
    aggregate_point,
    fmt,
    read_csv_dicts,
    summary_row,
    write_csv,
    write_run,
)
from .presets import PRESETS, UnknownPreset, describe_preset, install_preset, preset_names
from .scenario import run_scenario

OUT_DIR_ENV = "CVNETSIM_OUT_DIR"


class CliError(Exception):
    pass


def default_out_dir() -> Path:
    return Path(os.environ.get(OUT_DIR_ENV, "out"))


def resolve_config(spec: str) -> ScenarioConfig:
    """A TOML path if it exists, otherwise a preset name."""
    path = Path(spec)
    if path.is_file():
        return load_config(path)
    if spec in PRESETS:
        return install_preset(spec)
    raise CliError(f"{spec!r} is neither a config file nor a preset; presets: {', '.join(preset_names())}")


# sweep axes -------------------------------------------------------------

def _set_cv(cfg, v):
    return replace(cfg, cv_count=v)


def _set_speed(cfg, v):
    return replace(cfg, max_speed=v)


def _set_rate(cfg, v):
    return replace(cfg, traffic=replace(cfg.traffic, offered_rate=v))


def _set_size(cfg, v):
    return replace(cfg, traffic=replace(cfg.traffic, packet_size=v))


def _set_tech(cfg, v):
    return cfg.with_tech(v)


def _parse_int(token: str, key: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {token!r}") from None


def _parse_tech(token: str, key: str) -> str:
    if token not in ("mmwave", "dsrc"):
        raise ConfigError(f"{key}: expected 'mmwave' or 'dsrc', got {token!r}")
    return token


def _parse_rate_token(token: str, key: str) -> float:
    try:
        return parse_rate(float(token), key)
    except ValueError:
        return parse_rate(token, key)


# axis name -> (token parser, config setter)
SWEEP_AXES: dict[str, tuple[Callable, Callable]] = {
    "cv_count": (_parse_int, _set_cv),
    "max_speed": (parse_speed, _set_speed),
    "offered_rate": (_parse_rate_token, _set_rate),
    "packet_size": (_parse_int, _set_size),
    "radio.tech": (_parse_tech, _set_tech),
}


def sweep_points(base: ScenarioConfig, axis: str, tokens: Sequence[str]) -> list[tuple[str, object, ScenarioConfig]]:
    if axis not in SWEEP_AXES:
        raise CliError(f"unknown sweep axis {axis!r}; valid axes: {', '.join(SWEEP_AXES)}")
    parse, setter = SWEEP_AXES[axis]
    points = []
    for tok in tokens:
        value = parse(tok.strip(), axis)
        try:
            cfg = setter(base, value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{axis}={tok}: {exc}") from None
        points.append((tok.strip(), value, cfg))
    # aggregate ordering follows the axis value, not the command-line order
    points.sort(key=lambda p: p[1])
    return points


def _run_one(job):
    cfg, seed, run_id = job
    result = run_scenario(replace(cfg, name=run_id), seed=seed)
    return summary_row(result)


def run_sweep(base: ScenarioConfig, axis: str, tokens: Sequence[str], n_seeds: int,
              jobs: int = 1) -> tuple[list[list], list[list]]:
    """Run every (value, seed) pair; return (runs rows, aggregate rows)."""
    if n_seeds < 1:
        raise CliError("--seeds must be at least 1")
    points = sweep_points(base, axis, tokens)
    seeds = [base.seed + k for k in range(n_seeds)]
    work = []
    for tok, _, cfg in points:
        for seed in seeds:
            work.append((cfg, seed, f"{base.name}-{axis}={tok}"))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            summaries = list(pool.map(_run_one, work))
    else:
        summaries = [_run_one(w) for w in work]
    runs, agg = [], []
    it = iter(summaries)
    for tok, _, _ in points:
        rows = [next(it) for _ in seeds]
        runs += [[axis, tok, *r] for r in rows]
        agg.append(aggregate_row(axis, tok, [dict(zip(SUMMARY_COLUMNS, r)) for r in rows]))
    return runs, agg


def aggregate_row(axis: str, token: str, summaries: Sequence[dict]) -> list:
    """Mean and quartiles per metric, computed from formatted run summaries."""
    row: list = [axis, token, len(summaries)]
    for metric in METRIC_COLUMNS:
        vals = [float(s[metric]) if s[metric] != "" else None for s in summaries]
        row += [fmt(v) for v in aggregate_point(vals)]
    return row


# report -----------------------------------------------------------------

def format_report(header: Sequence[str], rows: Sequence[dict]) -> str:
    missing = [c for c in aggregate_columns() if c not in header]
    if missing:
        raise CliError(f"aggregate schema error: missing column(s) {', '.join(missing)}")
    if not rows:
        return "no data\n"
    out = []
    axis = rows[0]["axis"]
    for metric in METRIC_COLUMNS:
        out.append(f"{metric} by {axis}")
        cols = ["value", "runs", "mean", "q1", "median", "q3"]
        table = [cols] + [
            [r["value"], r["runs"], *(r[f"{metric}_{k}"] or "-" for k in ("mean", "q1", "median", "q3"))]
            for r in rows
        ]
        widths = [max(len(str(t[i])) for t in table) for i in range(len(cols))]
        for t in table:
            out.append("  " + "  ".join(str(c).rjust(w) for c, w in zip(t, widths)))
        out.append("")
    if len(rows) >= 2:
        first, last = rows[0], rows[-1]
        out.append(f"ratios ({axis}={last['value']} vs {axis}={first['value']})")
        for metric in METRIC_COLUMNS:
            a, b = first[f"{metric}_mean"], last[f"{metric}_mean"]
            if a and b and float(a) != 0 and float(b) != 0:
                a, b = float(a), float(b)
                out.append(f"  {metric:<16} {b / a:8.3f}x  (inverse {a / b:.3f}x)")
            else:
                out.append(f"  {metric:<16}      n/a")
    return "\n".join(out) + "\n"


# commands ---------------------------------------------------------------

def cmd_run(args) -> int:
    cfg = resolve_config(args.preset or args.config)
    if args.duration is not None:
        cfg = replace(cfg, duration=args.duration)
    if args.warmup is not None:
        cfg = replace(cfg, warmup=args.warmup)
    out = Path(args.out) if args.out else default_out_dir()
    result = run_scenario(cfg, seed=args.seed)
    paths = write_run(result, out)
    if args.check:
        oracle = recompute_oracle(paths["packets.csv"], result.end_ns, result.warmup_ns,
                                  flow_ids=result.stats)
        assert_oracle_equal(result.stats, oracle)
    print(f"{result.run_id}: {len(result.packets)} packets, {len(result.stats)} flows "
          f"in {result.wall_time:.2f} s -> {out}")
    return 0


def cmd_sweep(args) -> int:
    base = resolve_config(args.config)
    if args.duration is not None:
        base = replace(base, duration=args.duration)
    tokens = [t for t in args.values.split(",") if t.strip()]
    if not tokens:
        raise CliError("--values is empty")
    runs, agg = run_sweep(base, args.axis, tokens, args.seeds, args.jobs)
    out = Path(args.out) if args.out else default_out_dir()
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "runs.csv", ["axis", "value", *SUMMARY_COLUMNS], runs)
    write_csv(out / "aggregate.csv", aggregate_columns(), agg)
    print(f"{len(runs)} runs, {len(agg)} points -> {out / 'aggregate.csv'}")
    return 0


def cmd_report(args) -> int:
    path = Path(args.aggregate)
    if not path.is_file():
        raise CliError(f"{path}: no such file")
    header, rows = read_csv_dicts(path)
    sys.stdout.write(format_report(header, rows))
    return 0


def cmd_presets(args) -> int:
    for name in preset_names():
        print(describe_preset(name))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cvnetsim", description="Connected-vehicle downlink simulator")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one scenario and write its CSVs")
    src = r.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="TOML file or preset name")
    src.add_argument("--preset", help="preset name")
    r.add_argument("--seed", type=int)
    r.add_argument("--out", help=f"output directory (default ${OUT_DIR_ENV} or ./out)")
    r.add_argument("--duration", type=float, help="override horizon, s")
    r.add_argument("--warmup", type=float, help="exclude packets created before this time, s")
    r.add_argument("--check", action="store_true", help="verify metrics against packets.csv")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run a parameter sweep and aggregate")
    s.add_argument("--config", required=True, help="TOML file or preset name")
    s.add_argument("--axis", required=True, help=f"one of: {', '.join(SWEEP_AXES)}")
    s.add_argument("--values", required=True, help="comma-separated, e.g. 20,40 or '35 mph,55 mph'")
    s.add_argument("--seeds", type=int, default=5, help="seeds per point, starting at the config seed")
    s.add_argument("--out")
    s.add_argument("--duration", type=float)
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_sweep)

    rep = sub.add_parser("report", help="print tables from aggregate.csv")
    rep.add_argument("aggregate")
    rep.set_defaults(func=cmd_report)

    pr = sub.add_parser("presets", help="list named scenarios")
    pr.set_defaults(func=cmd_presets)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, CliError, UnknownPreset, OracleMismatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
