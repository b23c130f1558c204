"""Command-line front end.

Verbs:
  run      execute one scenario from a config file or preset
  sweep    execute a scenario once per value of one swept parameter
  presets  list the built-in scenario presets

Outputs are plain files (CSV trace, JSON metrics, YAML config echo) written
to the chosen output directory; re-running the emitted config echo with the
same seed reproduces the trace byte for byte.

Exit codes: 0 success, 2 usage error, 3 config/validation error, 4 runtime
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import yaml

from .metrics import MetricReport
from .presets import PRESET_NAMES, describe_preset, get_preset
from .sim import (
    SWEEP_PARAMETERS,
    ConfigError,
    RunResult,
    ScenarioConfig,
    run_scenario,
    sweep,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_RUNTIME = 4


class _Parser(argparse.ArgumentParser):
    """Argument parser that reports usage problems as exit code 2."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _build_parser() -> _Parser:
    parser = _Parser(prog="lsasim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="verb", required=True)

    def add_common(p: _Parser) -> None:
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--config", type=Path, help="scenario config file (YAML)")
        src.add_argument("--preset", help="built-in scenario name (see `presets`)")
        p.add_argument("--out", type=Path, help="output directory (default runs/<name>)")
        p.add_argument("--seed", type=int, help="override the scenario seed")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a config entry (dotted keys, repeatable)",
        )

    add_common(sub.add_parser("run", help="execute one scenario"))
    p_sweep = sub.add_parser("sweep", help="run a scenario across parameter values")
    add_common(p_sweep)
    p_sweep.add_argument(
        "--parameter",
        required=True,
        choices=SWEEP_PARAMETERS,
        help="which parameter to sweep",
    )
    p_sweep.add_argument(
        "--values",
        required=True,
        help="comma-separated list of parameter values",
    )
    sub.add_parser("presets", help="list built-in scenario presets")
    return parser


# -- config loading ---------------------------------------------------------


def _load_config(args) -> tuple[ScenarioConfig, str]:
    """Resolve --config/--preset plus overrides into a validated config."""
    if args.preset is not None:
        try:
            data = get_preset(args.preset).to_dict()
        except KeyError as exc:
            raise ConfigError(str(exc.args[0])) from exc
        name = args.preset
    else:
        if not args.config.is_file():
            raise ConfigError(f"config: no such file: {args.config}")
        try:
            data = yaml.safe_load(args.config.read_text())
        except yaml.YAMLError as exc:
            raise ConfigError(f"config: not parseable: {exc}") from exc
        name = args.config.stem
    for item in args.overrides:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise _UsageError(f"--set expects KEY=VALUE, got {item!r}")
        _apply_override(data, key.strip(), raw)
    if args.seed is not None:
        data["seed"] = args.seed
    return ScenarioConfig.from_dict(data), name


def _apply_override(data: dict, dotted: str, raw: str) -> None:
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{dotted}: override value not parseable: {exc}") from exc
    node = data
    *parents, leaf = dotted.split(".")
    for part in parents:
        nxt = node.get(part)
        if nxt is None:
            nxt = node[part] = {}
        if not isinstance(nxt, dict):
            raise ConfigError(f"{dotted}: {part!r} is not a mapping")
        node = nxt
    node[leaf] = value


# -- output bundle ----------------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def write_trace_csv(result: RunResult, path: Path) -> None:
    """One row per (instant, operator, incumbent); 12-significant-digit reals."""
    trace = result.trace
    t_max, n, m = trace.allocated.shape
    lines = ["instant,operator,incumbent,demand,allocated,violation"]
    demands = trace.demands
    allocated = trace.allocated
    violations = trace.violations
    for t in range(t_max):
        for i in range(n):
            d = _fmt(demands[t, i])
            v = "1" if violations[t, i] else "0"
            for j in range(m):
                lines.append(f"{t},{i},{j},{d},{_fmt(allocated[t, i, j])},{v}")
    path.write_text("\n".join(lines) + "\n")


def write_moving_average_csv(result: RunResult, path: Path) -> None:
    series = result.report.moving_averages
    window = result.config.window
    n = series.shape[1]
    header = "instant," + ",".join(f"op{i}" for i in range(n))
    lines = [header]
    for k, row in enumerate(series):
        lines.append(f"{window - 1 + k}," + ",".join(_fmt(x) for x in row))
    path.write_text("\n".join(lines) + "\n")


def _report_dict(report: MetricReport) -> dict:
    return {
        "mean_shares": report.mean_shares.tolist(),
        "mean_shares_by_incumbent": report.mean_shares_by_incumbent.tolist(),
        "unallocated": report.unallocated.tolist(),
        "unallocated_instants": int(report.unallocated_instants),
        "dissatisfaction": report.dissatisfaction,
        "dissatisfaction_instants": int(report.dissatisfaction_instants),
        "share_variance": report.share_variance,
        "jain_index": report.jain,
    }


def write_bundle(result: RunResult, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config_echo.yaml").write_text(
        yaml.safe_dump(result.config.to_dict(), sort_keys=False)
    )
    write_trace_csv(result, out_dir / "trace.csv")
    payload = _report_dict(result.report)
    if result.rounds is not None:
        payload["rounds"] = {
            "mean": float(result.rounds.mean()),
            "min": int(result.rounds.min()),
            "max": int(result.rounds.max()),
        }
    (out_dir / "metrics.json").write_text(json.dumps(payload, indent=2) + "\n")
    if result.config.emit_moving_average:
        write_moving_average_csv(result, out_dir / "moving_average.csv")


def _print_summary(result: RunResult, out_dir: Path) -> None:
    shares = ", ".join(_fmt(s) for s in result.report.mean_shares)
    print(f"mean shares: [{shares}]")
    unalloc = ", ".join(_fmt(u) for u in result.report.unallocated)
    print(f"unallocated factor: [{unalloc}]  dissatisfaction: {_fmt(result.report.dissatisfaction)}")
    print(f"outputs: {out_dir}")


# -- verbs ------------------------------------------------------------------


def cmd_run(args) -> int:
    cfg, name = _load_config(args)
    result = run_scenario(cfg)
    out_dir = args.out if args.out is not None else Path("runs") / name
    write_bundle(result, out_dir)
    _print_summary(result, out_dir)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg, name = _load_config(args)
    raw_values = [v for v in args.values.split(",") if v.strip()]
    if not raw_values:
        raise _UsageError("--values needs at least one value")
    values = []
    for raw in raw_values:
        parsed = yaml.safe_load(raw.strip())
        if not isinstance(parsed, (int, float)) or isinstance(parsed, bool):
            raise _UsageError(f"--values entries must be numbers, got {raw.strip()!r}")
        values.append(parsed)

    results = sweep(cfg, args.parameter, values)
    out_dir = args.out if args.out is not None else Path("runs") / f"{name}-{args.parameter}"
    out_dir.mkdir(parents=True, exist_ok=True)

    n = cfg.n_operators
    m = cfg.n_incumbents
    header = (
        [args.parameter, "seed"]
        + [f"share_op{i}" for i in range(n)]
        + [f"unallocated_inc{j}" for j in range(m)]
        + ["dissatisfaction", "jain_index"]
    )
    lines = [",".join(header)]
    for idx, result in enumerate(results):
        rep = result.report
        row = (
            [_fmt(values[idx]), str(result.config.seed)]
            + [_fmt(s) for s in rep.mean_shares]
            + [_fmt(u) for u in rep.unallocated]
            + [_fmt(rep.dissatisfaction), _fmt(rep.jain)]
        )
        lines.append(",".join(row))
        write_bundle(result, out_dir / f"{args.parameter}-{idx:02d}")
    (out_dir / "sweep.csv").write_text("\n".join(lines) + "\n")
    print(f"{len(results)} runs; table: {out_dir / 'sweep.csv'}")
    return EXIT_OK


def cmd_presets() -> int:
    for preset_name in PRESET_NAMES:
        print(describe_preset(preset_name))
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.verb == "presets":
            return cmd_presets()
        if args.verb == "run":
            return cmd_run(args)
        return cmd_sweep(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # pragma: no cover - defensive
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
