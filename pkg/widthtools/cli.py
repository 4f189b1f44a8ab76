import argparse
import sys
import traceback
from pathlib import Path
from typing import Any, Optional

import pandas as pd
import toml
from loguru import logger

from widthtools.configuration.configuration import (
    RunConfig,
    SweepConfig,
    load_run_config,
    load_sweep_config,
    run_config_from_mapping,
    sweep_config_from_mapping,
)
from widthtools.configuration.configure_logger import configure_logger
from widthtools.control.episode import run_batch
from widthtools.env.toy import make_toy_env
from widthtools.features.bprost import (
    BackgroundMap,
    BProstEncoder,
    FeatureLayout,
    TilingConfig,
    layout_sizes,
)
from widthtools.features.screen import read_screens
from widthtools.models.results import BatchResult, TerminationReason, write_jsonl
from widthtools.performance.monitor import PerformanceMonitor
from widthtools.utilities.exceptions import ConfigurationError, DimensionMismatchError, ScreenFormatError

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

# flag name -> configuration key
_EPISODE_FLAGS = (
    'planner', 'width', 'frameskip', 'budget_calls', 'budget_seconds', 'gamma', 'alpha',
    'max_frames', 'seed', 'families', 'tile_width', 'tile_height', 'calibration_actions',
)


def parse_value(text: str) -> Any:
    """Interpret a KEY=VALUE value as a TOML literal, falling back to a plain string"""
    try:
        return toml.loads(f"value = {text}")['value']
    except toml.TomlDecodeError:
        return text


def parse_env_args(pairs: Optional[list[str]]) -> dict[str, Any]:
    params = {}
    for pair in pairs or []:
        key, sep, value = pair.partition('=')
        if not sep:
            raise ConfigurationError(f"--env-arg expects KEY=VALUE, got {pair!r}")
        params[key.replace('-', '_')] = parse_value(value)
    return params


def collect_overrides(args: argparse.Namespace) -> dict[str, Any]:
    """Configuration keys given explicitly on the command line"""
    overrides = {key: getattr(args, key) for key in _EPISODE_FLAGS if getattr(args, key, None) is not None}
    for key in ('env', 'runs', 'out'):
        if getattr(args, key, None) is not None:
            overrides[key] = getattr(args, key)
    if getattr(args, 'env_arg', None):
        overrides['env_params'] = parse_env_args(args.env_arg)
    for key in ('caching', 'trace'):
        if getattr(args, key, False):
            overrides[key] = True
    if getattr(args, 'no_extension', False):
        overrides['extension'] = False
    return overrides


def _result_context(config: RunConfig) -> dict:
    return {'env': config.env, **config.episode.to_record()}


def execute_run(config: RunConfig, results_path: Optional[Path]) -> BatchResult:
    env_factory = lambda: make_toy_env(config.env, **dict(config.env_params))
    env_factory()  # fail fast on a bad environment before any episode runs
    if config.trace and results_path is not None:
        results_path.parent.mkdir(parents=True, exist_ok=True)
        with open(results_path.with_suffix('.trees.tsv'), 'w') as trees:
            batch = run_batch(env_factory, config.episode, config.runs, tree_out=trees)
    else:
        batch = run_batch(env_factory, config.episode, config.runs)
    rows = batch.to_rows(_result_context(config))
    if results_path is not None:
        write_jsonl(results_path, rows)
        if config.trace:
            records = [record for run in batch.runs for record in run.to_records()]
            write_jsonl(results_path.with_suffix('.trace.jsonl'), records)
    return batch


def cmd_run(args: argparse.Namespace) -> int:
    overrides = collect_overrides(args)
    config = load_run_config(args.config, overrides) if args.config else run_config_from_mapping(overrides)
    results_path = config.out
    batch = execute_run(config, results_path)
    print(f"{config.env} {config.episode.planner.value} budget={config.episode.budget_label} "
          f"runs={config.runs}: mean score {batch.mean_score:g}")
    if results_path is not None:
        print(f"results written to {results_path}")
    failed = [run.seed for run in batch.runs if run.terminated_by is TerminationReason.ERROR]
    if failed:
        print(f"{len(failed)} run(s) ended with an error: seeds {failed}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


def cmd_features(args: argparse.Namespace) -> int:
    if (args.tile_width is None) != (args.tile_height is None):
        raise ConfigurationError("--tile-width and --tile-height must be given together")
    screens = read_screens(args.fixture)
    current = screens[-1]
    previous = screens[-2] if len(screens) > 1 else None
    if args.tile_width is not None:
        tiling = TilingConfig(current.width // args.tile_width, current.height // args.tile_height,
                              args.tile_width, args.tile_height)
    elif current.shape == TilingConfig.atari().screen_shape:
        tiling = TilingConfig.atari()
    else:
        tiling = TilingConfig.per_pixel(current.width, current.height)
    tiling.check(current)
    if previous is not None and previous.shape != current.shape:
        raise DimensionMismatchError(current.shape, previous.shape)

    palette = max(screen.palette_size for screen in screens)
    sizes = layout_sizes(tiling, palette)
    background = BackgroundMap.from_screen(screens[0]) if args.background else None
    encoder = BProstEncoder(FeatureLayout(tiling, palette), background)
    state = encoder.encode(current, encoder.encode(previous) if previous is not None else None)

    print(f"screen {current.width}x{current.height}, palette {palette}, "
          f"tiles {tiling.tile_cols}x{tiling.tile_rows} of {tiling.tile_w}x{tiling.tile_h}")
    print(f"basic {sizes.basic}")
    print(f"bpros {sizes.bpros}")
    print(f"bprot {sizes.bprot}")
    print(f"total {sizes.total}")
    print(f"active {len(state.features)}")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    overrides = collect_overrides(args)
    for key in ('budgets', 'planners'):
        if getattr(args, key):
            overrides[key] = getattr(args, key)
    if args.seconds:
        overrides['seconds'] = True
    sweep: SweepConfig = load_sweep_config(args.config, overrides) if args.config \
        else sweep_config_from_mapping(overrides)
    cells = sweep.cells()
    if not cells:
        logger.info("cmd_sweep: empty matrix, nothing to run")
        return EXIT_OK

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = []
    failures = 0
    for cell in cells:
        label = f"{cell.env}__{cell.episode.planner.value}__{cell.episode.budget_label}"
        try:
            mean = execute_run(cell, out_dir / f"{label}.jsonl").mean_score
            summary.append({'env': cell.env, 'planner': cell.episode.planner.value,
                            'budget': cell.episode.budget_label, 'score': mean})
        except Exception:
            failures += 1
            logger.warning(f"cmd_sweep: cell {label} failed")
            logger.error(traceback.format_exc())

    if summary:
        table = pd.DataFrame(summary).pivot_table(index='env', columns=['planner', 'budget'], values='score')
        table.to_csv(out_dir / 'combined.csv')
        print(table.to_string())
    print(f"{len(cells) - failures} of {len(cells)} cells completed; results in {out_dir}")
    return EXIT_OK if failures == 0 else EXIT_FAILURE


def _add_episode_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="TOML file whose keys mirror these flags (flags win)")
    parser.add_argument("--env", help="Toy environment name (e.g. pixel-chain, collector-grid)")
    parser.add_argument("--env-arg", action="append", metavar="KEY=VALUE",
                        help="Environment parameter, repeatable (e.g. length=5)")
    parser.add_argument("--planner", help="iw, iwg, iws, rollout-iw, ra-rollout-iw or ras-rollout-iw")
    parser.add_argument("--width", type=int, help="Conjunction size k for IW(k) / Rollout IW(k)")
    parser.add_argument("--budget-calls", type=int, help="Simulator calls per decision (default mode)")
    parser.add_argument("--budget-seconds", type=float, help="Wall-clock seconds per decision")
    parser.add_argument("--frameskip", type=int)
    parser.add_argument("--gamma", type=float)
    parser.add_argument("--alpha", type=float, help="Risk-aversion multiplier for negative rewards")
    parser.add_argument("--max-frames", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--families", choices=['basic', 'bpros', 'bprost'])
    parser.add_argument("--tile-width", type=int)
    parser.add_argument("--tile-height", type=int)
    parser.add_argument("--calibration-actions", type=int)
    parser.add_argument("--caching", action="store_true", help="Reuse the executed subtree across decisions")
    parser.add_argument("--no-extension", action="store_true", help="Disable the no-change extension rule")
    parser.add_argument("--runs", type=int)
    parser.add_argument("--trace", action="store_true",
                        help="Also write per-decision records and lookahead tree dumps next to --out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Width-based planning benchmarks over pixel features")
    parser.add_argument("--log-level", default="WARNING", help="Console log level")
    parser.add_argument("--log-file", action="store_true", help="Also log at DEBUG level to ./logs")
    parser.add_argument("--perf-log", type=Path, help="Directory for JSONL performance logs")
    subparsers = parser.add_subparsers(dest='command', help='Available commands')

    run_parser = subparsers.add_parser('run', help='Run a batch of episodes')
    _add_episode_flags(run_parser)
    run_parser.add_argument("--out", type=Path, help="Results file (JSON lines)")

    features_parser = subparsers.add_parser('features', help='Feature-space sizes and active features of a screen fixture')
    features_parser.add_argument("fixture", type=Path, help="Screen file; the last two screens form the pair")
    features_parser.add_argument("--tile-width", type=int)
    features_parser.add_argument("--tile-height", type=int)
    features_parser.add_argument("--background", action="store_true",
                                 help="Mask pixels that match the first screen")

    sweep_parser = subparsers.add_parser('sweep', help='Run a budgets x planners x environments matrix')
    _add_episode_flags(sweep_parser)
    sweep_parser.add_argument("--budgets", type=float, nargs='*', help="Budget values (calls unless --seconds)")
    sweep_parser.add_argument("--planners", nargs='*')
    sweep_parser.add_argument("--seconds", action="store_true", help="Budgets are wall-clock seconds")
    sweep_parser.add_argument("--out-dir", type=Path, required=True)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logger(log_to_file=args.log_file, level=args.log_level)

    commands = {'run': cmd_run, 'features': cmd_features, 'sweep': cmd_sweep}
    if args.command not in commands:
        parser.print_help()
        return EXIT_USAGE

    monitor = None
    if args.perf_log is not None:
        monitor = PerformanceMonitor(output_dir=args.perf_log, save_log=True)
        monitor.start()
    try:
        return commands[args.command](args)
    except (ConfigurationError, ScreenFormatError, DimensionMismatchError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception:
        logger.error(traceback.format_exc())
        return EXIT_FAILURE
    finally:
        if monitor is not None:
            monitor.stop()


if __name__ == '__main__':
    sys.exit(main())
