"""Command-line entry point: ``crimecast {synth,validate,train,trials}``.

Exit codes: 0 success, 1 data validation failure, 2 bad arguments or config,
3 I/O error. Progress goes to stderr; results go to files only.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import checkpoint
from .config import CliConfig
from .exceptions import CrimecastError, DuplicateStateYear, InvalidArgument, MalformedRow
from .panel import STATE_CODES, load_panel, synthesize_panel, validate, write_panel
from .pipeline import run_pipeline, run_trials
from .report import (
    render_error_bars,
    write_error_bars_svg,
    write_per_state_csv,
    write_predictions_csv,
    write_report_json,
    write_timings_json,
    write_trials_csv,
)
from .training import TrainConfig

log = logging.getLogger("crimecast")

EXIT_OK, EXIT_INVALID_DATA, EXIT_BAD_ARGS, EXIT_IO = 0, 1, 2, 3

_DEFAULTS = TrainConfig()
_CLI_DEFAULTS = CliConfig()

# (flag, TrainConfig field, type)
_TRAIN_FLAGS = (
    ("--learning-rate", "learning_rate", float),
    ("--epochs", "epochs", int),
    ("--batch-size", "batch_size", int),
    ("--es-patience", "es_patience", int),
    ("--lr-patience", "lr_patience", int),
    ("--lr-factor", "lr_factor", float),
    ("--min-lr", "min_lr", float),
)
_FEATURE_FLAGS = (
    ("--lag", "lag", int),
    ("--rolling-mean-window", "rolling_mean_window", int),
    ("--rolling-std-window", "rolling_std_window", int),
)


class _UsageError(Exception):
    pass


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration")
    common.add_argument("--out", type=Path, help="output directory (default: config out_dir, else 'out')")
    common.add_argument("--seed", type=int, help="random seed (overrides the config)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for trials (default: 1)")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging to stderr")
    return common


def _add_run_flags(parser: argparse.ArgumentParser, trials: bool) -> None:
    parser.add_argument("--data", help=f"panel CSV (default: config data_path, else {_CLI_DEFAULTS.data_path})")
    for flag, name, kind in _TRAIN_FLAGS:
        parser.add_argument(flag, dest=name, type=kind, default=None,
                            help=f"(default: {getattr(_DEFAULTS, name)})")
    for flag, name, kind in _FEATURE_FLAGS:
        parser.add_argument(flag, dest=name, type=kind, default=None,
                            help=f"(default: {getattr(_CLI_DEFAULTS, name)})")
    if trials:
        parser.add_argument("--n-trials", dest="n_trials", type=int, default=None,
                            help=f"(default: {_CLI_DEFAULTS.n_trials})")
        parser.add_argument("--inline-timing", action="store_true",
                            help="also put wall/CPU times in trials.csv and report.json; "
                                 "they always go to timings.json (default: off, so reruns "
                                 "reproduce those files exactly)")


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="crimecast", description=__doc__.splitlines()[0],
                                     formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", parents=[common], help="write a synthetic panel CSV",
                           formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    synth.add_argument("--states", type=int, default=50,
                       help=f"number of states, at most {len(STATE_CODES)}")
    synth.add_argument("--first-year", type=int, default=2000)
    synth.add_argument("--years", type=int, default=20)
    synth.add_argument("--output", "-o", default="panel.csv",
                       help="file name, relative to --out when that is given")

    val = sub.add_parser("validate", parents=[common], help="check a panel CSV")
    val.add_argument("data", nargs="?", help="panel CSV (default: config data_path)")

    train = sub.add_parser("train", parents=[common], help="train once and predict the last year")
    _add_run_flags(train, trials=False)

    trials = sub.add_parser("trials", parents=[common], help="repeated seeded trials with reports")
    _add_run_flags(trials, trials=True)
    return parser


def _resolve_config(args: argparse.Namespace) -> CliConfig:
    config = CliConfig.load(args.config) if args.config else CliConfig()
    train_overrides = {name: getattr(args, name) for _, name, _ in _TRAIN_FLAGS
                       if getattr(args, name, None) is not None}
    train = replace(config.train, **train_overrides) if train_overrides else config.train
    overrides = {name: getattr(args, name) for _, name, _ in _FEATURE_FLAGS
                 if getattr(args, name, None) is not None}
    if getattr(args, "n_trials", None) is not None:
        overrides["n_trials"] = args.n_trials
    if args.data:
        overrides["data_path"] = args.data
    if args.out:
        overrides["out_dir"] = str(args.out)
    if args.seed is not None:
        if args.command == "trials":
            overrides["base_seed"] = args.seed
        else:
            train = replace(train, seed=args.seed)
    return replace(config, train=train, **overrides)


def _prepare_out_dir(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    probe = path / ".crimecast-write-test"
    probe.write_bytes(b"")
    probe.unlink()
    return path


def _load_valid(path: str):
    dataset = load_panel(path)
    report = validate(dataset)
    if not report.is_valid:
        print(report, file=sys.stderr)
        raise _InvalidData(f"{path} has {len(report.errors)} validation errors")
    return dataset


class _InvalidData(Exception):
    pass


def cmd_synth(args) -> int:
    if not 1 <= args.states <= len(STATE_CODES):
        raise _UsageError(f"--states must be between 1 and {len(STATE_CODES)} (one per US state), "
                          f"got {args.states}")
    if args.years < 1:
        raise _UsageError(f"--years must be >= 1, got {args.years}")
    seed = 0 if args.seed is None else args.seed
    dataset = synthesize_panel(seed, args.states, args.first_year, args.years)
    target = Path(args.output)
    if args.out is not None:
        target = _prepare_out_dir(args.out) / target
    write_panel(dataset, target)
    log.info("wrote %d records to %s", len(dataset), target)
    return EXIT_OK


def cmd_validate(args) -> int:
    path = args.data
    if path is None:
        if args.config is None:
            raise _UsageError("validate needs a data path or --config")
        path = CliConfig.load(args.config).data_path
    try:
        dataset = load_panel(path)
    except (MalformedRow, DuplicateStateYear) as exc:
        print(f"1 errors\n{exc}")
        return EXIT_INVALID_DATA
    report = validate(dataset)
    print(report)
    return EXIT_OK if report.is_valid else EXIT_INVALID_DATA


def cmd_train(args) -> int:
    config = _resolve_config(args)
    out = _prepare_out_dir(Path(config.out_dir))
    dataset = _load_valid(config.data_path)
    log.info("training on %s (%d states)", config.data_path, len(dataset.states))
    result = run_pipeline(dataset, config.train, config.features)
    checkpoint.save(result.model.params_, out / "model.ckpt")
    result.model.train_log_.to_csv(out / "train_log.csv")
    write_predictions_csv(result.predictions, out / "predictions.csv")
    log.info("stopped at epoch %d, best epoch %d; outputs in %s",
             result.model.train_log_.stopped_epoch, result.model.train_log_.best_epoch, out)
    return EXIT_OK


def cmd_trials(args) -> int:
    config = _resolve_config(args)
    if args.jobs < 1:
        raise _UsageError(f"--jobs must be >= 1, got {args.jobs}")
    out = _prepare_out_dir(Path(config.out_dir))
    dataset = _load_valid(config.data_path)
    trials, report = run_trials(dataset, config.train, config.n_trials, config.base_seed,
                                config.features, jobs=args.jobs)
    write_trials_csv(trials, out / "trials.csv", include_timing=args.inline_timing)
    write_per_state_csv(report, out / "per_state.csv")
    write_report_json(report, out / "report.json", include_timing=args.inline_timing)
    write_timings_json(trials, report, out / "timings.json")
    _, svg = render_error_bars(report)
    write_error_bars_svg(svg, out / "error_bars.svg")
    log.info("mean total loss %.2f, mean test MSE %.2f over %d trials (mean %.2fs wall, %.2fs cpu)",
             report.total_loss.mean, report.test_mse.mean, report.n_trials,
             report.wall_time_s.mean, report.cpu_time_s.mean)
    return EXIT_OK


COMMANDS = {"synth": cmd_synth, "validate": cmd_validate, "train": cmd_train, "trials": cmd_trials}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr, force=True)
    try:
        return COMMANDS[args.command](args)
    except (_UsageError, InvalidArgument) as exc:
        print(f"crimecast {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_BAD_ARGS
    except (_InvalidData, MalformedRow, DuplicateStateYear) as exc:
        print(f"crimecast {args.command}: invalid data: {exc}", file=sys.stderr)
        return EXIT_INVALID_DATA
    except OSError as exc:
        print(f"crimecast {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except CrimecastError as exc:
        print(f"crimecast {args.command}: {exc}", file=sys.stderr)
        return EXIT_INVALID_DATA


if __name__ == "__main__":
    sys.exit(main())
