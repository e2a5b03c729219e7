"""
NC-Depth Main Entry Point
Command-line interface: train with checkpointed NC analysis, analyze activation
dumps, and turn a saved report into plot tables

Exit codes: 0 success, 1 runtime failure, 2 usage/parse failure.
"""

from pathlib import Path
from typing import Any, Dict, List, Optional
import argparse
import sys

import yaml
from pydantic import ValidationError
from loguru import logger

from .config import ConfigManager, ExperimentConfig, settings
from .experiment_layer import ExperimentRunner, NcReport, ReportWriter, trend_summary
from .metrics_layer import DumpFormatError, LayerMetrics, analyze_layer, dump_model_layers, read_dump
from .model_layer import forward, save_model
from .utils import configure_logging, load_json


EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

ACTIVATION_CHOICES = ("relu", "tanh", "leakyrelu")


def collect_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """
    Map train flags onto dotted config keys

    `--seed` sets every seed; the specific `--seed-*` flags win over it.
    """
    overrides: Dict[str, Any] = {}
    if args.seed is not None:
        for key in ('seeds.model', 'seeds.data', 'seeds.subsample'):
            overrides[key] = args.seed

    overrides.update({
        'seeds.model': args.seed_model if args.seed_model is not None else overrides.get('seeds.model'),
        'seeds.data': args.seed_data if args.seed_data is not None else overrides.get('seeds.data'),
        'seeds.subsample': (
            args.seed_subsample if args.seed_subsample is not None else overrides.get('seeds.subsample')
        ),
        'training.epochs': args.epochs,
        'model.width': args.width,
        'model.depth': args.depth,
        'model.activation': args.activation,
        'analysis.coord_cap': args.coord_cap,
        'schedule.max_lr': args.max_lr,
        'training.tpt_factor': args.tpt_factor,
        'data.per_class_n': args.per_class_n
    })

    if args.images is not None or args.labels is not None:
        overrides.update({
            'data.source': 'idx',
            'data.images': args.images,
            'data.labels': args.labels
        })
    return overrides


def load_experiment_config(config_path: Optional[Path], overrides: Dict[str, Any]) -> ExperimentConfig:
    """
    Read the YAML file, apply flag overrides and validate

    Raises:
        FileNotFoundError, yaml.YAMLError, ValueError (incl. ValidationError)
    """
    manager = ConfigManager(config_path)
    manager.apply_overrides(overrides)
    return manager.build_experiment_config()


def cmd_train(args: argparse.Namespace) -> int:
    """
    Run one experiment and write nc_report.json, nc_report.csv and model.ncmd

    With --dump-activations the trained model's hidden layers on the training
    set also go to activations/layer_<j>.ncad, ready for the analyze command.
    """
    try:
        config = load_experiment_config(args.config, collect_overrides(args))
    except (FileNotFoundError, yaml.YAMLError, ValidationError, ValueError) as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_USAGE

    out_dir = Path(args.out_dir)
    runner = ExperimentRunner(config)
    writer = ReportWriter(out_dir)

    try:
        report = runner.run()
    except Exception as e:
        logger.exception(f"Training failed: {e}")
        if runner.report is not None and runner.report.checkpoints:
            writer.write_report(runner.report)
            logger.info(f"Partial report with {len(runner.report.checkpoints)} checkpoints flushed to {out_dir}")
        return EXIT_RUNTIME

    writer.write_report(report)
    save_model(runner.model, out_dir / "model.ncmd")
    if args.dump_activations:
        trace = forward(runner.model, runner.dataset.inputs)
        dump_model_layers(
            out_dir / "activations",
            trace.post_activations,
            runner.dataset.labels,
            trace.predictions,
            runner.dataset.class_count
        )
    logger.info(f"Training complete; reports in {out_dir}")
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    """One LayerMetrics row per dump file, in argument order, written to nc_analysis.csv"""
    paths: List[Path] = [Path(p) for p in [*args.paths, *(args.dump or [])]]
    if not paths:
        logger.error("analyze needs at least one dump file")
        return EXIT_USAGE

    rows: List[LayerMetrics] = []
    for position, path in enumerate(paths, start=1):
        try:
            dump = read_dump(path)
        except (DumpFormatError, OSError) as e:
            logger.error(f"Cannot read activation dump {path}: {e}")
            return EXIT_USAGE

        try:
            rows.append(analyze_layer(
                dump.activations,
                dump.labels,
                dump.predictions,
                cap=args.coord_cap,
                seed=args.seed_subsample,
                layer=position,
                class_count=dump.class_count
            ))
        except Exception as e:
            logger.exception(f"Analysis of {path} failed: {e}")
            return EXIT_RUNTIME

    ReportWriter(Path(args.out_dir)).write_analysis_csv(rows, [str(p) for p in paths])
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    """Per-metric plot tables plus trend_summary.json from a saved report"""
    try:
        report = NcReport.model_validate(load_json(args.report))
    except (OSError, ValueError) as e:
        logger.error(f"Cannot read report {args.report}: {e}")
        return EXIT_USAGE

    if not report.checkpoints:
        logger.error(f"Report {args.report} has no checkpoints")
        return EXIT_USAGE

    writer = ReportWriter(Path(args.out_dir))
    writer.write_plot_tables(report)
    writer.write_trend_summary(trend_summary(report))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='nc-depth',
        description='Layer-wise Neural Collapse analysis for small MLP classifiers'
    )
    parser.add_argument('--log-level', default=settings.log_level, help='Logging level (default: %(default)s)')
    parser.add_argument('--out-dir', default=settings.output_dir, help='Output directory (default: %(default)s)')
    subparsers = parser.add_subparsers(dest='command', required=True)

    train = subparsers.add_parser('train', help='Train an MLP with checkpointed NC analysis')
    train.add_argument('--config', type=Path, default=None, help='YAML experiment config')
    train.add_argument('--seed', type=int, help='Base seed for model, data and subsample')
    train.add_argument('--seed-model', type=int)
    train.add_argument('--seed-data', type=int)
    train.add_argument('--seed-subsample', type=int)
    train.add_argument('--epochs', type=int)
    train.add_argument('--width', type=int)
    train.add_argument('--depth', type=int)
    train.add_argument('--activation', choices=ACTIVATION_CHOICES)
    train.add_argument('--coord-cap', type=int)
    train.add_argument('--max-lr', type=float)
    train.add_argument('--images', type=Path, help='IDX image file (switches data source to idx)')
    train.add_argument('--labels', type=Path, help='IDX label file')
    train.add_argument('--per-class-n', type=int, help='Rebalance to this many samples per class')
    train.add_argument('--tpt-factor', type=float, help='Train until this multiple of the first zero-error epoch')
    train.add_argument('--dump-activations', action='store_true',
                       help='Write NCAD dumps of every hidden layer of the trained model')
    train.set_defaults(handler=cmd_train)

    analyze = subparsers.add_parser('analyze', help='NC metrics of external activation dumps')
    analyze.add_argument('paths', nargs='*', help='Activation dump files')
    analyze.add_argument('--dump', action='append', help='Activation dump file (repeatable)')
    analyze.add_argument('--coord-cap', type=int, default=2048)
    analyze.add_argument('--seed-subsample', type=int, default=0)
    analyze.set_defaults(handler=cmd_analyze)

    report = subparsers.add_parser('report', help='Plot tables and trend summary from a report JSON')
    report.add_argument('report', type=Path, help='nc_report.json')
    report.set_defaults(handler=cmd_report)

    for sub in (train, analyze, report):
        sub.add_argument('--out-dir', default=argparse.SUPPRESS, help='Output directory')

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for command-line usage"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    configure_logging(args.log_level, settings.log_dir)
    logger.info(f"nc-depth {args.command}")
    return args.handler(args)


if __name__ == '__main__':
    sys.exit(main())
