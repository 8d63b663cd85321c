"""
Command-line entry point of the laboratory.

    lab verify-regions|verify-kernel|extremal-sweep|simulate|bounds --config <path> [--out <dir>] [--deterministic]

Exit codes: 0 when every check passes (or is not applicable), 1 when a
check fails or a computation breaks down, 2 on configuration or I/O errors.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from core.interfaces import CheckpointError, ConfigurationError, LabError
from lab.experiments import EXPERIMENTS, create_experiment
from lab.reporting import summary_lines, write_report
from utils.config import get_config, load_config_file
from utils.experiment_config import config_hash, load_experiment_config

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2

REPORT_FILE = "report.json"


def setup_logging() -> None:
    """Console logging from the system configuration, plus a file handler when logging.file is set."""
    level = getattr(logging, str(get_config("logging.level", "INFO")).upper(), logging.INFO)
    fmt = get_config("logging.format", "%(asctime)s - %(name)s - %(levelname)s - %(message)s")
    logging.basicConfig(level=level, format=fmt)
    log_file = get_config("logging.file", None)
    if log_file:
        handler = logging.FileHandler(log_file)
        handler.setFormatter(logging.Formatter(fmt))
        logging.getLogger().addHandler(handler)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lab", description="Half-plane Euler gradient-growth laboratory")
    parser.add_argument("--system-config", help="JSON system configuration overriding config/lab_config.json")
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    for name in EXPERIMENTS:
        sub = subparsers.add_parser(name)
        sub.add_argument("--config", required=True, help="Experiment configuration file")
        sub.add_argument("--out", help="Output directory (default: [run] output_dir)")
        sub.add_argument("--deterministic", action="store_true", help="Byte-identical outputs across reruns")
        if name == "simulate":
            sub.add_argument("--resume", help="Continue from a checkpoint file")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logger = logging.getLogger("lab")
    try:
        if args.system_config:
            load_config_file(args.system_config)
        setup_logging()
        config = load_experiment_config(args.config)
        if args.deterministic:
            config = config.model_copy(update={"run": config.run.model_copy(update={"deterministic": True})})
        output_dir = Path(args.out or config.run.output_dir)
        digest = config_hash(config)
        kwargs = {"resume": args.resume} if getattr(args, "resume", None) else {}
        experiment = create_experiment(args.subcommand, config, output_dir, digest, **kwargs)

        report = experiment.run()
        write_report(report, output_dir / REPORT_FILE)
    except (ConfigurationError, CheckpointError, OSError) as e:
        logger.error(f"{args.subcommand}: {e}")
        return EXIT_CONFIG
    except LabError as e:
        logger.error(f"{args.subcommand} failed: {e}")
        return EXIT_FAIL

    for line in summary_lines(report):
        print(line)
    status = "PASS" if report.passed else "FAIL"
    print(f"{args.subcommand}: {status} ({len(report.checks)} checks, report in {output_dir / REPORT_FILE})")
    return EXIT_PASS if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
