"""Command line entry point: ``ladfusion <subcommand> [options]``.

Exit codes: 0 success, 2 invalid configuration or input, 3 numerical failure.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import yaml

from .exceptions import InvalidArgumentError, ResolutionError, SolverError
from .experiments import make_config, run, run_embed, write_result
from .kernels import load_points_csv

log = logging.getLogger("ladfusion")

SUBCOMMANDS = {
    "generate": "generate",
    "embed": "embed",
    "landmark-sweep": "landmark_sweep",
    "alpha-sweep": "alpha_sweep",
    "initial-sensor": "initial_sensor",
    "landmark-cases": "landmark_cases",
    "variance-rate": "variance_rate",
    "bench": "bench_timing",
}

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def load_config_file(path):
    """Key-value overrides from a JSON or YAML file."""
    text = Path(path).read_text()
    try:
        data = json.loads(text) if str(path).endswith(".json") else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise InvalidArgumentError(f"cannot parse config {path}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise InvalidArgumentError(f"config {path} must hold a mapping")
    return data


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ladfusion",
        description="Alternating diffusion and landmark alternating diffusion experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON or YAML file of config overrides")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--paper-scale", action="store_true",
                       help="use the larger sample sizes of the original experiments")
        p.add_argument("--threads", type=int, help="BLAS/LAPACK thread limit")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "embed":
            p.add_argument("--sensor1", help="CSV of sensor-1 samples, one row per sample")
            p.add_argument("--sensor2", help="CSV of sensor-2 samples, aligned rows")
            p.add_argument("--header", action="store_true", help="CSV files have a header row")
            p.add_argument("--method", choices=["lad", "ad", "dm1", "dm2"])
        if name == "variance-rate":
            p.add_argument("--setup", choices=["S1", "S2"], default="S1")
    return parser


def _overrides(args):
    ov = load_config_file(args.config) if args.config else {}
    if args.seed is not None:
        ov["seed"] = args.seed
    if getattr(args, "method", None):
        ov["method"] = args.method
    if getattr(args, "setup", None) == "S2":
        ov["setup"] = "S2"
    if getattr(args, "sensor1", None):
        ov["input1"] = args.sensor1
    if getattr(args, "sensor2", None):
        ov["input2"] = args.sensor2
    if getattr(args, "header", False):
        ov["header"] = True
    if args.out is not None:
        ov["out"] = args.out
    return ov


def _execute(args):
    cfg = make_config(SUBCOMMANDS[args.command], _overrides(args), args.paper_scale)
    if cfg.experiment_id == "embed" and (cfg.input1 or cfg.input2):
        if not (cfg.input1 and cfg.input2):
            raise InvalidArgumentError("embed needs both --sensor1 and --sensor2")
        X1 = load_points_csv(cfg.input1, header=cfg.header)
        X2 = load_points_csv(cfg.input2, header=cfg.header)
        result = run_embed(cfg, X1, X2)
    else:
        result = run(cfg)
    manifest = write_result(result, cfg.out)
    log.info("wrote %s", manifest)
    print(json.dumps({"manifest": str(manifest)}))


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.threads:
            from threadpoolctl import threadpool_limits
            with threadpool_limits(limits=args.threads):
                _execute(args)
        else:
            _execute(args)
    except (InvalidArgumentError, ResolutionError, FileNotFoundError) as exc:
        print(f"ladfusion: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, ZeroDivisionError, FloatingPointError) as exc:
        print(f"ladfusion: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
