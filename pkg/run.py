import argparse
import logging
import os
import sys

from pydantic import ValidationError

from srlab.artifacts import (
    emit_bounds_csv,
    emit_bounds_svg,
    emit_csv,
    emit_pulls_csv,
    emit_svg,
    emit_sweep_csv,
    emit_sweep_svg,
)
from srlab.config_loader import load_config
from srlab.errors import ConfigError
from srlab.experiment_runner import ExperimentRunner
from srlab.lemma_checks import LEMMA_NAMES, verify_lemmas

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_LEMMA = 2
EXIT_IO = 3

# Ensure logs directory exists
os.makedirs('logs', exist_ok=True)

# Setup Logging with UTF-8 support for Emojis
logging.basicConfig(
    level=logging.INFO,  # adjusted after config load
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=[
        logging.FileHandler('logs/srlab.log', encoding='utf-8'),
        logging.StreamHandler()
    ]
)

logger = logging.getLogger("CLI")


def set_log_level(level):
    level = level.upper()
    logging.getLogger().setLevel(getattr(logging, level, logging.INFO))
    logger.debug(f"Log level set to: {level}")


def build_parser():
    parser = argparse.ArgumentParser(prog="run.py", description="Sharpe-ratio bandit laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_config=True):
        if with_config:
            p.add_argument("config", help="YAML experiment config")
        p.add_argument("--seed", type=int, default=None, help="override base_seed")
        p.add_argument("--jobs", type=int, default=1, help="worker processes (0 = all cores)")
        p.add_argument("--out", default=None, help="override output_dir")
        p.add_argument("--full", action="store_true", help="emit every round instead of the decimated grid")
        p.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING, ERROR or CRITICAL")

    common(sub.add_parser("run", help="run every policy at the config's rho"))
    common(sub.add_parser("sweep-rho", help="run every policy over rho_grid"))
    common(sub.add_parser("bounds", help="emit the Theorem 2/3 bound curves only"))
    verify = sub.add_parser("verify-lemmas", help="check the tail-bound lemmas and the Efron-Stein limit")
    common(verify, with_config=False)
    verify.add_argument("--corrupt", choices=LEMMA_NAMES, default=None, help=argparse.SUPPRESS)
    return parser


def prepare_config(args):
    config = load_config(args.config)
    try:
        config = config.with_overrides(seed=args.seed, out=args.out, full=args.full, log_level=args.log_level)
    except ValidationError as e:
        first = e.errors()[0]
        raise ConfigError(first["msg"], field=".".join(str(p) for p in first["loc"]))
    set_log_level(config.log_level)
    return config


def cmd_run(args):
    config = prepare_config(args)
    result = ExperimentRunner(config, args.jobs).run()
    out = config.output_dir
    if config.emit.csv:
        emit_csv(result, os.path.join(out, "regret.csv"))
        emit_pulls_csv(result, os.path.join(out, "pulls.csv"))
    if config.emit.svg:
        emit_svg(result, os.path.join(out, "regret.svg"))
    logger.info(f"✅ Run complete, artifacts in {out}")
    return EXIT_OK


def cmd_sweep(args):
    config = prepare_config(args)
    if not config.rho_grid:
        raise ConfigError("sweep-rho needs a rho_grid", field="rho_grid")
    runner = ExperimentRunner(config, args.jobs)
    sweep = runner.sweep()
    out = config.output_dir
    if config.emit.csv:
        emit_sweep_csv(sweep.rows, os.path.join(out, "sweep.csv"), runner.config_hash)
        for result in sweep.results:
            emit_csv(result, os.path.join(out, f"regret_rho{result.rho:g}.csv"))
    if config.emit.svg:
        emit_sweep_svg(sweep.rows, os.path.join(out, "sweep.svg"), runner.config_hash)
    logger.info(f"✅ Sweep complete, artifacts in {out}")
    return EXIT_OK


def cmd_bounds(args):
    config = prepare_config(args)
    runner = ExperimentRunner(config, args.jobs)
    curves = runner.bounds()
    out = config.output_dir
    if config.emit.csv:
        emit_bounds_csv(curves, os.path.join(out, "bounds.csv"), runner.config_hash)
    if config.emit.svg:
        emit_bounds_svg(curves, os.path.join(out, "bounds.svg"), runner.config_hash)
    logger.info(f"✅ Bound curves written to {out}")
    return EXIT_OK


def cmd_verify(args):
    if args.log_level:
        set_log_level(args.log_level)
    kwargs = {"corrupt": args.corrupt}
    if args.seed is not None:
        kwargs["seed"] = args.seed
    report = verify_lemmas(**kwargs)
    print(report.format_table())
    if not report.passed:
        logger.error(f"❌ Lemma verification failed: {', '.join(report.failures())}")
        return EXIT_LEMMA
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "sweep-rho": cmd_sweep,
    "bounds": cmd_bounds,
    "verify-lemmas": cmd_verify,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as e:
        logger.error(f"❌ Config error: {e}")
        return EXIT_CONFIG
    except OSError as e:
        logger.error(f"❌ IO error: {e}")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
