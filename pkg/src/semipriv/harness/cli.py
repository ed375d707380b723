"""``semipriv <subcommand>``: run one experiment and report its checks.

Exit status is 0 when every check passes, 1 when any fails and 2 when the
configuration is rejected.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import KINDS, ConfigError, ExperimentConfig, default_config
from .experiments import run_experiment

log = logging.getLogger("semipriv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="semipriv", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind, help=f"run the {kind} experiment")
        p.add_argument("--config", help="JSON config file; defaults to the built-in instance")
        p.add_argument("--seed", type=int, help="root seed (overrides the config)")
        p.add_argument("--out", help="output directory for records and summaries")
        p.add_argument("--trials", type=int, help="trials per grid cell (overrides the config)")
        p.add_argument("--workers", type=int, default=1, help="worker processes for trials")
        p.add_argument("-q", "--quiet", action="store_true")
    return parser


def load_config(args) -> ExperimentConfig:
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = ExperimentConfig.from_json(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        if cfg.kind != args.kind:
            raise ConfigError(f"config is for {cfg.kind!r}, not {args.kind!r}")
    else:
        cfg = default_config(args.kind)
    return cfg.with_overrides(seed=args.seed, out=args.out, trials=args.trials)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    try:
        cfg = load_config(args)
        summary = run_experiment(cfg, workers=args.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    for check in summary.checks:
        log.info("%s  %s  (%s)", "PASS" if check.passed else "FAIL", check.name, check.detail)
    if cfg.out is None:
        log.info("%s", summary.rows_csv().rstrip())
    return 0 if summary.passed else 1


if __name__ == "__main__":
    sys.exit(main())
