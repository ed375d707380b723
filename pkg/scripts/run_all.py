"""Run every experiment at its built-in scale and write results under one directory.

    python3 scripts/run_all.py --out results --only audit cover-rate
"""

import argparse
import logging
import os
import sys
import time

from semipriv.harness import run_experiment
from semipriv.harness.config import KINDS, ExperimentConfig, default_config

HERE = os.path.dirname(os.path.abspath(__file__))


def load(kind: str, config_dir: str | None) -> ExperimentConfig:
    path = os.path.join(config_dir, f"{kind}.json") if config_dir else None
    if path and os.path.exists(path):
        with open(path) as fh:
            return ExperimentConfig.from_json(fh.read())
    return default_config(kind)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--configs", default=os.path.join(HERE, "configs"), help="directory of <kind>.json files")
    ap.add_argument("--only", nargs="*", choices=KINDS, default=list(KINDS))
    ap.add_argument("--seed", type=int)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    log = logging.getLogger("run_all")

    all_ok = True
    for kind in args.only:
        cfg = load(kind, args.configs).with_overrides(seed=args.seed)
        out = os.path.join(args.out, kind)
        t0 = time.perf_counter()
        summary = run_experiment(cfg, out, workers=args.workers)
        log.info("== %s (%.0fs) -> %s", kind, time.perf_counter() - t0, out)
        for c in summary.checks:
            log.info("  %s  %s  (%s)", "PASS" if c.passed else "FAIL", c.name, c.detail)
        all_ok &= summary.passed
    return 0 if all_ok else 1


if __name__ == "__main__":
    sys.exit(main())
