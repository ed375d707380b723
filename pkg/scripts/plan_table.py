"""Planned sample sizes over an (alpha, beta, d) grid, with the public-ERM comparison size.

Prints CSV: the semi-private plan, n_pub * alpha (flat under the 1/alpha law),
n_priv * alpha^2 (flat up to logs under the 1/alpha^2 law) and the number of
labeled examples a public-only learner would need at the same utility constant.
"""

import argparse
import csv
import math
import sys

from semipriv.hypothesis import Thresholds
from semipriv.learner import plan_sizes
from semipriv.reduction import ReductionConfig, completion_probability


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alphas", type=float, nargs="+", default=[0.2, 0.1, 0.05, 0.025, 0.0125])
    ap.add_argument("--betas", type=float, nargs="+", default=[0.05, 0.1])
    ap.add_argument("--dims", type=int, nargs="+", default=[1, 2])
    ap.add_argument("--epsilon", type=float, default=1.0)
    ap.add_argument("--reduction", action="store_true", help="also print the reduction instance sizes")
    args = ap.parse_args(argv)

    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["d", "alpha", "beta", "epsilon", "n_pub", "n_priv", "n_pub_x_alpha", "n_priv_x_alpha2",
                "public_only_n"])
    for d in args.dims:
        for beta in args.betas:
            for alpha in args.alphas:
                p = plan_sizes(d, alpha, beta, args.epsilon)
                # public-only agnostic learning needs on the order of d/alpha^2 labels
                public_only = math.ceil(4.0 * (d * math.log(math.e / alpha) + math.log(2 / beta)) / alpha**2)
                w.writerow([d, alpha, beta, args.epsilon, p.n_pub, p.n_priv, round(p.n_pub * alpha, 2),
                            round(p.n_priv * alpha**2, 2), public_only])
    if args.reduction:
        rc = ReductionConfig.for_cover_learner(Thresholds(), 0.0005, 2, args.epsilon)
        print(f"# reduction: n_priv={rc.n_priv} n_pub={rc.n_pub} tilde_n={rc.tilde_n} p={rc.p} "
              f"completion={completion_probability(rc):.6f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
