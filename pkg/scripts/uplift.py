"""Supervised vs semi-supervised test F1 at L=100 on the synthetic fixture.

    python3 scripts/uplift.py --seeds 0 1 2 3 4 [--L 100] [--out uplift.tsv]
"""

import argparse
import logging
import sys
import time

from crisisgraph import experiments as X


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    ap.add_argument("--L", type=int, default=100)
    ap.add_argument("--out", help="TSV path (default stdout)")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s", stream=sys.stderr)

    fx = X.fixture()
    lines = ["seed\tsupervised_f1\tsemi_f1\tuplift"]
    t0 = time.perf_counter()
    for seed in args.seeds:
        r = X.uplift(fx, seed, L=args.L)
        lines.append(f"{seed}\t{r.supervised_f1:.4f}\t{r.semi_f1:.4f}\t{r.uplift:+.4f}")
        logging.info(lines[-1].replace("\t", "  "))
    wins = sum(float(l.split("\t")[3]) >= 0.03 for l in lines[1:])
    logging.info("%d/%d seeds with uplift >= 3 points, %.0fs", wins, len(args.seeds),
                 time.perf_counter() - t0)
    text = "\n".join(lines) + "\n"
    if args.out:
        open(args.out, "w").write(text)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    main()
