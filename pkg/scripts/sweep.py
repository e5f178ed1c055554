"""Label-budget sweep (L = 100, 500, 2000, all) on the synthetic fixture.

Writes ``seed<TAB>budget<TAB>mode<TAB>weighted_p<TAB>weighted_r<TAB>weighted_f1``
rows and reports whether each mode's F1 curve is monotone per seed.

    python3 scripts/sweep.py --seeds 0 1 2 3 4 --out sweep.tsv
"""

import argparse
import logging
import sys

from crisisgraph import experiments as X
from crisisgraph.cli import table2


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    ap.add_argument("--out", help="TSV path (default stdout)")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s", stream=sys.stderr)

    fx = X.fixture()
    out = []
    for seed in args.seeds:
        rows = X.sweep(fx, seed)
        out += [f"{seed}\t{r.line()}" for r in rows]
        sys.stderr.write(f"seed {seed}\n{table2(rows)}")
        for mode in ("supervised", "semi"):
            f1 = [r.report.weighted_f1 for r in rows if r.mode == mode]
            logging.info("seed %d %s monotone=%s", seed, mode, X.nearly_monotone(f1))
    text = "\n".join(out) + "\n"
    if args.out:
        open(args.out, "w").write(text)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    main()
