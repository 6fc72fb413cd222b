"""Look for extremal, non maximally entangled states with maximally mixed marginals.

Candidates are built from partial permutation matrices; every hit is checked by
the exact rank oracle before it is printed.

    python3 scripts/search_higher_d.py --dims 3 4 5 --attempts 300
"""

import argparse

import numpy as np

from margext.extremality import sqrt2d_limit
from margext.fixtures import search_extremal_candidate
from margext.oracle import certify_verdict


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dims", type=int, nargs="+", default=[3, 4, 5])
    ap.add_argument("--attempts", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    for d in args.dims:
        for ell in range(2, sqrt2d_limit(d) + 1):
            hit = search_extremal_candidate(d, ell, attempts=args.attempts, seed=args.seed)
            if hit is None:
                print(f"d={d} ell={ell}: nothing in {args.attempts} attempts")
                continue
            fam, rep = hit
            print(f"d={d} ell={ell}: joint_rank={rep.joint_rank} oracle={certify_verdict(fam, rep).value}")
            for j, v in enumerate(fam, 1):
                support = [(int(r) + 1, int(c) + 1) for r, c in zip(*np.nonzero(v))]
                print(f"  V{j} support {support}")


if __name__ == "__main__":
    main()
