"""Sample two-qubit states with maximally mixed marginals and tally verdicts.

Pure maximally entangled states should all come out extremal, and every
proper mixture of two distinct ones should come out split with a witness.

    python3 scripts/two_qubit_sampling.py --trials 500 --seed 1
"""

import argparse
from collections import Counter

import numpy as np

from margext.extremality import is_extremal_state
from margext.numerics import random_unitary
from margext.oracle import verify_decomposition
from margext.states import BipartiteState, MarginalPair, max_entangled


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    mm = MarginalPair.maximally_mixed(2)
    pure, mixed, witnessed = Counter(), Counter(), 0
    for _ in range(args.trials):
        p1 = max_entangled(2, random_unitary(2, rng)).projector()
        pure[is_extremal_state(p1, mm).verdict.value] += 1
        p2 = max_entangled(2, random_unitary(2, rng)).projector()
        if np.max(np.abs(p1.mat - p2.mat)) <= 0.1:
            continue
        t = rng.uniform(0.1, 0.9)
        rho = BipartiteState(2, t * p1.mat + (1 - t) * p2.mat)
        rep = is_extremal_state(rho, mm)
        mixed[rep.verdict.value] += 1
        witnessed += rep.witness is not None and verify_decomposition(rho, rep.witness, mm, 1e-9)

    print(f"pure:    {dict(pure)}")
    print(f"mixture: {dict(mixed)}, verified witnesses {witnessed}")


if __name__ == "__main__":
    main()
