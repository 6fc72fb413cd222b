"""Rebuild the d=3 and d=4 cyclic examples and print their verdicts.

    python3 scripts/reproduce_examples.py
"""

import numpy as np

from margext.duality import state_from_kraus
from margext.extremality import is_extremal_kraus
from margext.fixtures import d3_kraus, d3_state_exact, d4_kraus
from margext.oracle import certify_verdict
from margext.states import MarginalPair, is_max_entangled_projector, partial_transpose_2


def show(name, fam, d):
    rho = state_from_kraus(fam)
    rep = is_extremal_kraus(fam, MarginalPair.maximally_mixed(d))
    pt_min = np.linalg.eigvalsh(partial_transpose_2(rho))[0]
    print(f"{name}: ell={rep.ell} joint_rank={rep.joint_rank}/{rep.ell**2} verdict={rep.verdict.value}")
    print(f"  exact oracle: {certify_verdict(fam, rep).value}")
    print(f"  state rank {rep.state_rank} < d^2 = {d * d}, singular={rep.singular}")
    print(f"  max entangled projector: {is_max_entangled_projector(rho)}, min PT eigenvalue {pt_min:.4f}")


def main():
    show("d=3 cyclic", d3_kraus(), 3)
    print("  6 * state:")
    for row in d3_state_exact():
        print("   ", " ".join(str(int(6 * x)) for x in row))
    show("d=4 cyclic", d4_kraus(), 4)


if __name__ == "__main__":
    main()
