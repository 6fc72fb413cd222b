import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from margext.duality import KrausFamily, kraus_from_state, random_kraus, state_from_kraus
from margext.extremality import (
    Lemma2Class,
    MembershipError,
    Verdict,
    build_joint_family,
    build_witness,
    check_rank_bounds,
    is_extremal_kraus,
    is_extremal_state,
    jointly_independent,
    lemma2_check,
    sqrt2d_limit,
)
from margext.fixtures import d3_kraus, d3_state_matrix, d4_kraus
from margext.numerics import random_unitary
from margext.oracle import verify_decomposition
from margext.states import (
    BipartiteState,
    MarginalPair,
    in_C,
    max_entangled,
    random_bipartite,
)

X = np.array([[0, 1], [1, 0]], dtype=complex)
seeds = st.integers(min_value=0, max_value=2**32 - 1)
BELL_PAIR = KrausFamily.of([np.eye(2) / np.sqrt(2), X / np.sqrt(2)])


def ket_bra(d, a, b):
    """|a><b| with 1-based labels."""
    m = np.zeros((d, d))
    m[a - 1, b - 1] = 1
    return m


def test_joint_family_single_unitary(rng):
    u = random_unitary(3, rng)
    jf = build_joint_family(KrausFamily(3, u[None]))
    assert jf.stacked.shape == (1, 18)
    assert np.allclose(jf.stacked[0], np.concatenate([np.eye(3).ravel()] * 2))


def test_joint_family_d3_products_table():
    jf = build_joint_family(d3_kraus())
    left = jf.left.reshape(3, 3, 3, 3)
    right = jf.right.reshape(3, 3, 3, 3)
    # (i, j) -> (a, b) for V_i^dagger V_j = (1/2)|a><b|, with the matching V_j V_i^dagger entry
    table = {
        (1, 2): ((3, 2), (1, 3)),
        (1, 3): ((1, 2), (2, 3)),
        (2, 3): ((1, 3), (2, 1)),
        (2, 1): ((2, 3), (3, 1)),
        (3, 1): ((2, 1), (1, 2)),
        (3, 2): ((3, 1), (3, 2)),
    }
    for (i, j), (lab, _) in table.items():
        assert np.allclose(left[i - 1, j - 1], ket_bra(3, *lab) / 2)
    # V3 V1^dagger = V1^dagger V2, etc.: the right family is a relabelling of the left
    assert np.allclose(right[0, 2], left[0, 1])  # V3 V1^dagger
    assert np.allclose(right[1, 2], left[0, 2])  # V3 V2^dagger
    assert np.allclose(right[1, 0], left[1, 2])  # V1 V2^dagger
    assert np.allclose(right[2, 0], left[1, 0])  # V1 V3^dagger
    assert np.allclose(right[2, 1], left[2, 0])  # V2 V3^dagger
    assert np.allclose(right[0, 1], left[2, 1])  # V2 V1^dagger
    for i in range(3):
        assert np.allclose(np.diag(np.diag(left[i, i])), left[i, i])


def test_joint_family_bell_pair():
    jf = build_joint_family(BELL_PAIR)
    assert jf.stacked.shape == (4, 8)
    assert np.allclose(jf.stacked[0], jf.stacked[3])
    for m in list(jf.left) + list(jf.right):
        assert np.allclose(m, np.eye(2) / 2) or np.allclose(m, X / 2)


def test_jointly_independent_fixtures():
    res = jointly_independent(build_joint_family(d3_kraus()))
    assert res.independent and res.joint_rank == 9 and res.kernel is None
    res = jointly_independent(build_joint_family(d4_kraus()))
    assert res.independent and res.joint_rank == 16


def test_jointly_independent_bell_pair_kernel():
    jf = build_joint_family(BELL_PAIR)
    res = jointly_independent(jf)
    assert not res.independent
    assert np.linalg.norm(res.kernel) == pytest.approx(1)
    assert np.max(np.abs(res.kernel.reshape(-1) @ jf.stacked)) <= 1e-12
    lam = np.diag([1, -1]) / np.sqrt(2)
    basis = res.kernel_basis.reshape(len(res.kernel_basis), -1)
    coef = basis.conj() @ lam.reshape(-1)
    assert np.allclose(coef @ basis, lam.reshape(-1))


def test_sufficiency_class_examples():
    assert lemma2_check(build_joint_family(d3_kraus())) is Lemma2Class.LEFT_INDEPENDENT
    jf = build_joint_family(d3_kraus())
    n = jf.ell**2
    assert np.linalg.matrix_rank(jf.right.reshape(n, -1)) == n
    assert lemma2_check(build_joint_family(BELL_PAIR)) is Lemma2Class.NOT_JOINT


def test_neither_but_joint_found_by_search():
    # brute force over small random families: 16 products in a 9-dimensional
    # space are always dependent, while 16 direct sums in 18 dimensions need not be
    rng = np.random.default_rng(7)
    found = None
    for _ in range(50):
        jf = build_joint_family(random_kraus(3, 4, rng))
        if lemma2_check(jf) is Lemma2Class.NEITHER_BUT_JOINT:
            found = jf
            break
    assert found is not None
    n = found.ell**2
    assert np.linalg.matrix_rank(found.left.reshape(n, -1)) < n
    assert np.linalg.matrix_rank(found.right.reshape(n, -1)) < n
    assert np.linalg.matrix_rank(found.stacked) == n


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(2, 4), st.integers(1, 5))
def test_one_sided_independence_is_sufficient(seed, d, ell):
    jf = build_joint_family(random_kraus(d, ell, np.random.default_rng(seed)))
    cls = lemma2_check(jf)
    if cls in (Lemma2Class.LEFT_INDEPENDENT, Lemma2Class.RIGHT_INDEPENDENT):
        assert jointly_independent(jf).independent


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(2, 4), st.integers(1, 4))
def test_dependent_families_are_not_joint(seed, d, ell):
    rng = np.random.default_rng(seed)
    base = random_kraus(d, ell, rng)
    c = rng.standard_normal(ell) + 1j * rng.standard_normal(ell)
    extra = np.einsum("i,iab->ab", c, base.ops)
    fam = KrausFamily(d, np.concatenate([base.ops, extra[None]]))
    assert not jointly_independent(build_joint_family(fam)).independent


def test_check_rank_bounds():
    assert check_rank_bounds(3, 3) == (True, True)
    assert check_rank_bounds(2, 2) == (True, True)
    assert check_rank_bounds(3, 2) == (False, False)
    for d in range(1, 11):
        for ell in (sqrt2d_limit(d), sqrt2d_limit(d) + 1):
            a, b = check_rank_bounds(ell, d)
            assert (not b) or a
            assert a == (ell * ell <= 2 * d * d)
    with pytest.raises(ValueError):
        check_rank_bounds(0, 2)


def test_extremal_kraus_examples(rng):
    for d in (2, 3, 4):
        u = random_unitary(d, rng)
        rep = is_extremal_kraus(KrausFamily(d, u[None]), MarginalPair.maximally_mixed(d))
        assert rep.verdict is Verdict.EXTREMAL and rep.ell == 1
    rep = is_extremal_kraus(d3_kraus(), MarginalPair.maximally_mixed(3))
    assert rep.verdict is Verdict.EXTREMAL
    assert rep.ell == 3 and rep.joint_rank == 9
    assert rep.bound_sqrt2d and rep.bound_parthasarathy and rep.singular
    rep = is_extremal_kraus(BELL_PAIR, MarginalPair.maximally_mixed(2))
    assert rep.verdict is Verdict.NOT_EXTREMAL
    assert rep.witness is not None


def test_extremal_kraus_preconditions():
    with pytest.raises(MembershipError):
        is_extremal_kraus(d3_kraus(), MarginalPair.of(np.diag([1, 0, 0]), np.eye(3) / 3))
    dep = KrausFamily.of([np.eye(2) / 2, np.eye(2) / 2, X / np.sqrt(2)])
    with pytest.raises(ValueError):
        is_extremal_kraus(dep, MarginalPair.maximally_mixed(2))


@pytest.mark.parametrize("d", [2, 3, 4, 5, 6])
def test_psi_plus_is_extremal(d):
    rep = is_extremal_state(max_entangled(d).projector(), MarginalPair.maximally_mixed(d))
    assert rep.verdict is Verdict.EXTREMAL
    assert rep.state_rank == 1


def test_d3_state_is_extremal():
    rep = is_extremal_state(d3_state_matrix(), MarginalPair.maximally_mixed(3))
    assert rep.verdict is Verdict.EXTREMAL
    assert rep.joint_rank == 9 and rep.state_rank == 3


def test_bell_mixture_split():
    mm = MarginalPair.maximally_mixed(2)
    p1 = max_entangled(2).projector().mat
    p2 = max_entangled(2, X).projector().mat
    rho = BipartiteState(2, (p1 + p2) / 2)
    rep = is_extremal_state(rho, mm)
    assert rep.verdict is Verdict.NOT_EXTREMAL
    w = rep.witness
    assert verify_decomposition(rho, w, mm, 1e-9)
    assert in_C(w.state_plus, mm, 1e-9).ok and in_C(w.state_minus, mm, 1e-9).ok


def test_state_outside_C_rejected():
    with pytest.raises(MembershipError):
        is_extremal_state(BipartiteState.pure([1, 0, 0, 0]), MarginalPair.maximally_mixed(2))


def test_build_witness_hand_case():
    mm = MarginalPair.maximally_mixed(2)
    w = build_witness(BELL_PAIR, np.diag([1.0, -1.0]), mm)
    assert np.allclose(w.lam, np.diag([1, -1]))
    assert np.allclose(w.alpha_plus, np.diag([np.sqrt(2), 0]))
    assert np.allclose(w.alpha_minus, np.diag([0, np.sqrt(2)]))
    assert np.allclose(w.state_plus.mat, max_entangled(2).projector().mat)
    flipped = np.kron(X, np.eye(2)) @ max_entangled(2).vec
    assert np.allclose(w.state_minus.mat, flipped @ flipped.conj().T)
    rho = state_from_kraus(BELL_PAIR, mm)
    assert np.allclose((w.state_plus.mat + w.state_minus.mat) / 2, rho.mat)


def test_build_witness_anti_hermitian_kernel():
    # kernel from rows (1,2) and (2,1) is anti-Hermitian; the (l - l^dag)/2i branch handles it
    w = build_witness(BELL_PAIR, np.array([[0, 1], [-1, 0]]), MarginalPair.maximally_mixed(2))
    assert np.allclose(w.lam, w.lam.conj().T)
    rho = state_from_kraus(BELL_PAIR)
    assert verify_decomposition(rho, w, MarginalPair.maximally_mixed(2), 1e-9)


def test_build_witness_rejects_non_kernel():
    with pytest.raises(ValueError):
        build_witness(d3_kraus(), np.eye(3), MarginalPair.maximally_mixed(3))


def test_three_bell_mixture_witness(rng):
    mm = MarginalPair.maximally_mixed(2)
    paulis = [np.eye(2), X, np.diag([1, -1]), np.array([[0, -1j], [1j, 0]])]
    idx = rng.choice(4, 3, replace=False)
    w = rng.dirichlet(np.ones(3))
    mix = sum(p * max_entangled(2, paulis[i]).projector().mat for p, i in zip(w, idx))
    rho = BipartiteState(2, mix)
    rep = is_extremal_state(rho, mm)
    assert rep.verdict is Verdict.NOT_EXTREMAL
    assert in_C(rep.witness.state_plus, mm, 1e-9).ok
    assert in_C(rep.witness.state_minus, mm, 1e-9).ok
    assert verify_decomposition(rho, rep.witness, mm, 1e-9)


def _sample_state(kind, d, rng):
    if kind == "max_ent":
        rho = max_entangled(d, random_unitary(d, rng)).projector()
        return rho, MarginalPair.maximally_mixed(d)
    if kind == "mixture":
        a = max_entangled(d, random_unitary(d, rng)).projector().mat
        b = max_entangled(d, random_unitary(d, rng)).projector().mat
        p = rng.uniform(0.2, 0.8)
        return BipartiteState(d, p * a + (1 - p) * b), MarginalPair.maximally_mixed(d)
    if kind == "fixture":
        return d3_state_matrix(), MarginalPair.maximally_mixed(3)
    rank = 1 if kind == "pure" else 2
    rho = random_bipartite(d, rng, rank)
    return rho, MarginalPair.from_state(rho)


@pytest.mark.parametrize("trial", range(50))
def test_verdict_basis_invariance(trial):
    rng = np.random.default_rng(1000 + trial)
    d = 2 + trial % 2
    kinds = ["max_ent", "mixture", "pure", "rank2"] + (["fixture"] if d == 3 else [])
    rho, mp = _sample_state(kinds[trial % len(kinds)], d, rng)
    u1, u2 = random_unitary(d, rng), random_unitary(d, rng)
    u = np.kron(u1, u2)
    rho_r = BipartiteState(d, u @ rho.mat @ u.conj().T)
    mp_r = MarginalPair.of(
        u1 @ mp.rho1.mat @ u1.conj().T,
        u2 @ mp.rho2.mat @ u2.conj().T,
    )
    a = is_extremal_state(rho, mp)
    b = is_extremal_state(rho_r, mp_r)
    assert a.verdict is b.verdict
    assert a.verdict is not Verdict.INCONCLUSIVE
    assert a.joint_rank == b.joint_rank


@pytest.mark.parametrize("d", [2, 3])
def test_verdict_eigenbasis_choice_invariance(d):
    rng = np.random.default_rng(d)
    states = [
        max_entangled(d, random_unitary(d, rng)).projector(),
        BipartiteState(
            d,
            0.5 * max_entangled(d).projector().mat
            + 0.5 * max_entangled(d, random_unitary(d, rng)).projector().mat,
        ),
    ]
    if d == 3:
        states.append(d3_state_matrix())
    for rho in states:
        ref = is_extremal_state(rho, MarginalPair.maximally_mixed(d))
        for _ in range(20):
            mp = MarginalPair.maximally_mixed(d, random_unitary(d, rng))
            rep = is_extremal_state(rho, mp)
            assert rep.verdict is ref.verdict
            assert rep.joint_rank == ref.joint_rank


def test_generic_full_rank_state_is_not_extremal(rng):
    rho = random_bipartite(2, rng)
    rep = is_extremal_state(rho, MarginalPair.from_state(rho))
    assert rep.ell == 4 and not rep.bound_sqrt2d
    assert rep.verdict is Verdict.NOT_EXTREMAL
    assert verify_decomposition(rho, rep.witness, MarginalPair.from_state(rho), 1e-9)


def test_extracted_family_matches_direct_verdict():
    mm = MarginalPair.maximally_mixed(4)
    rho = state_from_kraus(d4_kraus(), mm)
    k = kraus_from_state(rho, mm)
    assert k.ell == 4
    assert is_extremal_kraus(k, mm).verdict is Verdict.EXTREMAL
