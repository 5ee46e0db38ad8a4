"""Operator algebra checked against dense matrices on small mode counts."""

import numpy as np
import pytest

from bscvqe.fermion import FermiTermSum, LadderTermSum, jordan_wigner


def random_term_sum(rng, num_modes, num_terms=4, max_len=2):
    """Random sums of short ladder strings (not necessarily number conserving)."""
    out = FermiTermSum()
    for _ in range(num_terms):
        length = rng.integers(0, max_len + 1)
        ops = [
            (int(rng.integers(0, num_modes)), bool(rng.integers(0, 2)))
            for _ in range(length)
        ]
        coeff = complex(rng.normal(), rng.normal())
        out = out + FermiTermSum.from_ops(ops, coeff)
    return out


def test_from_ops_normal_orders_mixed_pair():
    # f_0 f+_0 = 1 - f+_0 f_0
    ts = FermiTermSum.from_ops([(0, False), (0, True)])
    assert ts.terms[((), ())] == pytest.approx(1.0)
    assert ts.terms[((0,), (0,))] == pytest.approx(-1.0)


def test_from_ops_repeated_creator_vanishes():
    ts = FermiTermSum.from_ops([(1, True), (1, True)])
    assert len(ts.simplified()) == 0


def test_canonical_index_order():
    ts = FermiTermSum.from_ops([(2, True), (0, True), (1, False), (3, False)])
    ((create, annihilate),) = ts.terms.keys()
    assert create == (0, 2)
    assert annihilate == (3, 1)
    # one creator swap and one annihilator swap cancel in sign
    assert ts.terms[(create, annihilate)] == pytest.approx(1.0)


@pytest.mark.parametrize("seed", range(6))
def test_product_matches_dense_multiplication(seed):
    rng = np.random.default_rng(seed)
    m = 4
    a = random_term_sum(rng, m)
    b = random_term_sum(rng, m)
    dense_prod = a.to_dense(m) @ b.to_dense(m)
    assert np.allclose(a.multiply(b).to_dense(m), dense_prod, atol=1e-12)


@pytest.mark.parametrize("seed", range(4))
def test_adjoint_matches_dense_dagger(seed):
    rng = np.random.default_rng(100 + seed)
    m = 4
    a = random_term_sum(rng, m, max_len=3)
    assert np.allclose(a.adjoint().to_dense(m), a.to_dense(m).conj().T, atol=1e-12)


def test_apply_to_occupation_signs():
    # f+_2 f_0 on |1,1,0>: remove at 0 (sign +), add at 2 (one occupied below pair ->
    # parity of modes < 2 after removal is 1) giving -|0,1,1>
    ts = FermiTermSum.from_ops([(2, True), (0, False)])
    [(amp, occ)] = ts.apply_to_occupation((1, 1, 0))
    assert occ == (0, 1, 1)
    assert amp == pytest.approx(-1.0)


def test_apply_to_occupation_annihilates_empty_mode():
    ts = FermiTermSum.from_ops([(0, False)])
    assert ts.apply_to_occupation((0, 1)) == []


@pytest.mark.parametrize("seed", range(8))
def test_jordan_wigner_reproduces_dense_fermionic_matrix(seed):
    rng = np.random.default_rng(200 + seed)
    m = 4
    a = random_term_sum(rng, m, num_terms=5, max_len=4)
    jw = jordan_wigner(a, m)
    assert np.allclose(jw.to_dense_qubit(), a.to_dense(m), atol=1e-12)


def test_number_operator_maps_to_plain_projector():
    ts = FermiTermSum.from_ops([(2, True), (2, False)])
    jw = jordan_wigner(ts, 4)
    assert set(jw.terms) == {"ii1i"}
    assert jw.terms["ii1i"] == pytest.approx(1.0)


def test_hopping_term_keeps_z_string():
    ts = FermiTermSum.from_ops([(0, True), (2, False)])
    jw = jordan_wigner(ts, 3)
    assert set(jw.terms) == {"+z-"}
    assert jw.terms["+z-"] == pytest.approx(1.0)


def test_jordan_wigner_hermitian_input_stays_hermitian():
    rng = np.random.default_rng(7)
    a = random_term_sum(rng, 4, num_terms=6, max_len=2)
    h = a + a.adjoint()
    assert h.is_hermitian()
    assert jordan_wigner(h, 4).is_hermitian()


def test_expand_projectors_dense_equality():
    terms = LadderTermSum(3, {"01z": 1.25, "+-i": 0.5 - 0.25j, "1ii": -0.75})
    expanded = terms.expand_projectors()
    assert all(s in "iz+-" for key in expanded.terms for s in key)
    assert np.allclose(expanded.to_dense_qubit(), terms.to_dense_qubit(), atol=1e-12)


def test_ladder_adjoint_and_hermiticity():
    t = LadderTermSum(2, {"+i": 1.0 + 2.0j})
    assert t.adjoint().terms == {"-i": 1.0 - 2.0j}
    h = t + t.adjoint()
    assert h.is_hermitian()
    assert not t.is_hermitian()


def test_ladder_rejects_bad_strings():
    with pytest.raises(ValueError):
        LadderTermSum(2, {"xy": 1.0})
    with pytest.raises(ValueError):
        LadderTermSum(2, {"+": 1.0})


def test_diag_offdiag_split():
    t = LadderTermSum(5)
    diag, off = t.diag_offdiag_modes("z+i-1")
    assert diag == [0, 2, 4]
    assert off == [1, 3]


def test_simplified_prunes_cancellations():
    a = FermiTermSum.from_ops([(0, True), (1, False)], 1.0)
    b = FermiTermSum.from_ops([(0, True), (1, False)], -1.0)
    assert len((a + b).simplified()) == 0
