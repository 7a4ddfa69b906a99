import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pauli_identity.pauli import (
    SIGMA_I,
    SINGLE_QUBIT_PAULIS,
    PauliString,
    decode_pauli,
    encode_pauli,
    expectation_dense,
    expectation_product,
    expectations_product,
    pauli_matrix,
    pauli_pair_trace,
)
from pauli_identity.states import random_product_state

words = st.integers(1, 6).flatmap(lambda n: st.text("IXYZ", min_size=n, max_size=n))


@pytest.mark.parametrize("letters, index", [("I", 0), ("Z", 3), ("XZ", 7), ("ZI", 12), ("YYY", 42)])
def test_encode_examples(letters, index):
    p = encode_pauli(letters)
    assert p.index == index
    assert p.n == len(letters)


@given(words)
def test_encode_decode_roundtrip(letters):
    p = encode_pauli(letters)
    assert decode_pauli(p.index, p.n) == letters
    assert p.letters == letters


def test_identity_is_index_zero():
    for n in range(1, 6):
        assert encode_pauli("I" * n).index == 0
        assert PauliString(n, 0).is_identity()


@pytest.mark.parametrize("bad", ["", "XQ", "I" * 15])
def test_encode_rejects(bad):
    with pytest.raises(ValueError):
        encode_pauli(bad)


def test_index_out_of_range():
    with pytest.raises(ValueError):
        PauliString(2, 16)


def test_single_qubit_algebra():
    for a, pa in enumerate(SINGLE_QUBIT_PAULIS):
        np.testing.assert_allclose(pa, pa.conj().T)
        np.testing.assert_allclose(pa @ pa, SIGMA_I)
        for b, pb in enumerate(SINGLE_QUBIT_PAULIS):
            assert np.trace(pa @ pb) == pytest.approx(2.0 * (a == b))


def test_letter_order_matches_kron():
    np.testing.assert_array_equal(
        pauli_matrix(encode_pauli("XZ")), np.kron(SINGLE_QUBIT_PAULIS[1], SINGLE_QUBIT_PAULIS[3])
    )


@pytest.mark.parametrize("p, q, expected", [("X", "X", 2.0), ("XZ", "XZ", 4.0), ("XZ", "YZ", 0.0)])
def test_pair_trace_examples(p, q, expected):
    P, Q = encode_pauli(p), encode_pauli(q)
    assert pauli_pair_trace(P, Q) == expected
    dense = np.trace(pauli_matrix(P) @ pauli_matrix(Q)).real
    assert dense == pytest.approx(expected)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_pair_trace_matches_dense_exhaustively(n):
    mats = [pauli_matrix(PauliString(n, i)) for i in range(4**n)]
    for i, j in itertools.product(range(4**n), repeat=2):
        dense = np.trace(mats[i] @ mats[j])
        assert abs(dense - pauli_pair_trace(PauliString(n, i), PauliString(n, j))) <= 1e-12


def test_pair_trace_mismatched_n():
    with pytest.raises(ValueError):
        pauli_pair_trace(PauliString(1, 1), PauliString(2, 1))


def test_expectation_product_examples():
    assert expectation_product([(0, 0, 1)], encode_pauli("Z")) == 1.0
    assert expectation_product([(0, 0, 1)], encode_pauli("X")) == 0.0
    # qubit 0 is (0,0,1), qubit 1 is (1,0,0); "XZ" puts X on qubit 1
    blochs = [(0, 0, 1), (1, 0, 0)]
    assert expectation_product(blochs, encode_pauli("XZ")) == 1.0
    rho = np.kron((SIGMA_I + SINGLE_QUBIT_PAULIS[1]) / 2, (SIGMA_I + SINGLE_QUBIT_PAULIS[3]) / 2)
    assert expectation_dense(rho, encode_pauli("XZ")) == pytest.approx(1.0)


def test_expectation_product_rejects_long_bloch():
    with pytest.raises(ValueError):
        expectation_product([(1, 1, 1)], encode_pauli("X"))


def test_expectation_dense_examples():
    plus = np.full((2, 2), 0.5)
    assert expectation_dense(plus, encode_pauli("X")) == pytest.approx(1.0)
    assert expectation_dense(np.eye(2) / 2, encode_pauli("Z")) == 0.0
    rho = (SIGMA_I + 0.3 * SINGLE_QUBIT_PAULIS[2]) / 2
    assert expectation_dense(rho, encode_pauli("Y")) == pytest.approx(0.3)


def test_expectation_dense_rejects_non_hermitian():
    bad = np.array([[0.5, 1.0], [0.0, 0.5]])
    with pytest.raises(ValueError, match="imaginary"):
        expectation_dense(bad, encode_pauli("Y"))
    with pytest.raises(ValueError):
        expectation_dense(np.eye(4) / 4, encode_pauli("X"))


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_product_path_matches_kron_trace(n, rng):
    for _ in range(5):
        state = random_product_state(n, rng)
        rho = state.to_dense()
        fast = expectations_product(state.blochs, np.arange(4**n))
        for i in range(4**n):
            p = PauliString(n, i)
            brute = np.trace(rho @ pauli_matrix(p)).real
            assert abs(fast[i] - brute) <= 1e-10
            assert abs(expectation_dense(rho, p) - brute) <= 1e-10
            assert abs(fast[i]) <= 1 + 1e-12
        assert fast[0] == pytest.approx(1.0)
