import numpy as np
import pytest

from pauli_identity.pauli import encode_pauli
from pauli_identity.sampling import (
    PairOracle,
    SampleLedger,
    derive_substream,
    make_quantum_oracle,
    pauli_of,
    spawn_seed,
)
from pauli_identity.states import maximally_mixed, needle, random_product_state


def test_substream_determinism_and_separation():
    assert derive_substream(5, 3, "P", 0) == derive_substream(5, 3, "P", 0)
    keys = {
        derive_substream(5, 3, "P", 0),
        derive_substream(5, 3, "Q", 0),
        derive_substream(5, 3, "P", 1),
        derive_substream(5, 4, "P", 0),
        derive_substream(6, 3, "P", 0),
    }
    assert len(keys) == 5


def test_substreams_distinct_over_grid():
    keys = {derive_substream(1, i, s, e) for i in range(256) for s in "PQ" for e in range(10)}
    assert len(keys) == 256 * 2 * 10


def test_quantum_oracle_biases():
    mixed = maximally_mixed(2)
    o = make_quantum_oracle(mixed, mixed, 1)
    a, b = o.biases(np.arange(16))
    assert a[0] == b[0] == 1.0
    assert np.all(a[1:] == 0) and np.all(b[1:] == 0)
    p, q = o.distributions(0)
    np.testing.assert_array_equal(p, [1.0, 0.0])
    np.testing.assert_array_equal(q, [1.0, 0.0])
    p, q = o.distributions(5)
    np.testing.assert_array_equal(p, [0.5, 0.5])

    s = needle("XY", 0.7)
    o = make_quantum_oracle(s, mixed, 1)
    (a,), (b,) = o.biases([s.pauli.index])
    assert (a, b) == (0.7, 0.0)


def test_quantum_oracle_validation():
    with pytest.raises(ValueError):
        make_quantum_oracle(maximally_mixed(2), maximally_mixed(3))
    with pytest.raises(ValueError):
        make_quantum_oracle(needle("X", 2.0), maximally_mixed(1))


def test_exclude_identity_offsets_indices():
    s = needle("ZZ", 0.5)
    o = make_quantum_oracle(s, maximally_mixed(2), 1, exclude_identity=True)
    assert o.m == 15
    assert pauli_of(o, 0).letters == "IX"
    (a,), _ = o.biases([s.pauli.index - 1])
    assert a == 0.5


@pytest.mark.parametrize("bias, expected", [(1.0, 1000), (-1.0, 0)])
def test_deterministic_draws(bias, expected):
    o = PairOracle.from_biases([bias], [bias], 3)
    assert o.draw("P", 0, 1000) == expected


def test_fair_coin_concentration():
    o = PairOracle.from_biases([0.0], [0.0], 11)
    k = o.draw("P", 0, 10**6)
    assert abs(k / 1e6 - 0.5) <= 0.0025


@pytest.mark.parametrize("bias", [-1.0, -0.5, 0.0, 0.3, 1.0])
def test_unbiasedness(bias):
    o = PairOracle.from_biases([bias], [bias], 99)
    draws = o.draw_batch("P", np.zeros(10**5, dtype=int), 1)
    p = (1 + bias) / 2
    sd = np.sqrt(p * (1 - p) / 1e5)
    assert abs(draws.mean() - p) <= 4 * sd + 1e-12


def test_ledger_exactness(rng):
    o = PairOracle.from_biases(rng.uniform(-1, 1, 20), rng.uniform(-1, 1, 20), 4)
    requested = 0
    for _ in range(50):
        i, n = int(rng.integers(20)), int(rng.integers(0, 300))
        side = "P" if rng.random() < 0.5 else "Q"
        o.draw(side, i, n)
        requested += n
    idx = rng.integers(0, 20, size=40)
    o.draw_batch("Q", idx, 17)
    requested += 40 * 17
    assert o.ledger.total == requested == sum(o.ledger.counts.values())


def test_ledger_merge():
    a, b = SampleLedger(), SampleLedger()
    a.record(1, "P", 5)
    b.record(1, "P", 2)
    b.record(2, "Q", 3)
    m = a.merge(b)
    assert m.total == 10 and m.counts[(1, "P")] == 7


def test_same_seed_same_draws():
    def run(seed):
        o = PairOracle.from_biases([0.1, -0.2, 0.5], [0.0, 0.0, 0.0], seed)
        return [o.draw("P", i % 3, 1000) for i in range(9)]

    assert run(42) == run(42)
    assert run(42) != run(43)


def test_batch_independent_of_grouping():
    """An index's draws come from its own stream, whatever else is in the batch."""
    biases = np.linspace(-0.9, 0.9, 8)
    a = PairOracle.from_biases(biases, biases, 7).draw_batch("P", [3, 5, 3, 3], 500, epoch=2)
    b = PairOracle.from_biases(biases, biases, 7).draw_batch("P", [1, 3, 3, 2, 3], 500, epoch=2)
    np.testing.assert_array_equal(a[[0, 2, 3]], b[[1, 2, 4]])


def test_epoch_reuse_rejected():
    o = PairOracle.from_biases([0.0], [0.0], 1)
    o.draw("P", 0, 10, epoch=3)
    o.draw("Q", 0, 10, epoch=3)
    with pytest.raises(ValueError, match="already consumed"):
        o.draw("P", 0, 10, epoch=3)


def test_index_out_of_range():
    o = PairOracle.from_biases([0.0, 0.0], [0.0, 0.0], 1)
    with pytest.raises(IndexError):
        o.draw("P", 2, 1)
    with pytest.raises(ValueError):
        o.draw("P", 0, -1)


def test_pair_l2_identity(rng):
    s, t = random_product_state(3, rng), random_product_state(3, rng)
    o = make_quantum_oracle(s, t, 0)
    for i in range(64):
        p, q = o.distributions(i)
        (a,), (b,) = o.biases([i])
        assert abs(np.sum((p - q) ** 2) - (a - b) ** 2 / 2) <= 1e-15


def test_spawn_seed_distinct():
    assert len({spawn_seed(1, t) for t in range(1000)}) == 1000


def test_bias_cache_fills_once():
    calls = []

    def fn(idx):
        calls.append(idx.copy())
        return np.zeros(idx.size), np.zeros(idx.size)

    o = PairOracle(10, fn, 0)
    o.biases([1, 2, 2])
    o.biases([2, 3])
    assert [c.tolist() for c in calls] == [[1, 2], [3]]


def test_needle_pauli_lookup():
    s = needle("YZX", 0.3)
    o = make_quantum_oracle(s, maximally_mixed(3), 0)
    assert pauli_of(o, encode_pauli("YZX").index).letters == "YZX"
