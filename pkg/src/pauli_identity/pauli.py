"""Pauli strings, their integer encoding, and expectation values.

An n-qubit Pauli string is stored as an integer in ``[0, 4**n)``.  Digit ``j``
of the base-4 expansion (least significant first) is the Pauli acting on
qubit ``j`` with the map ``0 -> I, 1 -> X, 2 -> Y, 3 -> Z``.  When a string
is written as letters, qubit 0 is the rightmost letter, so ``"XZ"`` means X on
qubit 1 and Z on qubit 0 and has index ``1*4 + 3 = 7``.

Dense matrices follow the same convention: qubit ``j`` is bit ``j`` of the
computational basis index, which makes ``"XZ"`` equal to ``kron(X, Z)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

MAX_QUBITS = 14
MAX_DENSE_QUBITS = 8
IMAG_TOL = 1e-9
BLOCH_TOL = 1e-12

LETTERS = "IXYZ"
_DIGIT = {c: d for d, c in enumerate(LETTERS)}

SIGMA_I = np.array([[1, 0], [0, 1]], dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SINGLE_QUBIT_PAULIS = (SIGMA_I, SIGMA_X, SIGMA_Y, SIGMA_Z)


def _check_n(n: int) -> None:
    if not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"qubit count must be in [1, {MAX_QUBITS}], got {n}")


@dataclass(frozen=True, order=True)
class PauliString:
    """An n-qubit Pauli string identified by its base-4 index."""

    n: int
    index: int

    def __post_init__(self):
        _check_n(self.n)
        if not 0 <= self.index < 4**self.n:
            raise ValueError(f"index {self.index} out of range for n={self.n}")

    @property
    def digits(self) -> tuple[int, ...]:
        """Per-qubit digits, qubit 0 first."""
        return tuple((self.index >> (2 * j)) & 3 for j in range(self.n))

    @property
    def letters(self) -> str:
        return "".join(LETTERS[d] for d in reversed(self.digits))

    @property
    def weight(self) -> int:
        return sum(d != 0 for d in self.digits)

    def is_identity(self) -> bool:
        return self.index == 0

    def __str__(self) -> str:
        return self.letters


def encode_pauli(letters: str) -> PauliString:
    """Parse a word over ``IXYZ`` (qubit 0 rightmost) into a :class:`PauliString`."""
    n = len(letters)
    _check_n(n)
    index = 0
    for j, c in enumerate(reversed(letters.upper())):
        try:
            index += _DIGIT[c] * 4**j
        except KeyError:
            raise ValueError(f"invalid Pauli letter {c!r} in {letters!r}") from None
    return PauliString(n, index)


def decode_pauli(index: int, n: int) -> str:
    return PauliString(n, index).letters


def pauli_matrix(p: PauliString) -> np.ndarray:
    """Dense ``2**n x 2**n`` matrix of ``p`` built by Kronecker products."""
    if p.n > MAX_DENSE_QUBITS:
        raise ValueError(f"dense matrices are limited to n <= {MAX_DENSE_QUBITS}")
    factors = [SINGLE_QUBIT_PAULIS[d] for d in reversed(p.digits)]
    return reduce(np.kron, factors)


def pauli_pair_trace(p: PauliString, q: PauliString) -> float:
    """``Tr(PQ)``: ``2**n`` when the strings coincide, otherwise 0."""
    if p.n != q.n:
        raise ValueError(f"qubit count mismatch: {p.n} vs {q.n}")
    return float(2**p.n) if p.index == q.index else 0.0


def _as_bloch_array(bloch) -> np.ndarray:
    arr = np.asarray(bloch, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"expected an (n, 3) array of Bloch vectors, got shape {arr.shape}")
    norms = np.linalg.norm(arr, axis=1)
    bad = np.flatnonzero(norms > 1 + BLOCH_TOL)
    if bad.size:
        j = int(bad[0])
        raise ValueError(f"Bloch vector of qubit {j} has norm {norms[j]:.6g} > 1")
    return arr


def expectation_product(bloch: Sequence[Sequence[float]], p: PauliString) -> float:
    """``Tr(rho P)`` for the product state whose qubit ``j`` has Bloch vector ``bloch[j]``."""
    arr = _as_bloch_array(bloch)
    if arr.shape[0] != p.n:
        raise ValueError(f"state has {arr.shape[0]} qubits, Pauli has {p.n}")
    value = 1.0
    for j, d in enumerate(p.digits):
        if d:
            value *= arr[j, d - 1]
    return float(value)


def expectations_product(bloch, indices) -> np.ndarray:
    """Vectorised :func:`expectation_product` over an array of Pauli indices."""
    arr = _as_bloch_array(bloch)
    idx = np.asarray(indices, dtype=np.int64)
    # column 0 is the identity factor
    table = np.hstack([np.ones((arr.shape[0], 1)), arr])
    out = np.ones(idx.shape, dtype=float)
    for j in range(arr.shape[0]):
        out *= table[j, (idx >> (2 * j)) & 3]
    return out


def _xz_masks(p: PauliString) -> tuple[int, int, int]:
    x_mask = z_mask = 0
    n_y = 0
    for j, d in enumerate(p.digits):
        if d in (1, 2):
            x_mask |= 1 << j
        if d in (2, 3):
            z_mask |= 1 << j
        n_y += d == 2
    return x_mask, z_mask, n_y


def _popcount_parity(values: np.ndarray) -> np.ndarray:
    parity = np.zeros(values.shape, dtype=np.int64)
    v = values.copy()
    while np.any(v):
        parity ^= v & 1
        v >>= 1
    return parity


def expectation_dense(rho: np.ndarray, p: PauliString) -> float:
    """``Tr(rho P)`` for an explicit density matrix.

    Uses the permutation-with-phase structure of Pauli strings,
    ``P|c> = i^{#Y} (-1)^{popcount(c & z)} |c ^ x>``, so the Pauli matrix is
    never formed.  Raises if the imaginary residue exceeds ``IMAG_TOL``.
    """
    rho = np.asarray(rho)
    dim = 2**p.n
    if p.n > MAX_DENSE_QUBITS:
        raise ValueError(f"dense path is limited to n <= {MAX_DENSE_QUBITS}")
    if rho.shape != (dim, dim):
        raise ValueError(f"density matrix shape {rho.shape} does not match n={p.n}")
    x_mask, z_mask, n_y = _xz_masks(p)
    cols = np.arange(dim, dtype=np.int64)
    signs = 1 - 2 * _popcount_parity(cols & z_mask)
    value = (1j**n_y) * np.sum(signs * rho[cols, cols ^ x_mask])
    if abs(value.imag) > IMAG_TOL:
        raise ValueError(
            f"imaginary residue {value.imag:.3g} in Tr(rho P); input is not Hermitian"
        )
    return float(value.real)


def all_expectations_dense(rho: np.ndarray, n: int) -> np.ndarray:
    """Every Pauli coefficient ``Tr(rho P)``, indexed by Pauli index."""
    return np.array([expectation_dense(rho, PauliString(n, i)) for i in range(4**n)])
