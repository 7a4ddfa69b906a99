"""State specifications and exact distances between them.

Three families are supported:

* :class:`ProductState` -- one Bloch vector per qubit (``blochs[j]`` is qubit ``j``),
* :class:`NeedleState` -- ``(I + eps * P) / 2**n`` for a non-identity Pauli ``P``,
* :class:`DenseState` -- an explicit density matrix, for ``n <= 8``.

Every family exposes ``expectations(indices)`` returning ``Tr(rho P_i)`` for
an array of Pauli indices; samplers only ever use that.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import reduce
from pathlib import Path
from typing import Union

import numpy as np

from .pauli import (
    BLOCH_TOL,
    MAX_DENSE_QUBITS,
    SIGMA_I,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    PauliString,
    all_expectations_dense,
    encode_pauli,
    expectation_dense,
    expectations_product,
    pauli_matrix,
)

DENSE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ProductState:
    blochs: np.ndarray

    def __post_init__(self):
        arr = np.array(self.blochs, dtype=float).reshape(-1, 3)
        arr.setflags(write=False)
        object.__setattr__(self, "blochs", arr)

    @property
    def n(self) -> int:
        return self.blochs.shape[0]

    def expectations(self, indices) -> np.ndarray:
        return expectations_product(self.blochs, indices)

    def to_dense(self) -> np.ndarray:
        _check_dense_size(self.n)
        factors = [
            (SIGMA_I + x * SIGMA_X + y * SIGMA_Y + z * SIGMA_Z) / 2
            for x, y, z in self.blochs[::-1]
        ]
        return reduce(np.kron, factors)

    def describe(self) -> str:
        if not np.any(self.blochs):
            return "mixed"
        return "product:" + ";".join(",".join(repr(float(v)) for v in b) for b in self.blochs)

    def __eq__(self, other):
        return isinstance(other, ProductState) and np.array_equal(self.blochs, other.blochs)

    def __hash__(self):
        return hash(self.blochs.tobytes())


@dataclass(frozen=True)
class NeedleState:
    pauli: PauliString
    eps: float

    @property
    def n(self) -> int:
        return self.pauli.n

    def expectations(self, indices) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.int64)
        out = np.where(idx == self.pauli.index, self.eps, 0.0)
        out[idx == 0] = 1.0
        return out

    def to_dense(self) -> np.ndarray:
        _check_dense_size(self.n)
        dim = 2**self.n
        return (np.eye(dim) + self.eps * pauli_matrix(self.pauli)) / dim

    def describe(self) -> str:
        return f"needle:{self.pauli.letters}:{self.eps!r}"


@dataclass(frozen=True, eq=False)
class DenseState:
    matrix: np.ndarray
    source: str | None = field(default=None, compare=False)

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=complex)
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def n(self) -> int:
        dim = self.matrix.shape[0]
        n = dim.bit_length() - 1
        if dim < 2 or 2**n != dim or self.matrix.shape != (dim, dim):
            raise ValueError(f"matrix shape {self.matrix.shape} is not 2**n x 2**n")
        return n

    def expectations(self, indices) -> np.ndarray:
        n = self.n
        idx = np.asarray(indices, dtype=np.int64)
        flat = [expectation_dense(self.matrix, PauliString(n, int(i))) for i in idx.ravel()]
        return np.array(flat, dtype=float).reshape(idx.shape)

    def to_dense(self) -> np.ndarray:
        return np.array(self.matrix)

    def describe(self) -> str:
        return f"dense:{self.source}" if self.source else "dense"

    def __eq__(self, other):
        return isinstance(other, DenseState) and np.array_equal(self.matrix, other.matrix)

    def __hash__(self):
        return hash(self.matrix.tobytes())


StateSpec = Union[ProductState, NeedleState, DenseState]


def _check_dense_size(n: int) -> None:
    if n > MAX_DENSE_QUBITS:
        raise ValueError(f"dense form is limited to n <= {MAX_DENSE_QUBITS}, got n={n}")


def maximally_mixed(n: int) -> ProductState:
    return ProductState(np.zeros((n, 3)))


def needle(letters: str, eps: float) -> NeedleState:
    return NeedleState(encode_pauli(letters), float(eps))


def random_product_state(n: int, rng: np.random.Generator, pure: bool = False) -> ProductState:
    """Bloch vectors uniform on the sphere (``pure``) or uniform in the ball."""
    v = rng.normal(size=(n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    if not pure:
        v *= rng.random((n, 1)) ** (1 / 3)
    return ProductState(v)


def random_needle(n: int, eps: float, rng: np.random.Generator, family: str = "full") -> NeedleState:
    if family == "full":
        index = int(rng.integers(1, 4**n))
    elif family == "xyz":
        digits = rng.integers(1, 4, size=n)
        index = int(sum(int(d) << (2 * j) for j, d in enumerate(digits)))
    else:
        raise ValueError(f"unknown needle family {family!r}")
    return NeedleState(PauliString(n, index), float(eps))


def validate(state: StateSpec) -> str | None:
    """Return ``None`` if ``state`` satisfies its invariants, else the first violation."""
    if isinstance(state, ProductState):
        if state.n < 1:
            return "product state has no qubits"
        norms = np.linalg.norm(state.blochs, axis=1)
        for j, r in enumerate(norms):
            if r > 1 + BLOCH_TOL:
                return f"qubit {j} Bloch vector norm {r:.6g} > 1"
        return None
    if isinstance(state, NeedleState):
        if state.pauli.is_identity():
            return "needle Pauli must not be the identity"
        if not 0 < state.eps <= 1:
            return f"needle eps {state.eps} outside (0, 1]"
        return None
    if isinstance(state, DenseState):
        try:
            n = state.n
        except ValueError as exc:
            return str(exc)
        if n > MAX_DENSE_QUBITS:
            return f"dense state has n={n} > {MAX_DENSE_QUBITS}"
        mat = state.matrix
        herm = float(np.max(np.abs(mat - mat.conj().T)))
        if herm > DENSE_TOL:
            return f"not Hermitian: max |rho - rho^dag| = {herm:.3g}"
        tr = np.trace(mat).real
        if abs(tr - 1) > DENSE_TOL:
            return f"trace {tr:.12g} differs from 1 by {abs(tr - 1):.3g}"
        lam = float(np.linalg.eigvalsh(mat)[0])
        if lam < -DENSE_TOL:
            return f"minimum eigenvalue {lam:.3g} < 0"
        return None
    return f"unsupported state type {type(state).__name__}"


def check(state: StateSpec) -> StateSpec:
    problem = validate(state)
    if problem is not None:
        raise ValueError(f"invalid state: {problem}")
    return state


def to_dense(state) -> np.ndarray:
    if isinstance(state, np.ndarray):
        return state
    return state.to_dense()


def pauli_coefficients(state: StateSpec) -> np.ndarray:
    """All ``4**n`` coefficients ``alpha_P = Tr(rho P)``."""
    if isinstance(state, DenseState):
        return all_expectations_dense(state.matrix, state.n)
    return state.expectations(np.arange(4**state.n))


def trace_distance(a, b) -> float:
    """Unnormalised trace norm ``||a - b||_1`` (sum of absolute eigenvalues)."""
    da, db = to_dense(a), to_dense(b)
    if da.shape != db.shape:
        raise ValueError(f"dimension mismatch: {da.shape} vs {db.shape}")
    return float(np.sum(np.abs(np.linalg.eigvalsh(da - db))))


def hs_distance_sq(a: StateSpec, b: StateSpec, path: str = "dense") -> float:
    """Squared Hilbert-Schmidt distance ``Tr((a - b)^2)``.

    ``path="parseval"`` sums ``(alpha_P - beta_P)^2 / 2**n`` over all Pauli strings
    instead of forming matrices.
    """
    if a.n != b.n:
        raise ValueError(f"qubit count mismatch: {a.n} vs {b.n}")
    if path == "dense":
        diff = to_dense(a) - to_dense(b)
        return float(np.real(np.trace(diff @ diff)))
    if path == "parseval":
        _check_dense_size(a.n)
        d = pauli_coefficients(a) - pauli_coefficients(b)
        return float(np.dot(d, d) / 2**a.n)
    raise ValueError(f"unknown path {path!r}")


def save_dense(path, matrix) -> None:
    mat = np.asarray(matrix, dtype=complex)
    n = mat.shape[0].bit_length() - 1
    doc = {"n": n, "re": mat.real.tolist(), "im": mat.imag.tolist()}
    Path(path).write_text(json.dumps(doc))


def load_dense(path) -> DenseState:
    doc = json.loads(Path(path).read_text())
    try:
        n = int(doc["n"])
        mat = np.array(doc["re"], dtype=float) + 1j * np.array(doc.get("im", 0.0), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"{path}: malformed dense state file ({exc})") from exc
    if mat.shape != (2**n, 2**n):
        raise ValueError(f"{path}: expected {2**n}x{2**n} arrays for n={n}, got {mat.shape}")
    return check(DenseState(mat, source=str(path)))
