"""Counted, seeded sampling access to pairs of binary distributions.

A :class:`PairOracle` holds ``m`` index pairs ``(p_i, q_i)`` where
``p_i = ((1 + alpha_i)/2, (1 - alpha_i)/2)`` and likewise for ``q_i`` with
``beta_i``.  Drawing ``N`` samples from one side returns the number of
outcome-0 results, i.e. a ``Binomial(N, (1 + bias)/2)`` variate.

Reproducibility contract: every draw for index ``i`` on side ``s`` in epoch
``e`` comes from its own Philox stream keyed by
``derive_substream(master_seed, i, s, e)``.  Within one batch the draws for a
repeated index are taken sequentially from that stream, so results do not
depend on batching order or worker count.
"""
from __future__ import annotations

import os
import threading
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .pauli import PauliString
from .states import StateSpec, check

MASK64 = (1 << 64) - 1
SIDES = {"P": 1, "Q": 2, "select": 3, "trial": 4}
AUTO_EPOCH_BASE = 1 << 32


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive_substream(master_seed: int, index: int, side: str, epoch: int) -> int:
    """64-bit stream key for the tuple ``(master_seed, index, side, epoch)``.

    Chained SplitMix64 finalisers; each field is absorbed after mixing the
    previous state so that permuting fields changes the result.
    """
    h = _splitmix64(master_seed & MASK64)
    for word in (index, SIDES[side], epoch):
        h = _splitmix64(h ^ (word & MASK64))
    return h


def make_rng(key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=key))


def spawn_seed(master_seed: int, trial: int) -> int:
    """Seed for the ``trial``-th independent repetition of an experiment."""
    return derive_substream(master_seed, trial, "trial", 0)


def fresh_seed() -> int:
    return int.from_bytes(os.urandom(8), "little")


@dataclass
class SampleLedger:
    counts: Counter = field(default_factory=Counter)
    total: int = 0

    def record(self, index: int, side: str, draws: int) -> None:
        if draws:
            self.counts[(index, side)] += draws
            self.total += draws

    def merge(self, other: "SampleLedger") -> "SampleLedger":
        out = SampleLedger(self.counts + other.counts, self.total + other.total)
        return out


class PairOracle:
    """Query access to ``m`` pairs of binary distributions given by their biases.

    ``bias_fn(indices) -> (alpha, beta)`` is evaluated lazily and cached per index.
    """

    def __init__(self, m: int, bias_fn: Callable, master_seed: int | None = None):
        if m < 1:
            raise ValueError(f"m must be >= 1, got {m}")
        self.m = int(m)
        self._bias_fn = bias_fn
        self.master_seed = fresh_seed() if master_seed is None else int(master_seed) & MASK64
        self.ledger = SampleLedger()
        self._cache: dict[int, tuple[float, float]] = {}
        self._used_epochs: set[tuple[str, int]] = set()
        self._auto_epoch = AUTO_EPOCH_BASE
        self._lock = threading.Lock()

    @classmethod
    def from_biases(cls, alpha, beta, master_seed: int | None = None) -> "PairOracle":
        a = np.asarray(alpha, dtype=float)
        b = np.asarray(beta, dtype=float)
        if a.shape != b.shape or a.ndim != 1:
            raise ValueError("alpha and beta must be 1-d arrays of equal length")
        if np.any(np.abs(a) > 1) or np.any(np.abs(b) > 1):
            raise ValueError("biases must lie in [-1, 1]")
        return cls(a.size, lambda idx: (a[idx], b[idx]), master_seed)

    def _check_indices(self, idx: np.ndarray) -> None:
        if idx.size and (idx.min() < 0 or idx.max() >= self.m):
            bad = idx[(idx < 0) | (idx >= self.m)][0]
            raise IndexError(f"index {bad} out of range [0, {self.m})")

    def biases(self, indices) -> tuple[np.ndarray, np.ndarray]:
        """``(alpha_i, beta_i)`` for each requested index (computed once, then cached)."""
        idx = np.asarray(indices, dtype=np.int64)
        self._check_indices(idx)
        uniq, inverse = np.unique(idx, return_inverse=True)
        missing = np.array([i for i in uniq.tolist() if i not in self._cache], dtype=np.int64)
        if missing.size:
            a, b = self._bias_fn(missing)
            a = np.broadcast_to(np.asarray(a, dtype=float), missing.shape)
            b = np.broadcast_to(np.asarray(b, dtype=float), missing.shape)
            # idempotent fill: concurrent fills write identical values
            for i, x, y in zip(missing.tolist(), a.tolist(), b.tolist()):
                self._cache[i] = (x, y)
        table = np.array([self._cache[i] for i in uniq.tolist()], dtype=float).reshape(-1, 2)
        alpha = table[inverse, 0].reshape(idx.shape)
        beta = table[inverse, 1].reshape(idx.shape)
        return alpha, beta

    def distributions(self, index: int) -> tuple[np.ndarray, np.ndarray]:
        (a,), (b,) = self.biases([index])
        return np.array([(1 + a) / 2, (1 - a) / 2]), np.array([(1 + b) / 2, (1 - b) / 2])

    def _claim_epoch(self, side: str, epoch: int | None) -> int:
        if side not in ("P", "Q"):
            raise ValueError(f"side must be 'P' or 'Q', got {side!r}")
        with self._lock:
            if epoch is None:
                epoch = self._auto_epoch
                self._auto_epoch += 1
            elif not 0 <= epoch < AUTO_EPOCH_BASE:
                raise ValueError(f"explicit epochs must lie in [0, 2**32), got {epoch}")
            if (side, epoch) in self._used_epochs:
                raise ValueError(f"epoch {epoch} already consumed on side {side}")
            self._used_epochs.add((side, epoch))
        return epoch

    def draw_batch(self, side: str, indices, count: int, epoch: int | None = None) -> np.ndarray:
        """Outcome-0 counts for ``count`` shots at each position of ``indices``."""
        if count < 0:
            raise ValueError(f"count must be >= 0, got {count}")
        idx = np.asarray(indices, dtype=np.int64).ravel()
        self._check_indices(idx)
        epoch = self._claim_epoch(side, epoch)
        out = np.zeros(idx.size, dtype=np.int64)
        if idx.size == 0:
            return out
        alpha, beta = self.biases(idx)
        probs = (1 + (alpha if side == "P" else beta)) / 2
        order = np.argsort(idx, kind="stable")
        uniq, starts = np.unique(idx[order], return_index=True)
        bounds = np.append(starts, idx.size)
        for u, lo, hi in zip(uniq.tolist(), bounds[:-1], bounds[1:]):
            pos = order[lo:hi]
            p = float(np.clip(probs[pos[0]], 0.0, 1.0))
            rng = make_rng(derive_substream(self.master_seed, u, side, epoch))
            out[pos] = rng.binomial(count, p, size=hi - lo)
        with self._lock:
            for u, lo, hi in zip(uniq.tolist(), bounds[:-1], bounds[1:]):
                self.ledger.record(u, side, int(count) * int(hi - lo))
        return out

    def draw(self, side: str, index: int, count: int, epoch: int | None = None) -> int:
        return int(self.draw_batch(side, [index], count, epoch)[0])


def make_quantum_oracle(
    rho: StateSpec,
    sigma: StateSpec,
    master_seed: int | None = None,
    exclude_identity: bool = False,
) -> PairOracle:
    """Oracle over all Pauli strings: index ``i`` measures ``P_i`` on ``rho`` / ``sigma``.

    With ``exclude_identity`` the collection has ``4**n - 1`` entries and
    index ``i`` maps to Pauli index ``i + 1``.
    """
    check(rho)
    check(sigma)
    if rho.n != sigma.n:
        raise ValueError(f"qubit count mismatch: {rho.n} vs {sigma.n}")
    n = rho.n
    offset = 1 if exclude_identity else 0

    def bias_fn(idx):
        paulis = idx + offset
        return rho.expectations(paulis), sigma.expectations(paulis)

    oracle = PairOracle(4**n - offset, bias_fn, master_seed)
    oracle.n = n
    oracle.pauli_offset = offset
    return oracle


def pauli_of(oracle: PairOracle, index: int) -> PauliString:
    return PauliString(oracle.n, index + oracle.pauli_offset)
