"""Quantum identity testing through the Pauli bias collection.

Measuring Pauli string ``P`` on ``rho`` gives outcome 0 with probability
``(1 + alpha_P)/2`` where ``alpha_P = Tr(rho P)``.  Each ``P`` therefore
contributes a pair of binary distributions with
``||p_P - q_P||_2^2 = (alpha_P - beta_P)^2 / 2``.  Since
``sum_P (alpha_P - beta_P)^2 = 2^n ||rho - sigma||_2^2 >= ||rho - sigma||_1^2``,
trace distance above ``eps`` forces the mean over all ``4^n`` pairs above
``eps^2 / (2 * 4^n)``, which is what the collection tester is run with.
"""
from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from .collection import DEFAULT_L, build_schedule, test_collection
from .sampling import fresh_seed, make_quantum_oracle, pauli_of, spawn_seed
from .states import (
    MAX_DENSE_QUBITS,
    StateSpec,
    check,
    pauli_coefficients,
    trace_distance,
)

MAX_QIT_QUBITS = 8


def collection_eps(n: int, eps: float) -> float:
    """Collection gap ``eps' = eps / sqrt(2 * 4^n)``."""
    return eps / math.sqrt(2 * 4**n)


@dataclass
class QitInstance:
    rho: StateSpec
    sigma: StateSpec
    eps: float
    L: int = DEFAULT_L
    mu: float | None = None
    seed: int | None = None
    exclude_identity: bool = False

    def __post_init__(self):
        check(self.rho)
        check(self.sigma)
        if self.rho.n != self.sigma.n:
            raise ValueError(f"qubit count mismatch: {self.rho.n} vs {self.sigma.n}")
        if self.n > MAX_QIT_QUBITS:
            raise ValueError(f"n={self.n} exceeds the supported maximum {MAX_QIT_QUBITS}")
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.L < 1:
            raise ValueError(f"L must be >= 1, got {self.L}")
        if self.mu is not None and not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if self.seed is None:
            self.seed = fresh_seed()

    @property
    def n(self) -> int:
        return self.rho.n

    def promise(self) -> str | None:
        """Exact check of the promise when dense forms are affordable.

        Returns ``"equal"``, ``"far"``, ``"violated"`` or ``None`` (not checked).
        """
        if self.n > MAX_DENSE_QUBITS:
            return None
        if np.array_equal(pauli_coefficients(self.rho), pauli_coefficients(self.sigma)):
            return "equal"
        return "far" if trace_distance(self.rho, self.sigma) > self.eps else "violated"

    def config(self) -> dict[str, Any]:
        return {
            "rho": self.rho.describe(),
            "sigma": self.sigma.describe(),
            "n": self.n,
            "eps": self.eps,
            "L": self.L,
            "mu": self.mu,
            "seed": self.seed,
            "exclude_identity": self.exclude_identity,
        }


@dataclass
class TrialReport:
    verdict: str
    n: int
    eps: float
    L: int
    mu: float | None
    seed: int
    total_samples: int
    per_k_samples: list[int]
    triggering_index: dict | None = None
    wall_ms: float | None = None
    config: dict = field(default_factory=dict)

    def to_dict(self, timing: bool = True) -> dict:
        d = asdict(self)
        if not timing:
            d["wall_ms"] = None
        return d

    def to_json(self, timing: bool = False) -> str:
        return json.dumps(self.to_dict(timing), sort_keys=True, indent=2)


def test_identity(instance: QitInstance) -> TrialReport:
    """Run one identity test and return its report (verdict ``"Yes"`` or ``"No"``)."""
    start = time.perf_counter()
    oracle = make_quantum_oracle(
        instance.rho, instance.sigma, instance.seed, instance.exclude_identity
    )
    eps_c = collection_eps(instance.n, instance.eps)
    result = test_collection(oracle, eps_c, instance.L, instance.mu)
    trigger = None
    if result.trigger is not None:
        k, idx = result.trigger
        pauli = pauli_of(oracle, idx)
        trigger = {"k": k, "pauli_index": pauli.index, "pauli": pauli.letters}
    return TrialReport(
        verdict=result.verdict,
        n=instance.n,
        eps=instance.eps,
        L=instance.L,
        mu=instance.mu,
        seed=instance.seed,
        total_samples=result.total_samples,
        per_k_samples=result.per_k_samples,
        triggering_index=trigger,
        wall_ms=(time.perf_counter() - start) * 1e3,
        config=instance.config(),
    )


test_identity.__test__ = False


def run_trials(
    rho: StateSpec,
    sigma: StateSpec,
    eps: float,
    trials: int,
    master_seed: int,
    *,
    L: int = DEFAULT_L,
    mu: float | None = None,
    exclude_identity: bool = False,
    threads: int = 1,
) -> list[TrialReport]:
    """Independent repetitions; trial ``t`` uses ``spawn_seed(master_seed, t)``."""
    instances = [
        QitInstance(rho, sigma, eps, L, mu, spawn_seed(master_seed, t), exclude_identity)
        for t in range(trials)
    ]
    if threads == 1:
        return [test_identity(inst) for inst in instances]
    with ThreadPoolExecutor(max_workers=threads or None) as pool:
        return list(pool.map(test_identity, instances))


def predicted_budget(n: int, eps: float, L: int = DEFAULT_L, mu: float | None = None,
                     exclude_identity: bool = False) -> int:
    """Worst-case total shot count (no early exit) of the identity test."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    m = 4**n - (1 if exclude_identity else 0)
    return build_schedule(m, collection_eps(n, eps), L, mu).total


def qit_schedule(n: int, eps: float, L: int = DEFAULT_L, mu: float | None = None,
                 exclude_identity: bool = False):
    m = 4**n - (1 if exclude_identity else 0)
    return build_schedule(m, collection_eps(n, eps), L, mu)


def reduction_terms(rho: StateSpec, sigma: StateSpec) -> dict[str, float]:
    """Exact quantities behind the reduction, for checking it on small ``n``.

    ``mean_pair_sq``: ``(1/4^n) sum_P ||p_P - q_P||_2^2``;
    ``coef_sq_sum``: ``sum_P (alpha_P - beta_P)^2``;
    ``trace_distance``: ``||rho - sigma||_1``.
    """
    n = rho.n
    a, b = pauli_coefficients(rho), pauli_coefficients(sigma)
    p = np.stack([(1 + a) / 2, (1 - a) / 2], axis=1)
    q = np.stack([(1 + b) / 2, (1 - b) / 2], axis=1)
    pair_sq = np.sum((p - q) ** 2, axis=1)
    return {
        "mean_pair_sq": float(np.mean(pair_sq)),
        "coef_sq_sum": float(np.sum((a - b) ** 2)),
        "trace_distance": trace_distance(rho, sigma),
        "n": n,
    }
