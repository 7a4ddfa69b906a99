"""Exact (non-statistical) identity checks on random small instances."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .states import (
    hs_distance_sq,
    maximally_mixed,
    random_needle,
    random_product_state,
    trace_distance,
)


@dataclass
class Check:
    name: str
    worst: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.worst <= self.tol

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name}: worst residual {self.worst:.3e} (tol {self.tol:.0e})"


def run_exact_suite(seed: int = 0, pairs: int = 100, max_n: int = 4) -> list[Check]:
    rng = np.random.default_rng(seed)
    parseval = pair_identity = norm_gap = 0.0
    for t in range(pairs):
        n = 1 + t % max_n
        a, b = random_product_state(n, rng), random_product_state(n, rng)
        dense = hs_distance_sq(a, b, "dense")
        pars = hs_distance_sq(a, b, "parseval")
        parseval = max(parseval, abs(dense - pars))
        td = trace_distance(a, b)
        norm_gap = max(norm_gap, td**2 - 2**n * dense)

        idx = rng.integers(0, 4**n, size=8)
        al, be = a.expectations(idx), b.expectations(idx)
        p = np.stack([(1 + al) / 2, (1 - al) / 2], axis=1)
        q = np.stack([(1 + be) / 2, (1 - be) / 2], axis=1)
        lhs = np.sum((p - q) ** 2, axis=1)
        pair_identity = max(pair_identity, float(np.max(np.abs(lhs - (al - be) ** 2 / 2))))

    needle_gap = 0.0
    for n in range(1, max_n + 1):
        for eps in (0.1, 0.5, 1.0):
            s = random_needle(n, eps, rng)
            needle_gap = max(needle_gap, abs(trace_distance(s, maximally_mixed(n)) - eps))
    return [
        Check("Parseval (dense vs Pauli coefficients)", parseval, 1e-10),
        Check("||p_P - q_P||^2 = (alpha_P - beta_P)^2 / 2", pair_identity, 1e-15),
        Check("||rho - sigma||_1^2 <= 2^n ||rho - sigma||_2^2", max(norm_gap, 0.0), 1e-9),
        Check("needle trace distance equals eps", needle_gap, 1e-10),
    ]


def main(seed: int = 0) -> bool:
    start = time.perf_counter()
    checks = run_exact_suite(seed)
    for c in checks:
        print(c.line())
    print(f"elapsed {time.perf_counter() - start:.2f} s")
    return all(c.passed for c in checks)

