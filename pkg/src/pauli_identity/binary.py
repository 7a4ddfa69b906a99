"""Equality test for two binary distributions.

For binary ``p`` and ``q``, ``||p - q||_2^2 = 2 (p_0 - q_0)^2``, so the
promise ``||p - q||_2^2 > gap_sq`` is the same as ``|p_0 - q_0| > D`` with
``D = sqrt(gap_sq / 2)``.  The tester draws ``N`` shots from each side and
answers "No" iff the empirical frequencies differ by more than ``tau = D/2``.

Choice of ``N``.  By Hoeffding each frequency deviates from its mean by more
than ``tau/2`` with probability at most ``2 exp(-N tau^2 / 2)``; a union over
both sides gives 4 exp(-N tau^2 / 2).

* Null (``p = q``): ``|p^ - q^| > tau`` requires one side to move by more than
  ``tau/2``, so the error is at most ``4 exp(-N D^2 / 8)``.
* Far (``|p_0 - q_0| > D``): accepting needs ``|p^ - q^| <= tau``, i.e. a
  combined deviation of at least ``D - tau = tau``; same bound.

Setting ``4 exp(-N D^2 / 8) <= delta`` gives ``N = ceil(8 ln(4/delta) / D^2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

HOEFFDING_FACTOR = 8.0
UNION_FACTOR = 4.0
MAX_GAP_SQ = 2.0


@dataclass(frozen=True)
class BinaryTestParams:
    gap_sq: float
    delta: float

    def __post_init__(self):
        if not self.gap_sq > 0:
            raise ValueError(f"gap_sq must be positive, got {self.gap_sq}")
        if not 0 < self.delta <= 0.5:
            raise ValueError(f"delta must lie in (0, 1/2], got {self.delta}")

    @property
    def gap(self) -> float:
        """Induced bound ``D`` on ``|p_0 - q_0|``."""
        return math.sqrt(self.gap_sq / 2)

    @property
    def threshold(self) -> float:
        return self.gap / 2

    @property
    def samples(self) -> int:
        return required_samples(self.gap_sq, self.delta)


def required_samples(gap_sq: float, delta: float) -> int:
    """Shots per side so that both error probabilities are at most ``delta``."""
    BinaryTestParams(gap_sq, delta)  # argument validation
    gap2 = gap_sq / 2
    return max(1, math.ceil(HOEFFDING_FACTOR * math.log(UNION_FACTOR / delta) / gap2))


def hoeffding_error_bound(n_samples: int, params: BinaryTestParams) -> float:
    """Upper bound ``4 exp(-N tau^2 / 2)`` on either error probability."""
    return UNION_FACTOR * math.exp(-n_samples * params.threshold**2 / 2)


def decide(p_counts, q_counts, n_samples: int, params: BinaryTestParams) -> np.ndarray:
    """``True`` ("No", far) where the empirical frequencies differ by more than ``tau``."""
    diff = np.abs(np.asarray(p_counts) - np.asarray(q_counts)) / n_samples
    return diff > params.threshold


@dataclass(frozen=True)
class PairResult:
    far: bool
    samples: int

    @property
    def verdict(self) -> str:
        return "No" if self.far else "Yes"


def test_pair(oracle, index: int, params: BinaryTestParams, epoch: int | None = None) -> PairResult:
    """Run the binary tester on pair ``index`` of ``oracle``."""
    n = params.samples
    p0 = oracle.draw("P", index, n, epoch)
    q0 = oracle.draw("Q", index, n, epoch)
    return PairResult(bool(decide(p0, q0, n, params)), 2 * n)


test_pair.__test__ = False
