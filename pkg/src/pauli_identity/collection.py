"""Identity testing for a collection of binary distribution pairs.

Promise problem: either ``p_i = q_i`` for every ``i``, or the average squared
l2 distance ``(1/m) sum_i ||p_i - q_i||_2^2`` exceeds ``eps^2``.  The tester
works in rounds ``k = 0 .. ceil(log2 m)``.  Round ``k`` picks
``2^k (k^2 + 1) L`` indices uniformly with replacement and runs the binary
tester on each at gap ``2^(k-1) eps^2`` with failure budget ``L^-2 6^-k``.
Any "No" ends the run with "No".
"""
from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .binary import MAX_GAP_SQ, BinaryTestParams, decide, required_samples
from .sampling import PairOracle, derive_substream, make_rng, spawn_seed

DEFAULT_L = 100
MIN_DELTA = 1e-12
MAX_DELTA = 0.5
SOUNDNESS_CONSTANT = 100


def num_rounds(m: int) -> int:
    """``ceil(log2 m) + 1``."""
    return (m - 1).bit_length() + 1


def row_weight(k: int, mu: float | None = None) -> int:
    if mu is None:
        return k * k + 1
    return math.ceil(k ** (1 + mu)) + 1


@dataclass(frozen=True)
class ScheduleRow:
    k: int
    num_indices: int
    gap_sq: float
    delta: float
    samples: int  # per side per test; 0 for rounds that cannot fire

    @property
    def vacuous(self) -> bool:
        return self.samples == 0

    @property
    def total(self) -> int:
        return self.num_indices * 2 * self.samples


@dataclass(frozen=True)
class Schedule:
    m: int
    eps: float
    L: int
    mu: float | None
    rows: tuple[ScheduleRow, ...]

    @property
    def total(self) -> int:
        """Worst-case number of single-shot draws (no early exit)."""
        return sum(r.total for r in self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "num_indices", "gap_sq", "delta", "N"])
        for r in self.rows:
            w.writerow([r.k, r.num_indices, repr(r.gap_sq), repr(r.delta), r.samples])
        return buf.getvalue()


def build_schedule(m: int, eps: float, L: int = DEFAULT_L, mu: float | None = None) -> Schedule:
    """Per-round index counts, gaps, failure budgets and per-test shot counts.

    Rounds whose gap is at least 2 can never see a far pair (binary
    distributions are at most ``sqrt(2)`` apart) and get ``samples = 0``.
    The failure budget is clamped to ``[1e-12, 1/2]``.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if L < 1:
        raise ValueError(f"L must be >= 1, got {L}")
    if mu is not None and not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    rows = []
    for k in range(num_rounds(m)):
        gap_sq = 2.0 ** (k - 1) * eps * eps
        delta = min(MAX_DELTA, max(MIN_DELTA, L**-2.0 * 6.0**-k))
        samples = 0 if gap_sq >= MAX_GAP_SQ else required_samples(gap_sq, delta)
        rows.append(ScheduleRow(k, 2**k * row_weight(k, mu) * L, gap_sq, delta, samples))
    return Schedule(m, float(eps), int(L), mu, tuple(rows))


@dataclass
class CollectionVerdict:
    verdict: str
    trigger: tuple[int, int] | None  # (k, index)
    per_k_samples: list[int]
    total_samples: int
    wall_ms: float
    rejections: list[tuple[int, int, int]] = field(default_factory=list)  # (k, position, index)

    @property
    def accepted(self) -> bool:
        return self.verdict == "Yes"


def run_round(oracle: PairOracle, row: ScheduleRow, epoch: int) -> tuple[np.ndarray, np.ndarray]:
    """Select indices for one round and test them.

    Returns the selected indices and a boolean array marking "No" answers,
    both in selection order.
    """
    rng = make_rng(derive_substream(oracle.master_seed, row.k, "select", epoch))
    picks = rng.integers(0, oracle.m, size=row.num_indices)
    if row.vacuous:
        return picks, np.zeros(picks.size, dtype=bool)
    params = BinaryTestParams(row.gap_sq, row.delta)
    p0 = oracle.draw_batch("P", picks, row.samples, epoch)
    q0 = oracle.draw_batch("Q", picks, row.samples, epoch)
    return picks, decide(p0, q0, row.samples, params)


def test_collection(
    oracle: PairOracle,
    eps: float,
    L: int = DEFAULT_L,
    mu: float | None = None,
    *,
    early_exit: bool = True,
    schedule: Schedule | None = None,
) -> CollectionVerdict:
    """Accept if all pairs match, reject if their mean squared l2 distance exceeds ``eps^2``.

    Each round uses epoch ``k``, so a round's draws do not depend on whether
    earlier rounds ran.  A whole round is sampled before its answers are
    inspected; the reported trigger is the first "No" in selection order.
    With ``early_exit=False`` every round runs and all "No" answers are kept.
    """
    start = time.perf_counter()
    if schedule is None:
        schedule = build_schedule(oracle.m, eps, L, mu)
    elif schedule.m != oracle.m:
        raise ValueError(f"schedule built for m={schedule.m}, oracle has m={oracle.m}")
    per_k = [0] * len(schedule.rows)
    trigger = None
    rejections: list[tuple[int, int, int]] = []
    for row in schedule.rows:
        before = oracle.ledger.total
        picks, far = run_round(oracle, row, epoch=row.k)
        per_k[row.k] = oracle.ledger.total - before
        hits = np.flatnonzero(far)
        rejections.extend((row.k, int(pos), int(picks[pos])) for pos in hits)
        if hits.size and trigger is None:
            trigger = (row.k, int(picks[hits[0]]))
            if early_exit:
                break
    wall_ms = (time.perf_counter() - start) * 1e3
    return CollectionVerdict(
        "No" if trigger else "Yes", trigger, per_k, sum(per_k), wall_ms, rejections
    )


test_collection.__test__ = False


def mean_sq_distance(alpha, beta) -> float:
    """``(1/m) sum ||p_i - q_i||_2^2`` for pairs given by their biases."""
    d = np.asarray(alpha, dtype=float) - np.asarray(beta, dtype=float)
    return float(np.mean(d * d / 2))


def witness_rounds(dist_sq, eps: float) -> list[int]:
    """Rounds ``k`` whose far set is heavy enough for the soundness argument.

    ``k`` qualifies when more than ``m / (2^k * 100 * (k^2 + 1))`` indices have
    ``||p_i - q_i||^2 >= 2^(k-1) eps^2``.  Found by direct enumeration.
    """
    d = np.asarray(dist_sq, dtype=float)
    m = d.size
    out = []
    for k in range(num_rounds(m)):
        heavy = int(np.count_nonzero(d >= 2.0 ** (k - 1) * eps * eps))
        if heavy > m / (2**k * SOUNDNESS_CONSTANT * (k * k + 1)):
            out.append(k)
    return out


def completeness_bound(m: int, L: int = DEFAULT_L, mu: float | None = None) -> float:
    """Union bound ``sum_k w_k / (3^k L)`` on the false-rejection probability."""
    return sum(row_weight(k, mu) / (3**k * L) for k in range(num_rounds(m)))


def budget_constant(m: int, eps: float, L: int = DEFAULT_L, mu: float | None = None) -> float:
    """``total * eps^2 / (ceil(log2 m) + 1)^4`` for the default schedule."""
    return build_schedule(m, eps, L, mu).total * eps * eps / num_rounds(m) ** 4


def identical_collection(m: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Random biases with ``alpha = beta``."""
    a = rng.uniform(-1, 1, size=m)
    return a, a.copy()


def spread_collection(m: int, eps: float, rng: np.random.Generator):
    """Every pair at ``||p_i - q_i||_2^2 = eps^2``."""
    d = math.sqrt(2) * eps
    if d > 2:
        raise ValueError(f"eps={eps} is infeasible: per-pair distance cannot exceed 2")
    beta = rng.uniform(-1, 1 - d, size=m)
    return beta + d, beta


def concentrated_collection(m: int, eps: float, rng: np.random.Generator, index: int | None = None):
    """One pair carries all the distance: ``||p_j - q_j||_2^2 = m eps^2``, the rest match."""
    d = math.sqrt(2 * m) * eps
    if d > 2 + 1e-12:
        raise ValueError(f"eps={eps} is infeasible for m={m}: needs m*eps^2 <= 2")
    d = min(d, 2.0)
    alpha = rng.uniform(-1, 1, size=m)
    beta = alpha.copy()
    j = int(rng.integers(m)) if index is None else index
    beta[j] = rng.uniform(-1, 1 - d)
    alpha[j] = beta[j] + d
    return alpha, beta


def collection_trials(alpha, beta, eps: float, trials: int, master_seed: int,
                      L: int = DEFAULT_L, mu: float | None = None) -> list[CollectionVerdict]:
    """Independent runs of :func:`test_collection` on one fixed collection."""
    schedule = build_schedule(len(alpha), eps, L, mu)
    return [
        test_collection(PairOracle.from_biases(alpha, beta, spawn_seed(master_seed, t)),
                        eps, schedule=schedule)
        for t in range(trials)
    ]
