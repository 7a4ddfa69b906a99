"""Mixedness testing against the needle ensemble.

The unknown state is either ``I/2^n`` or ``(I + eps P)/2^n`` for a uniformly
random ``P`` from a family (all non-identity strings, or ``{X,Y,Z}^n``).
Only ``P`` itself has a nonzero bias, so a measurement schedule that spends
few shots on each string cannot tell the hypotheses apart.

The distinguisher is fixed: declare "needle" iff some measured index has
``|f_i - 1/2| > sqrt(ln(2 F / delta_d) / (2 s_i))`` where ``f_i`` is its
outcome-0 frequency over ``s_i`` shots and ``F`` the number of measured
indices.  By Hoeffding and a union bound its false-alarm rate is at most
``delta_d``.  It is a reasonable test, not an optimal one.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import binomtest

from .pauli import PauliString
from .sampling import PairOracle, derive_substream, make_rng, spawn_seed
from .states import NeedleState, maximally_mixed

DEFAULT_DELTA = 0.1
DEFAULT_ROUNDS = 4
STRATEGIES = ("uniform-split", "adaptive-greedy")


@dataclass(frozen=True)
class NeedleEnsemble:
    n: int
    eps: float
    family: str = "full"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not 0 < self.eps <= 1:
            raise ValueError(f"eps must lie in (0, 1], got {self.eps}")
        if self.family not in ("full", "xyz"):
            raise ValueError(f"family must be 'full' or 'xyz', got {self.family!r}")

    def members(self) -> np.ndarray:
        """Pauli indices of the family, in increasing order."""
        if self.family == "full":
            return np.arange(1, 4**self.n, dtype=np.int64)
        idx = np.zeros(1, dtype=np.int64)
        for j in range(self.n):
            idx = (idx[:, None] + (np.arange(1, 4, dtype=np.int64) << (2 * j))[None, :]).ravel()
        return np.sort(idx)

    @property
    def size(self) -> int:
        return 4**self.n - 1 if self.family == "full" else 3**self.n

    def state(self, index: int) -> NeedleState:
        return NeedleState(PauliString(self.n, int(index)), self.eps)


@dataclass(frozen=True)
class MeasurementSchedule:
    indices: np.ndarray
    shots: np.ndarray

    def __post_init__(self):
        if len(self.indices) != len(self.shots):
            raise ValueError("indices and shots must have equal length")
        if np.any(np.asarray(self.shots) <= 0):
            raise ValueError("schedule rows with zero shots are not allowed")

    @property
    def budget(self) -> int:
        return int(np.sum(self.shots))


def uniform_split(indices, budget: int) -> MeasurementSchedule:
    """Spread ``budget`` shots as evenly as possible, earlier indices first.

    With fewer shots than indices, only the first ``budget`` indices are measured.
    """
    idx = np.asarray(indices, dtype=np.int64)
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    base, extra = divmod(budget, idx.size)
    shots = np.full(idx.size, base, dtype=np.int64)
    shots[:extra] += 1
    keep = shots > 0
    return MeasurementSchedule(idx[keep], shots[keep])


def bonferroni_threshold(shots, num_indices: int, delta: float = DEFAULT_DELTA) -> np.ndarray:
    return np.sqrt(math.log(2 * num_indices / delta) / (2 * np.asarray(shots, dtype=float)))


def distinguish(counts, shots, delta: float = DEFAULT_DELTA) -> bool:
    """``True`` ("needle") iff some frequency clears its Bonferroni threshold."""
    counts = np.asarray(counts, dtype=float)
    shots = np.asarray(shots, dtype=float)
    if shots.size == 0:
        return False
    dev = np.abs(counts / shots - 0.5)
    return bool(np.any(dev > bonferroni_threshold(shots, shots.size, delta)))


@dataclass(frozen=True)
class MixednessTrial:
    guess: str
    truth: str
    needle_index: int | None
    samples: int

    @property
    def correct(self) -> bool:
        return self.guess == self.truth


def _truth_oracle(ensemble: NeedleEnsemble, seed: int) -> tuple[PairOracle, str, int | None]:
    rng = make_rng(derive_substream(seed, 0, "select", 0))
    members = ensemble.members()
    if rng.random() < 0.5:
        state, truth, p = maximally_mixed(ensemble.n), "mixed", None
    else:
        p = int(members[rng.integers(members.size)])
        state, truth = ensemble.state(p), "needle"
    mixed = maximally_mixed(ensemble.n)
    oracle = PairOracle(
        4**ensemble.n, lambda idx: (state.expectations(idx), mixed.expectations(idx)), seed
    )
    return oracle, truth, p


def run_mixedness_trial(
    ensemble: NeedleEnsemble,
    schedule: MeasurementSchedule,
    seed: int,
    delta: float = DEFAULT_DELTA,
) -> MixednessTrial:
    """One trial with a fixed (non-adaptive) schedule."""
    oracle, truth, p = _truth_oracle(ensemble, seed)
    counts = np.array(
        [oracle.draw("P", int(i), int(s), epoch=e)
         for e, (i, s) in enumerate(zip(schedule.indices, schedule.shots))]
    )
    guess = "needle" if distinguish(counts, schedule.shots, delta) else "mixed"
    return MixednessTrial(guess, truth, p, oracle.ledger.total)


def run_adaptive_trial(
    ensemble: NeedleEnsemble,
    budget: int,
    seed: int,
    delta: float = DEFAULT_DELTA,
    rounds: int = DEFAULT_ROUNDS,
) -> MixednessTrial:
    """Greedy reallocation: each round halves the candidate set to the most biased indices.

    Round ``r`` spends ``budget // rounds`` shots (the last round takes the
    remainder) uniformly over the current candidates.
    """
    oracle, truth, p = _truth_oracle(ensemble, seed)
    members = ensemble.members()
    counts = np.zeros(members.size, dtype=np.int64)
    shots = np.zeros(members.size, dtype=np.int64)
    candidates = np.arange(members.size)
    per_round = [budget // rounds] * rounds
    per_round[-1] += budget - sum(per_round)
    epoch = 0
    for r, b in enumerate(per_round):
        if r > 0 and np.any(shots[candidates] > 0):
            seen = candidates[shots[candidates] > 0]
            dev = np.abs(counts[seen] / shots[seen] - 0.5)
            keep = max(1, math.ceil(candidates.size / 2))
            candidates = seen[np.argsort(-dev, kind="stable")[:keep]]
        if b == 0 or candidates.size == 0:
            continue
        sched = uniform_split(members[candidates], b)
        for i, s in zip(sched.indices, sched.shots):
            pos = np.searchsorted(members, i)
            counts[pos] += oracle.draw("P", int(i), int(s), epoch=epoch)
            shots[pos] += s
            epoch += 1
    measured = shots > 0
    guess = "needle" if distinguish(counts[measured], shots[measured], delta) else "mixed"
    return MixednessTrial(guess, truth, p, oracle.ledger.total)


def _trial(ensemble, strategy, budget, seed, delta):
    if strategy == "uniform-split":
        return run_mixedness_trial(ensemble, uniform_split(ensemble.members(), budget), seed, delta)
    if strategy == "adaptive-greedy":
        return run_adaptive_trial(ensemble, budget, seed, delta)
    raise ValueError(f"unknown strategy {strategy!r}")


def advantage_interval(successes: int, trials: int, confidence: float = 0.95):
    """Advantage ``2 * rate - 1`` with a Wilson interval mapped the same way."""
    ci = binomtest(successes, trials).proportion_ci(confidence, method="wilson")
    rate = successes / trials
    return 2 * rate - 1, 2 * ci.low - 1, 2 * ci.high - 1


SWEEP_COLUMNS = ["n", "eps", "family", "strategy", "budget", "trials", "successes",
                 "advantage", "ci_low", "ci_high", "seed"]


def sweep_advantage(
    ensemble: NeedleEnsemble,
    budgets,
    strategies=("uniform-split",),
    trials: int = 100,
    seed: int = 0,
    delta: float = DEFAULT_DELTA,
    threads: int = 1,
) -> list[dict]:
    """Empirical distinguishing advantage for every (budget, strategy) cell.

    Trial ``t`` of every cell uses ``spawn_seed(seed, t)``, so cells share
    their coin flips and needle choices (common random numbers).
    """
    if trials < 100:
        raise ValueError(f"at least 100 trials per cell are required, got {trials}")
    rows = []
    for strategy in strategies:
        for budget in budgets:
            seeds = [spawn_seed(seed, t) for t in range(trials)]

            def one(s, strategy=strategy, budget=budget):
                return _trial(ensemble, strategy, int(budget), s, delta).correct

            if threads == 1:
                wins = sum(map(one, seeds))
            else:
                with ThreadPoolExecutor(max_workers=threads or None) as pool:
                    wins = sum(pool.map(one, seeds))
            adv, lo, hi = advantage_interval(wins, trials)
            rows.append({
                "n": ensemble.n, "eps": ensemble.eps, "family": ensemble.family,
                "strategy": strategy, "budget": int(budget), "trials": trials,
                "successes": int(wins), "advantage": adv, "ci_low": lo, "ci_high": hi,
                "seed": seed,
            })
    return rows


def sweep_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in (row[c] for c in SWEEP_COLUMNS)])
    return buf.getvalue()


def monotone_within_ci(rows) -> bool:
    """No cell's upper CI falls below an earlier (smaller-budget) cell's lower CI."""
    by_strategy: dict[str, list[dict]] = {}
    for r in rows:
        by_strategy.setdefault(r["strategy"], []).append(r)
    for cells in by_strategy.values():
        cells = sorted(cells, key=lambda r: r["budget"])
        for i, later in enumerate(cells):
            if any(later["ci_high"] < earlier["ci_low"] for earlier in cells[:i]):
                return False
    return True


def detection_shots(n: int, eps: float) -> int:
    """Per-index shots ``ceil(40 ln(4^n) / eps^2)`` used as the "enough" budget."""
    return math.ceil(40 * math.log(4**n) / eps**2)
