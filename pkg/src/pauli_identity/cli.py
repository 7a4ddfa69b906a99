"""Command-line entry point.

Exit codes: 0 verdict "Yes" or success, 1 verdict "No" (or failed self-test),
2 usage error, 3 runtime error.

State mini-language for ``--rho`` / ``--sigma``::

    mixed                         maximally mixed state
    product:x,y,z[;x,y,z...]      Bloch vectors, qubit 0 first; one triple is repeated n times
    needle:<letters>:<eps>        (I + eps P)/2^n, letters with qubit 0 rightmost
    dense:<path>                  JSON {"n": int, "re": [[...]], "im": [[...]]}
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import collection as coll
from . import lowerbound as lb
from . import selftest
from .qit import MAX_QIT_QUBITS, QitInstance, qit_schedule, run_trials, test_identity
from .sampling import PairOracle, fresh_seed, spawn_seed
from .states import ProductState, check, load_dense, maximally_mixed, needle


class UsageError(ValueError):
    pass


def parse_state(text: str, n: int | None) -> object:
    kind, _, rest = text.partition(":")
    if kind == "mixed":
        if n is None:
            raise UsageError("'mixed' needs --n")
        return maximally_mixed(n)
    if kind == "product":
        try:
            triples = [[float(v) for v in part.split(",")] for part in rest.split(";")]
        except ValueError:
            raise UsageError(f"bad product state {text!r}") from None
        if any(len(t) != 3 for t in triples):
            raise UsageError(f"product state needs x,y,z triples: {text!r}")
        if len(triples) == 1 and n is not None:
            triples = triples * n
        return check(ProductState(np.array(triples)))
    if kind == "needle":
        letters, _, eps = rest.partition(":")
        try:
            return check(needle(letters, float(eps)))
        except ValueError as exc:
            raise UsageError(f"bad needle state {text!r}: {exc}") from None
    if kind == "dense":
        return load_dense(rest)
    raise UsageError(f"unknown state spec {text!r}")


def _write(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _majority_exit(verdicts) -> int:
    verdicts = list(verdicts)
    rejections = sum(v == "No" for v in verdicts)
    return 1 if 2 * rejections > len(verdicts) else 0


def _positive(name, value):
    if value is not None and not value > 0:
        raise UsageError(f"--{name} must be positive, got {value}")


def _validate_common(args) -> None:
    _positive("eps", args.eps)
    _positive("mu", getattr(args, "mu", None))
    if getattr(args, "L", 1) < 1:
        raise UsageError(f"--L must be >= 1, got {args.L}")
    if getattr(args, "trials", 1) < 1:
        raise UsageError(f"--trials must be >= 1, got {args.trials}")
    if getattr(args, "threads", 0) < 0:
        raise UsageError("--threads must be >= 0")


def cmd_identity(args) -> int:
    _validate_common(args)
    if args.n is not None and not 1 <= args.n <= MAX_QIT_QUBITS:
        raise UsageError(f"--n must lie in [1, {MAX_QIT_QUBITS}]")
    rho = parse_state(args.rho, args.n)
    sigma = parse_state(args.sigma, args.n)
    if args.n is not None and (rho.n != args.n or sigma.n != args.n):
        raise UsageError(f"states have n={rho.n}/{sigma.n}, --n is {args.n}")
    seed = fresh_seed() if args.seed is None else args.seed
    inst = QitInstance(rho, sigma, args.eps, args.L, args.mu, seed, args.exclude_identity)
    if args.trials == 1:
        # a single run uses the master seed directly
        reports = [test_identity(inst)]
    else:
        reports = run_trials(rho, sigma, args.eps, args.trials, seed, L=args.L, mu=args.mu,
                             exclude_identity=args.exclude_identity, threads=args.threads)
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["trial", "seed", "verdict", "total_samples", "trigger_k", "trigger_pauli"])
        for t, r in enumerate(reports):
            trig = r.triggering_index or {}
            w.writerow([t, r.seed, r.verdict, r.total_samples, trig.get("k", ""), trig.get("pauli", "")])
        text = buf.getvalue()
    elif args.trials == 1:
        text = reports[0].to_json(timing=args.timing) + "\n"
    else:
        doc = {
            "master_seed": seed,
            "trials": args.trials,
            "rejections": sum(r.verdict == "No" for r in reports),
            "reports": [r.to_dict(timing=args.timing) for r in reports],
        }
        text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    _write(text, args.output)
    return _majority_exit(r.verdict for r in reports)


def load_collection_spec(path: str, seed: int):
    """Read a collection from a JSON file, or from inline JSON starting with ``{``."""
    text = path if path.lstrip().startswith("{") else Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from None
    if "alpha" in doc:
        if "beta" not in doc:
            raise UsageError(f"{path}: 'alpha' given without 'beta'")
        return np.asarray(doc["alpha"], float), np.asarray(doc["beta"], float)
    kind = doc.get("kind")
    if "m" not in doc:
        raise UsageError(f"{path}: generator spec needs 'm'")
    m = int(doc["m"])
    rng = np.random.default_rng(doc.get("seed", seed))
    if kind == "identical":
        return coll.identical_collection(m, rng)
    if kind == "spread":
        return coll.spread_collection(m, float(doc["eps"]), rng)
    if kind == "concentrated":
        return coll.concentrated_collection(m, float(doc["eps"]), rng)
    raise UsageError(f"{path}: unknown collection kind {kind!r}")


def cmd_collection(args) -> int:
    _validate_common(args)
    seed = fresh_seed() if args.seed is None else args.seed
    alpha, beta = load_collection_spec(args.spec, seed)
    schedule = coll.build_schedule(alpha.size, args.eps, args.L, args.mu)
    if args.emit_schedule:
        Path(args.emit_schedule).write_text(schedule.to_csv())
    results = []
    for t in range(args.trials):
        oracle = PairOracle.from_biases(alpha, beta, spawn_seed(seed, t))
        res = coll.test_collection(oracle, args.eps, schedule=schedule)
        results.append({
            "trial": t, "seed": oracle.master_seed, "verdict": res.verdict,
            "trigger": list(res.trigger) if res.trigger else None,
            "total_samples": res.total_samples, "per_k_samples": res.per_k_samples,
        })
    doc = {
        "config": {"spec": args.spec, "m": int(alpha.size), "eps": args.eps, "L": args.L,
                   "mu": args.mu, "seed": seed, "trials": args.trials},
        "mean_sq_distance": coll.mean_sq_distance(alpha, beta),
        "rejections": sum(r["verdict"] == "No" for r in results),
        "results": results,
    }
    _write(json.dumps(doc, sort_keys=True, indent=2) + "\n", args.output)
    return _majority_exit(r["verdict"] for r in results)


def cmd_mixedness(args) -> int:
    _validate_common(args)
    seed = fresh_seed() if args.seed is None else args.seed
    ens = lb.NeedleEnsemble(args.n, args.eps, args.family)
    if args.budgets:
        budgets = [int(b) for b in args.budgets.split(",")]
    else:
        per = lb.detection_shots(args.n, args.eps)
        budgets = sorted({ens.size * s for s in (1, max(1, per // 16), max(1, per // 4), per)})
    if any(b < 1 for b in budgets):
        raise UsageError("budgets must be positive")
    strategies = args.strategies.split(",")
    for s in strategies:
        if s not in lb.STRATEGIES:
            raise UsageError(f"unknown strategy {s!r}")
    rows = lb.sweep_advantage(ens, budgets, strategies, args.trials, seed, threads=args.threads)
    _write(lb.sweep_to_csv(rows), args.output)
    return 0


def cmd_schedule(args) -> int:
    _validate_common(args)
    if (args.n is None) == (args.m is None):
        raise UsageError("give exactly one of --n (quantum reduction) or --m (raw collection)")
    if args.n is not None:
        sched = qit_schedule(args.n, args.eps, args.L, args.mu, args.exclude_identity)
    else:
        sched = coll.build_schedule(args.m, args.eps, args.L, args.mu)
    _write(sched.to_csv(), args.output)
    return 0


def cmd_calibrate(args) -> int:
    _validate_common(args)
    seed = fresh_seed() if args.seed is None else args.seed
    grid = [int(v) for v in args.L_grid.split(",")]
    rng = np.random.default_rng(seed)
    cases = {
        "identical": coll.identical_collection(args.m, rng),
        "spread": coll.spread_collection(args.m, args.eps, rng),
    }
    if args.m * args.eps**2 <= 2:
        cases["concentrated"] = coll.concentrated_collection(args.m, args.eps, rng)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["L", "case", "trials", "correct", "rate", "passes"])
    smallest = None
    for L in sorted(grid):
        ok = True
        for case, (a, b) in cases.items():
            res = coll.collection_trials(a, b, args.eps, args.trials, seed, L=L, mu=args.mu)
            want = "Yes" if case == "identical" else "No"
            correct = sum(r.verdict == want for r in res)
            rate = correct / args.trials
            ok &= rate >= 2 / 3
            w.writerow([L, case, args.trials, correct, repr(rate), rate >= 2 / 3])
        if ok and smallest is None:
            smallest = L
    _write(buf.getvalue(), args.output)
    print(f"smallest passing L: {smallest}", file=sys.stderr)
    return 0


def cmd_selftest(args) -> int:
    return 0 if selftest.main(args.seed or 0) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pauli-qit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, trials=True):
        p.add_argument("--eps", type=float, required=True)
        p.add_argument("--L", type=int, default=coll.DEFAULT_L)
        p.add_argument("--mu", type=float, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--output", "-o", default=None)
        p.add_argument("--threads", type=int, default=1, help="0 = one per CPU")
        if trials:
            p.add_argument("--trials", type=int, default=1)

    p = sub.add_parser("identity", help="test rho == sigma via Pauli measurements")
    common(p)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--rho", required=True)
    p.add_argument("--sigma", required=True)
    p.add_argument("--exclude-identity", action="store_true")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--timing", action="store_true", help="record wall-clock time (breaks byte reproducibility)")
    p.set_defaults(func=cmd_identity)

    p = sub.add_parser("collection", help="run the collection tester on a synthetic collection")
    common(p)
    p.add_argument("--spec", required=True, help="JSON (file or inline) with alpha/beta arrays or a generator kind")
    p.add_argument("--emit-schedule", default=None, metavar="PATH")
    p.set_defaults(func=cmd_collection)

    p = sub.add_parser("mixedness", help="advantage sweep against the needle ensemble")
    common(p)
    p.set_defaults(trials=100)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--family", choices=["full", "xyz"], default="full")
    p.add_argument("--budgets", default=None, help="comma-separated total shot budgets")
    p.add_argument("--strategies", default="uniform-split")
    p.set_defaults(func=cmd_mixedness)

    p = sub.add_parser("schedule", help="print the per-round schedule as CSV")
    common(p, trials=False)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--exclude-identity", action="store_true")
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("calibrate", help="smallest L meeting the 2/3 guarantees empirically")
    common(p)
    p.set_defaults(trials=100)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--L-grid", default="1,2,5,10,20,50,100")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("selftest", help="exact identity checks")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_selftest)
    return parser


def execute(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, ValueError) as exc:
        print(f"pauli-qit: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"pauli-qit: runtime error: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(execute())


if __name__ == "__main__":
    main()

