"""Command-line front end and reproducibility harness.

Subcommands wrap the library: ``factor``, ``order``, ``dlog``, ``phase``,
``qft``, and ``selftest`` (the acceptance suite).  Every run is deterministic
given ``--seed``; ``--json`` emits a machine-readable report whose fields,
apart from wall time, are byte-identical across reruns.

Exit codes: 0 success, 1 soft failure (a retryable reconstruction miss),
2 hard error (bad arguments, budget exceeded).
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import acceptance
from .asp import (SolveFailure, discrete_log, factor, find_order,
                  modular_action)
from .circuits import MAX_QUBITS, Gate, PermutationTable
from .phase_est import (InconsistentLocalizationError,
                        ReconstructionFailureError, measure_eigenvalue_exact)
from .qft import CyclicGroupSpec, QubitBudgetError, garbage_qubits, qft_abelian
from .rng import rng_for

EXIT_OK, EXIT_SOFT, EXIT_HARD = 0, 1, 2


@dataclass
class RunConfig:
    seed: int = 0
    epsilon: float | None = None
    qubit_cap: int = MAX_QUBITS
    json_output: bool = False
    trial_cap: int = 20

    def __post_init__(self):
        if self.epsilon is not None and not 0.0 < self.epsilon < 0.5:
            raise ValueError("epsilon must be in (0, 1/2)")
        if not 1 <= self.qubit_cap <= MAX_QUBITS:
            raise ValueError(f"qubit cap must be in [1, {MAX_QUBITS}]")


def _report(config: RunConfig, command: str, inputs: dict, status: str,
            result: dict, started: float, blackbox_calls: int | None = None,
            extra: dict | None = None) -> dict:
    rep = {
        "command": command,
        "inputs": inputs,
        "seed": config.seed,
        "epsilon": config.epsilon,
        "status": status,
        "result": result,
        "blackbox_calls": blackbox_calls,
        "wall_time_s": round(time.perf_counter() - started, 3),
    }
    if extra:
        rep.update(extra)
    return rep


def _emit(config: RunConfig, report: dict, text_lines: list[str]) -> None:
    if config.json_output:
        print(json.dumps(report, sort_keys=True))
    else:
        for line in text_lines:
            print(line)


def _require_register_budget(config: RunConfig, needed: int, what: str) -> None:
    if needed > config.qubit_cap:
        raise QubitBudgetError(f"{what} needs {needed} qubits, cap is "
                               f"{config.qubit_cap}")


def cmd_factor(n: int, config: RunConfig) -> int:
    started = time.perf_counter()
    _require_register_budget(config, (n - 1).bit_length() + 1, f"factoring {n}")
    rng = rng_for(config.seed, f"factor/{n}")
    stats: dict = {}
    try:
        p, q = factor(n, rng, base_cap=config.trial_cap, stats=stats)
    except SolveFailure as exc:
        _emit(config, _report(config, "factor", {"n": n}, "soft-failure",
                              {"error": str(exc)}, started,
                              stats.get("gate_uses")),
              [f"factor {n}: soft failure: {exc}"])
        return EXIT_SOFT
    rep = _report(config, "factor", {"n": n}, "ok", {"factors": [p, q]},
                  started, stats.get("gate_uses"),
                  extra={"attempts": stats.get("attempts")})
    _emit(config, rep, [f"{n} = {p} * {q}",
                        f"blackbox calls: {stats.get('gate_uses')}"])
    return EXIT_OK


def cmd_order(g: int, n: int, config: RunConfig) -> int:
    started = time.perf_counter()
    _require_register_budget(config, (n - 1).bit_length() + 1, f"order mod {n}")
    rng = rng_for(config.seed, f"order/{g}/{n}")
    stats: dict = {}
    try:
        r = find_order(g, n, rng, attempts=config.trial_cap, stats=stats)
    except SolveFailure as exc:
        _emit(config, _report(config, "order", {"g": g, "n": n}, "soft-failure",
                              {"error": str(exc)}, started,
                              stats.get("gate_uses")),
              [f"order({g} mod {n}): soft failure: {exc}"])
        return EXIT_SOFT
    rep = _report(config, "order", {"g": g, "n": n}, "ok", {"order": r},
                  started, stats.get("gate_uses"))
    _emit(config, rep, [f"order of {g} mod {n} = {r}",
                        f"blackbox calls: {stats.get('gate_uses')}"])
    return EXIT_OK


def cmd_dlog(q: int, zeta: int, g: int, config: RunConfig) -> int:
    started = time.perf_counter()
    _require_register_budget(config, (q - 1).bit_length() + 1, f"dlog mod {q}")
    rng = rng_for(config.seed, f"dlog/{q}/{zeta}/{g}")
    stats: dict = {}
    try:
        m = discrete_log(q, zeta, g, rng, attempts=config.trial_cap, stats=stats)
    except SolveFailure as exc:
        _emit(config, _report(config, "dlog", {"q": q, "zeta": zeta, "g": g},
                              "soft-failure", {"error": str(exc)}, started,
                              stats.get("gate_uses")),
              [f"dlog: soft failure: {exc}"])
        return EXIT_SOFT
    rep = _report(config, "dlog", {"q": q, "zeta": zeta, "g": g}, "ok",
                  {"exponent": m}, started, stats.get("gate_uses"))
    _emit(config, rep, [f"{zeta}^{m} = {g} (mod {q})",
                        f"blackbox calls: {stats.get('gate_uses')}"])
    return EXIT_OK


def cmd_phase(q: int, index: int, config: RunConfig) -> int:
    """Measure the exact eigenphase index/q of a q-cycle eigenstate."""
    started = time.perf_counter()
    spec = CyclicGroupSpec(q)
    _require_register_budget(config, spec.n + 1, f"phase demo q={q}")
    eps = config.epsilon if config.epsilon is not None else 0.01
    table = PermutationTable(spec.n, {i: (i + 1) % q for i in range(q)},
                             domain=range(q), name=f"+1 mod {q}")
    gate = Gate.permutation(table)
    vec = np.zeros(1 << spec.n, dtype=complex)
    for t in range(q):
        vec[t] = np.exp(-2j * np.pi * index * t / q) / np.sqrt(q)
    rng = rng_for(config.seed, f"phase/{q}/{index}")
    try:
        got = measure_eigenvalue_exact(gate, lambda: vec, eps, rng,
                                       n_bits=spec.n)
    except (ReconstructionFailureError, InconsistentLocalizationError) as exc:
        _emit(config, _report(config, "phase", {"q": q, "index": index},
                              "soft-failure", {"error": str(exc)}, started),
              [f"phase: soft failure: {exc}"])
        return EXIT_SOFT
    expected = Fraction(index % q, q)
    rep = _report(config, "phase", {"q": q, "index": index}, "ok",
                  {"measured": str(got), "expected": str(expected),
                   "exact_match": got == expected}, started)
    _emit(config, rep, [f"measured eigenphase {got} (expected {expected})"])
    return EXIT_OK if got == expected else EXIT_SOFT


def cmd_qft(orders: list[int], a: int | None, config: RunConfig) -> int:
    started = time.perf_counter()
    eps = config.epsilon if config.epsilon is not None else 1e-8
    specs = [CyclicGroupSpec(q) for q in orders]
    needed = sum(2 * s.n + garbage_qubits(s.q) for s in specs)
    _require_register_budget(config, needed, f"qft {orders}")
    prog = qft_abelian(specs, eps)
    total = prog.order
    columns = [a] if a is not None else list(range(total))
    if a is not None and not 0 <= a < total:
        raise ValueError(f"column index {a} out of range for order {total}")
    fidelities = {str(col): round(prog.fidelity(col), 12) for col in columns}
    rep = _report(config, "qft", {"orders": orders, "a": a}, "ok",
                  {"fidelities": fidelities, "qubits": prog.seq.memory_size},
                  started)
    lines = [f"transform on Z_{'xZ_'.join(str(q) for q in orders)} "
             f"({prog.seq.memory_size} qubits, eps={eps:g})"]
    lines += [f"  column {col}: fidelity {fidelities[str(col)]:.9f}"
              for col in columns]
    _emit(config, rep, lines)
    worst = min(fidelities.values())
    return EXIT_OK if worst >= 1 - 1e-3 else EXIT_SOFT


def cmd_selftest(config: RunConfig) -> int:
    started = time.perf_counter()
    results = acceptance.run_all(config.seed)
    all_pass = all(r.passed for r in results)
    if config.json_output:
        rep = _report(config, "selftest", {}, "ok" if all_pass else "fail",
                      {"criteria": [
                          {"index": r.index, "name": r.name,
                           "passed": r.passed, "details": r.details,
                           "seconds": round(r.seconds, 2)}
                          for r in results]},
                      started)
        print(json.dumps(rep, sort_keys=True))
    else:
        for r in results:
            mark = "PASS" if r.passed else "FAIL"
            print(f"[{mark}] {r.index:2d} {r.name} ({r.seconds:.1f}s)")
            if not r.passed:
                print(f"       {r.details}")
        print(f"{sum(r.passed for r in results)}/{len(results)} criteria passed")
    return EXIT_OK if all_pass else EXIT_SOFT


def _add_common_flags(p: argparse.ArgumentParser, top_level: bool) -> None:
    # real defaults only at the top level so subcommand copies (which let the
    # flags appear after the command) do not clobber already-parsed values
    def dflt(value):
        return value if top_level else argparse.SUPPRESS

    p.add_argument("--seed", type=int, default=dflt(0),
                   help="64-bit reproducibility seed (default 0)")
    p.add_argument("--eps", type=float, default=dflt(None),
                   help="error-probability budget in (0, 1/2)")
    p.add_argument("--qubit-cap", type=int, default=dflt(MAX_QUBITS),
                   help=f"memory ceiling in qubits (max {MAX_QUBITS})")
    p.add_argument("--json", action="store_true", default=dflt(False),
                   help="emit a machine-readable report")
    p.add_argument("--trials", type=int, default=dflt(20),
                   help="retry cap for randomized reductions")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eigenphase",
        description="Eigenvalue-measurement simulator: order finding, "
                    "factoring, discrete logs, and Fourier transforms on "
                    "cyclic groups.")
    _add_common_flags(parser, top_level=True)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_command(name, help_text):
        p = sub.add_parser(name, help=help_text)
        _add_common_flags(p, top_level=False)
        return p

    p = add_command("factor", "split an odd composite")
    p.add_argument("n", type=int)

    p = add_command("order", "multiplicative order of g mod n")
    p.add_argument("g", type=int)
    p.add_argument("n", type=int)

    p = add_command("dlog", "discrete logarithm of g base zeta mod q")
    p.add_argument("q", type=int)
    p.add_argument("zeta", type=int)
    p.add_argument("g", type=int)

    p = add_command("phase", "measure an exact q-cycle eigenphase")
    p.add_argument("q", type=int)
    p.add_argument("--index", type=int, default=1,
                   help="eigenvalue index p: phase p/q (default 1)")

    p = add_command("qft", "Fourier transform on Z_q or a product")
    p.add_argument("orders", type=str,
                   help="cyclic order q, or comma-separated q1,q2,...")
    p.add_argument("--a", type=int, default=None,
                   help="single input column (default: all columns)")

    add_command("selftest", "run the acceptance suite")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_HARD if exc.code not in (0, None) else EXIT_OK
    try:
        config = RunConfig(seed=args.seed, epsilon=args.eps,
                           qubit_cap=args.qubit_cap, json_output=args.json,
                           trial_cap=args.trials)
        if args.command == "factor":
            return cmd_factor(args.n, config)
        if args.command == "order":
            return cmd_order(args.g, args.n, config)
        if args.command == "dlog":
            return cmd_dlog(args.q, args.zeta, args.g, config)
        if args.command == "phase":
            return cmd_phase(args.q, args.index, config)
        if args.command == "qft":
            orders = [int(tok) for tok in args.orders.split(",") if tok]
            return cmd_qft(orders, args.a, config)
        if args.command == "selftest":
            return cmd_selftest(config)
        raise ValueError(f"unknown command {args.command}")
    except (ValueError, QubitBudgetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_HARD


if __name__ == "__main__":
    sys.exit(main())
