"""``senrec`` command line: run a protocol on JSON inputs and optionally verify it.

Exit codes: 0 success, 1 input/normalization/usage error, 2 verification failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import oracle, protocols
from .errors import SenrecError
from .evolution import DENSE_QUBIT_CAP, run
from .jsonio import read_matrix, read_vector
from .sampling import oracle_arguments, random_instance, random_size

EXIT_OK, EXIT_INPUT, EXIT_VERIFY = 0, 1, 2

COMMAND_OPS = {
    "matvec": "matvec",
    "matmul": "matmul",
    "sum": "matsum",
    "det": "det",
    "inv": "inverse",
    "solve": "linsolve",
}


@dataclass
class RunReport:
    operation: str
    engine: str
    scales: dict[str, Any]
    extracted: dict[str, complex]
    result: Any
    oracle: Any = None
    max_deviation: float | None = None
    tolerance: float | None = None
    wall_time: float = 0.0
    notes: list[str] = field(default_factory=list)

    @property
    def verified(self) -> bool | None:
        if self.max_deviation is None:
            return None
        return self.max_deviation <= self.tolerance

    def to_dict(self) -> dict:
        doc = {
            "operation": self.operation,
            "engine": self.engine,
            "scales": self.scales,
            "extracted": {k: _pair(v) for k, v in self.extracted.items()},
            "result": _nested(self.result),
            "wall_time_s": self.wall_time,
        }
        if self.max_deviation is not None:
            doc.update(
                oracle=_nested(self.oracle),
                max_deviation=self.max_deviation,
                tolerance=self.tolerance,
                verified=self.verified,
            )
        return doc

    def to_text(self) -> str:
        lines = [f"operation: {self.operation}", f"engine: {self.engine}"]
        lines.append("scales: " + ", ".join(f"{k}={_fmt_scale(v)}" for k, v in self.scales.items()))
        lines.append("extracted coherence elements:")
        lines += [f"  [{k}] {_fmt(v)}" for k, v in self.extracted.items()]
        lines.append("result:")
        lines += ["  " + row for row in _fmt_block(self.result)]
        if self.max_deviation is not None:
            lines.append("oracle:")
            lines += ["  " + row for row in _fmt_block(self.oracle)]
            verdict = "PASS" if self.verified else "FAIL"
            lines.append(f"max deviation: {self.max_deviation:.3e} (tolerance {self.tolerance:g}) {verdict}")
        lines += self.notes
        lines.append(f"wall time: {self.wall_time:.4f} s")
        return "\n".join(lines)


def _pair(z) -> list[float]:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def _nested(x):
    if x is None:
        return None
    a = np.asarray(x, dtype=complex)
    if a.ndim == 0:
        return _pair(a.item())
    return [_nested(row) for row in a]


def _fmt(z) -> str:
    z = complex(z)
    sign = "-" if math.copysign(1.0, z.imag) < 0 else "+"
    return f"{z.real:.15g}{sign}{abs(z.imag):.15g}j"


def _fmt_scale(v) -> str:
    if isinstance(v, (tuple, list)):
        return "[" + ", ".join(f"{x:.15g}" for x in v) + "]"
    return f"{v:.15g}"


def _fmt_block(x) -> list[str]:
    a = np.asarray(x, dtype=complex)
    if a.ndim == 0:
        return [_fmt(a.item())]
    if a.ndim == 1:
        return [_fmt(z) for z in a]
    return ["  ".join(_fmt(z) for z in row) for row in a]


def _label(label) -> str:
    if isinstance(label, tuple):
        return ",".join(map(str, label))
    return str(label)


def execute(op: str, args: tuple, *, engine: str, policy: protocols.ScalePolicy,
            verify: bool, tolerance: float, dump_receiver: str | None = None,
            qubit_cap: int = DENSE_QUBIT_CAP, plan_kwargs: dict | None = None) -> RunReport:
    """Plan, run, decode and (optionally) verify one protocol instance."""
    if dump_receiver and engine != "dense":
        raise UsageError("--dump-receiver needs --engine dense (the sector engine never forms rho_R)")
    start = time.perf_counter()
    plan = protocols.PLANNERS[op](*args, policy=policy, **(plan_kwargs or {}))
    outcome = run(plan, engine, qubit_cap=qubit_cap)
    values = outcome.values()
    result = protocols.decode(plan, values)
    report = RunReport(
        operation=op,
        engine=engine,
        scales=dict(plan.scale_record),
        extracted={_label(k): v for k, v in values.items()},
        result=result,
    )
    if verify:
        expected = oracle.REFERENCES[op](*oracle_arguments(op, args))
        report.oracle = expected
        report.max_deviation = float(np.max(np.abs(np.asarray(result) - np.asarray(expected))))
        report.tolerance = tolerance
    if dump_receiver:
        Path(dump_receiver).write_text(outcome.receiver.to_json() + "\n")
        report.notes.append(f"receiver density written to {dump_receiver}")
    report.wall_time = time.perf_counter() - start
    return report


class UsageError(SenrecError):
    pass


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--engine", choices=("dense", "sector"), default="sector",
                        help="simulation engine (default: sector)")
    common.add_argument("--auto-scale", action=argparse.BooleanOptionalAction, default=True,
                        help="shrink inputs that do not fit under the unit norm (default: on)")
    common.add_argument("--vacuum-floor", type=float, default=0.25,
                        help="minimum |vacuum amplitude|^2 kept by auto-scaling")
    common.add_argument("--verify", action="store_true", help="compare with the classical oracle")
    common.add_argument("--tolerance", type=float, default=1e-9,
                        help="max absolute deviation accepted by --verify")
    common.add_argument("--dump-receiver", metavar="PATH",
                        help="write the receiver density matrix as JSON (dense engine only)")
    common.add_argument("--json", action="store_true", help="print a machine-readable JSON report")
    common.add_argument("--qubit-cap", type=int, default=DENSE_QUBIT_CAP,
                        help="largest system the dense engine will simulate")

    parser = argparse.ArgumentParser(
        prog="senrec", description="Sender-Receiver quantum matrix protocols simulator"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("matvec", parents=[common], help="matrix-vector product A v")
    p.add_argument("-a", required=True, metavar="A.json")
    p.add_argument("-v", required=True, metavar="v.json")

    p = sub.add_parser("matmul", parents=[common], help="matrix product A B")
    p.add_argument("-a", required=True, metavar="A.json")
    p.add_argument("-b", required=True, metavar="B.json")

    p = sub.add_parser("sum", parents=[common], help="matrix sum C + D")
    p.add_argument("-c", required=True, metavar="C.json")
    p.add_argument("-d", required=True, metavar="D.json")
    p.add_argument("--lambda", dest="lam", type=_positive_float, default=protocols.DEFAULT_LAMBDA)

    p = sub.add_parser("det", parents=[common], help="determinant of E")
    p.add_argument("-m", required=True, metavar="E.json")

    p = sub.add_parser("inv", parents=[common], help="inverse of E")
    p.add_argument("-m", required=True, metavar="E.json")
    p.add_argument("--sigma", type=_positive_float, default=protocols.DEFAULT_SIGMA)

    p = sub.add_parser("solve", parents=[common], help="solve E x = b for unit b")
    p.add_argument("-m", required=True, metavar="E.json")
    p.add_argument("-b", required=True, metavar="b.json")
    p.add_argument("--sigma", type=_positive_float, default=protocols.DEFAULT_SIGMA)
    p.add_argument("--normalize-b", action="store_true",
                   help="accept a non-unit b (normalized internally, x rescaled)")

    p = sub.add_parser("selftest", parents=[common],
                       help="random instances of every operation, verified against the oracle")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=5, help="instances per operation")
    p.add_argument("--max-size", type=int, default=2, help="largest matrix dimension")
    return parser


def _inputs(ns) -> tuple[str, tuple, dict]:
    op = COMMAND_OPS[ns.command]
    if op == "matvec":
        return op, (read_matrix(ns.a), read_vector(ns.v)), {}
    if op == "matmul":
        return op, (read_matrix(ns.a), read_matrix(ns.b)), {}
    if op == "matsum":
        return op, (read_matrix(ns.c), read_matrix(ns.d), ns.lam), {}
    if op == "det":
        return op, (read_matrix(ns.m),), {}
    if op == "inverse":
        return op, (read_matrix(ns.m), ns.sigma), {}
    return op, (read_matrix(ns.m), read_vector(ns.b), ns.sigma), {"normalize_b": ns.normalize_b}


def _selftest(ns, policy) -> int:
    rng = np.random.default_rng(ns.seed)
    failures = 0
    rows = []
    for op in protocols.PLANNERS:
        worst = 0.0
        for _ in range(ns.count):
            args = random_instance(op, rng, random_size(op, rng, ns.max_size))
            report = execute(op, args, engine=ns.engine, policy=policy, verify=True,
                             tolerance=ns.tolerance, qubit_cap=ns.qubit_cap)
            worst = max(worst, report.max_deviation)
        ok = worst <= ns.tolerance
        failures += not ok
        rows.append({"operation": op, "instances": ns.count, "max_deviation": worst, "passed": ok})
    if ns.json:
        print(json.dumps({"seed": ns.seed, "engine": ns.engine, "results": rows}, indent=1))
    else:
        for r in rows:
            verdict = "PASS" if r["passed"] else "FAIL"
            print(f"{verdict} {r['operation']:<9} n={r['instances']} max deviation {r['max_deviation']:.3e}")
    return EXIT_VERIFY if failures else EXIT_OK


def main(argv: list[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        policy = protocols.ScalePolicy("auto" if ns.auto_scale else "off", ns.vacuum_floor)
        if ns.command == "selftest":
            if ns.dump_receiver:
                raise UsageError("--dump-receiver is not available for selftest")
            return _selftest(ns, policy)
        op, args, kwargs = _inputs(ns)
        report = execute(op, args, engine=ns.engine, policy=policy, verify=ns.verify,
                         tolerance=ns.tolerance, dump_receiver=ns.dump_receiver,
                         qubit_cap=ns.qubit_cap, plan_kwargs=kwargs)
    except (SenrecError, ValueError, KeyError, OSError) as exc:
        print(f"senrec: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(json.dumps(report.to_dict(), indent=1) if ns.json else report.to_text())
    if report.verified is False:
        return EXIT_VERIFY
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
