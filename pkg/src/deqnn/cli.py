"""Command line entry point: ``deqnn run|certify|plot|oracle``.

Exit codes: 0 success, 1 a certified bound failed, 2 invalid input, 3 training diverged.
"""
from __future__ import annotations

import argparse
import json
import logging
from pathlib import Path
import sys

import numpy as np

from .harness import ConfigError, ExperimentConfig, certify, emit_plot, load_report, run_experiment
from .linalg import DensityMatrix, DensityMatrixError
from .optimizer import TrainingDiverged
from .quantities import QuantityKind

EXIT_OK, EXIT_BOUND, EXIT_INVALID, EXIT_DIVERGED = 0, 1, 2, 3

# CLI flag -> config key
_OVERRIDES = {
    "seed": "seed", "qubits": "qubits", "rank": "rank", "epochs": "epochs", "lr": "learning_rate",
    "layers": "layers", "discard": "discard_qubits", "quantities": "quantities", "alpha": "alpha",
    "q": "q", "shots": "shots", "states": "num_states", "early_stop": "early_stop",
}


def save_state(path, rho) -> None:
    """Write a density matrix as ``{"qubits": n, "matrix": [[re, im], ...]}`` (row-major)."""
    dm = DensityMatrix(rho)
    flat = [[float(z.real), float(z.imag)] for z in np.asarray(dm.matrix).reshape(-1)]
    Path(path).write_text(json.dumps({"qubits": dm.qubits, "matrix": flat}))


def load_state(path) -> DensityMatrix:
    try:
        d = json.loads(Path(path).read_text())
        n = int(d["qubits"])
        entries = np.asarray(d["matrix"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"{path}: malformed state file ({exc})") from exc
    dim = 2**n
    if entries.shape != (dim * dim, 2):
        raise ValueError(f"{path}: expected {dim * dim} [re, im] pairs for {n} qubits")
    return DensityMatrix((entries[:, 0] + 1j * entries[:, 1]).reshape(dim, dim))


def _cmd_run(args) -> int:
    cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    over = {key: getattr(args, flag) for flag, key in _OVERRIDES.items()}
    over = {k: (str(v) if v is not None else None) for k, v in over.items()}
    if args.staged:
        over["staged_discard"] = "true"
    cfg = cfg.with_overrides(**over)
    out = Path(args.out) if args.out else Path("runs") / f"q{cfg.qubits}_r{cfg.rank}_s{cfg.seed}"
    report = run_experiment(cfg, out_dir=out)
    print(f"final cost {report.final_cost:.3e} after {report.epochs} epochs ({report.termination})")
    for qd in report.quantities:
        flag = "ok" if qd["satisfied"] else "VIOLATED"
        print(f"  {qd['label']:<28} exact {qd['exact']:.6f}  est {qd['estimate']:.6f}  "
              f"dev {qd['deviation']:.2e}  bound {qd['bound']:.2e}  {flag}")
    for w in report.warnings:
        print(f"warning: {w}")
    print(f"wrote {out / 'trace.csv'} and {out / 'report.json'}")
    return EXIT_OK


def _cmd_certify(args) -> int:
    results = certify(load_report(args.report))
    for r in results:
        print(f"{r.label:<30} deviation {r.measured_deviation:.3e}  bound {r.bound_value:.3e}  "
              f"{'ok' if r.satisfied else 'VIOLATED'}")
    failed = sum(not r.satisfied for r in results)
    print(f"{len(results) - failed}/{len(results)} bounds satisfied")
    return EXIT_OK if failed == 0 else EXIT_BOUND


def _cmd_plot(args) -> int:
    print(emit_plot(args.trace, args.out))
    return EXIT_OK


def _cmd_oracle(args) -> int:
    kind = QuantityKind.parse(args.quantity, args.alpha, args.q)
    states = [load_state(p) for p in args.state]
    need = 2 if kind.two_state else 1
    if len(states) != need:
        raise ValueError(f"{kind.name} needs {need} state file(s), got {len(states)}")
    print(repr(kind.evaluate(*states)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="deqnn", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="train a DEQNN and write trace.csv and report.json")
    r.add_argument("--config", help="key = value config file")
    r.add_argument("--out", help="output directory")
    r.add_argument("--seed", type=int)
    r.add_argument("--qubits", type=int)
    r.add_argument("--rank", type=int)
    r.add_argument("--states", type=int, help="number of input states")
    r.add_argument("--epochs", type=int)
    r.add_argument("--lr", type=float)
    r.add_argument("--early-stop", dest="early_stop", type=float)
    r.add_argument("--layers", type=int)
    r.add_argument("--discard", type=int, help="qubits in the discarded system")
    r.add_argument("--quantities", help="comma list, e.g. von_neumann,renyi:2,fidelity")
    r.add_argument("--alpha", type=float)
    r.add_argument("--q", type=float)
    r.add_argument("--shots", type=int, help="sampled swap tests with this many shots")
    r.add_argument("--staged", action="store_true", help="discard qubits one stage at a time")
    r.set_defaults(func=_cmd_run)

    c = sub.add_parser("certify", help="re-check the bounds recorded in a report")
    c.add_argument("--report", required=True)
    c.set_defaults(func=_cmd_certify)

    pl = sub.add_parser("plot", help="render a trace CSV as SVG")
    pl.add_argument("--trace", required=True)
    pl.add_argument("--out", required=True)
    pl.set_defaults(func=_cmd_plot)

    o = sub.add_parser("oracle", help="exact value of a quantity on serialized states")
    o.add_argument("quantity")
    o.add_argument("--state", action="append", required=True)
    o.add_argument("--alpha", type=float, default=0.5)
    o.add_argument("--q", type=float, default=1.5)
    o.set_defaults(func=_cmd_oracle)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except TrainingDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (ConfigError, DensityMatrixError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
