"""Config-driven DEQNN experiments: inputs, training, CSV traces, JSON reports, checks and plots."""
from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, field, fields, replace
import io
import json
import logging
import math
from pathlib import Path
import time
from typing import Sequence

import numpy as np

from .bounds import SLACK, BoundReport, disentanglement_bound, lemma1_bound
from .circuit import build_ansatz, circuit_unitary, default_layers
from .cost import (
    CostSpec,
    Sampled,
    common_witness,
    disentanglement_error,
    overlap_thresholds,
    purity_witness,
    witness_error,
)
from .linalg import DensityMatrix, QubitPartition, partial_trace, reduce_qubits
from .optimizer import (
    TrainingConfig,
    TrainingDiverged,
    TrainingTrace,
    evaluate_quantities,
    quantity_labels,
    train,
)
from .quantities import QuantityKind, default_quantities, trace_distance
from .stategen import product_with_pure, random_mixed_state, required_preserved_qubits

log = logging.getLogger(__name__)

CONVERGED_COST = 1e-2
DEFAULT_EARLY_STOP = 1e-4


def default_learning_rate(n: int) -> float:
    return 0.15 if n <= 4 else 0.08


def default_discard(n: int, required: int) -> int:
    """Discard as much as the joint support allows, capped at 2 qubits (1 above 4 qubits).

    A larger discarded system makes the target set larger and the circuit
    needs more layers to reach it; a constant-size discarded system keeps the
    default depths sufficient.
    """
    cap = 2 if n <= 4 else 1
    return max(1, min(n - required, cap))


class ConfigError(ValueError):
    pass


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _optional_float(text: str) -> float | None:
    t = text.strip().lower()
    return None if t in ("", "none", "auto") else float(t)


def _optional_int(text: str) -> int | None:
    t = text.strip().lower()
    return None if t in ("", "none", "auto", "exact") else int(t)


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment. ``layers``, ``learning_rate`` and ``discard_qubits`` left as
    ``None`` are chosen from the qubit count and the joint support of the states.
    ``shots=None`` means exact evaluation."""

    qubits: int = 4
    rank: int = 4
    num_states: int = 2
    quantities: tuple[str, ...] = ("von_neumann", "renyi", "tsallis", "trace_distance", "fidelity")
    alpha: float = 0.5
    q: float = 1.5
    layers: int | None = None
    epochs: int = 300
    learning_rate: float | None = None
    early_stop: float = DEFAULT_EARLY_STOP
    seed: int = 0
    discard_qubits: int | None = None
    shots: int | None = None
    staged_discard: bool = False
    stage_size: int = 1

    _PARSERS = {
        "qubits": int, "rank": int, "num_states": int, "alpha": float, "q": float,
        "layers": _optional_int, "epochs": int, "learning_rate": _optional_float, "early_stop": float,
        "seed": int, "discard_qubits": _optional_int, "shots": _optional_int,
        "staged_discard": _parse_bool, "stage_size": int,
        "quantities": lambda t: tuple(s.strip() for s in t.split(",") if s.strip()),
    }

    def __post_init__(self) -> None:
        object.__setattr__(self, "quantities", tuple(self.quantities))
        if self.qubits < 1:
            raise ConfigError("qubits must be >= 1")
        if self.rank < 1 or self.rank & (self.rank - 1) or self.rank > 2**self.qubits:
            raise ConfigError(f"rank must be a power of 2 no larger than 2^qubits, got {self.rank}")
        if self.num_states < 1:
            raise ConfigError("num_states must be >= 1")
        if self.layers is not None and self.layers < 1:
            raise ConfigError("layers must be >= 1")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.learning_rate is not None and not self.learning_rate > 0:
            raise ConfigError("learning_rate must be positive")
        if self.early_stop < 0:
            raise ConfigError("early_stop must be nonnegative")
        if self.discard_qubits is not None and not 1 <= self.discard_qubits < self.qubits:
            raise ConfigError(f"discard_qubits must lie in [1, {self.qubits - 1}]")
        if self.shots is not None and self.shots < 1:
            raise ConfigError("shots must be >= 1")
        if self.stage_size < 1:
            raise ConfigError("stage_size must be >= 1")
        try:
            self.kinds()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def kinds(self) -> list[QuantityKind]:
        return [QuantityKind.parse(s, self.alpha, self.q) for s in self.quantities]

    @classmethod
    def parse(cls, text: str) -> "ExperimentConfig":
        """Read flat ``key = value`` lines; ``#`` starts a comment."""
        return cls().with_overrides(**parse_key_values(text))

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        return cls.parse(Path(path).read_text())

    def with_overrides(self, **values) -> "ExperimentConfig":
        """Copy with fields replaced; string values are parsed by field type."""
        known = {f.name for f in fields(self)}
        out = {}
        for key, value in values.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            if value is None:
                continue
            if isinstance(value, str):
                try:
                    value = self._PARSERS[key](value)
                except (ValueError, TypeError) as exc:
                    raise ConfigError(f"bad value for {key}: {value!r}") from exc
            out[key] = value
        return replace(self, **out)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["quantities"] = list(self.quantities)
        return d


def parse_key_values(text: str) -> dict[str, str]:
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {n}: expected key = value, got {raw!r}")
        out[key.strip()] = value.strip()
    return out


def generate_states(config: ExperimentConfig) -> list[DensityMatrix]:
    return [random_mixed_state(config.qubits, config.rank, seed=[config.seed, i])
            for i in range(config.num_states)]


@dataclass
class ExperimentReport:
    config: dict
    quantities: list[dict]
    final_cost: float
    epsilon_witness: float
    epsilon_zero: float
    rank_bound: int
    discard_qubits: int
    required_preserved: int
    converged: bool
    termination: str
    epochs: int
    product_checks: list[dict]
    overlap_check: dict
    stages: list[dict]
    warnings: list[str]
    wall_time: float
    trace_path: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=_json_default)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        return cls(**{f.name: d[f.name] for f in fields(cls) if f.name in d})

    @property
    def all_bounds_satisfied(self) -> bool:
        return all(r.satisfied for r in certify(self))


def _json_default(x):
    if isinstance(x, np.generic):
        return x.item()
    raise TypeError(f"cannot serialize {type(x)}")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def trace_rows(trace: TrainingTrace, exact: dict[str, float], labels: Sequence[str]) -> list[list[str]]:
    rows = []
    for rec in trace.records:
        row = [str(rec.epoch), _fmt(rec.cost), _fmt(rec.grad_norm)]
        for lab in labels:
            est = rec.estimates[lab]
            row += [_fmt(exact[lab]), _fmt(est), _fmt(abs(est - exact[lab]))]
        rows.append(row)
    return rows


def trace_header(labels: Sequence[str]) -> list[str]:
    head = ["epoch", "cost", "grad_norm"]
    for lab in labels:
        head += [f"exact_{lab}", f"est_{lab}", f"dev_{lab}"]
    return head


def write_trace(path, header: list[str], rows: list[list[str]]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    Path(path).write_text(buf.getvalue())


def _stage_plan(n: int, discard: int, staged: bool, size: int) -> list[int]:
    if not staged:
        return [discard]
    plan = []
    left = discard
    while left > 0:
        plan.append(min(size, left))
        left -= plan[-1]
    return plan


def run_experiment(config: ExperimentConfig, out_dir=None, states: Sequence | None = None,
                   initial=None) -> ExperimentReport:
    """Generate inputs, train, and evaluate every requested quantity and check.

    ``states`` replaces the generated inputs (their count and size must match
    the config). ``initial`` sets the starting parameters of the first stage.
    When ``out_dir`` is given, ``trace.csv`` and ``report.json`` are written
    there; on divergence the partial trace is written before re-raising.
    """
    start = time.perf_counter()
    n = config.qubits
    kinds = config.kinds()
    if states is None:
        states = generate_states(config)
    states = [np.asarray(DensityMatrix(s).matrix) for s in states]
    if len(states) != config.num_states or any(s.shape != (2**n, 2**n) for s in states):
        raise ConfigError("supplied states do not match qubits/num_states")

    warnings: list[str] = []
    required = required_preserved_qubits(states)
    discard = config.discard_qubits if config.discard_qubits is not None else default_discard(n, required)
    if n - discard < required:
        msg = (f"preserved system has {n - discard} qubits but the joint support needs {required}; "
               "a perfect disentangler does not exist")
        log.warning(msg)
        warnings.append(msg)

    labels = quantity_labels(kinds, len(states))
    exact = evaluate_quantities(kinds, states)
    label_names = [lab for lab, _, _ in labels]
    evaluation = "exact" if config.shots is None else Sampled(config.shots, config.seed)

    out_path = Path(out_dir) if out_dir is not None else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)
    trace_file = out_path / "trace.csv" if out_path is not None else None

    rows: list[list[str]] = []
    stages: list[dict] = []
    current = states
    cur_n = n
    epochs_done = 0
    trace = None
    for s, k in enumerate(_stage_plan(n, discard, config.staged_discard, config.stage_size)):
        part = QubitPartition.leading(cur_n, k)
        ansatz = build_ansatz(cur_n, config.layers or default_layers(cur_n))
        spec = CostSpec(tuple(current), part, evaluation=evaluation)
        lr = config.learning_rate or default_learning_rate(cur_n)
        tcfg = TrainingConfig(steps=config.epochs, learning_rate=lr,
                              early_stop_threshold=config.early_stop,
                              seed=[config.seed, s] if s else config.seed, record_quantities=kinds)
        try:
            trace = train(ansatz, spec, tcfg, initial=initial if s == 0 else None)
        except TrainingDiverged as exc:
            exc.trace.records = _renumber(exc.trace.records, epochs_done)
            rows += trace_rows(exc.trace, exact, label_names)
            if trace_file is not None:
                write_trace(trace_file, trace_header(label_names), rows)
            raise
        trace.records = _renumber(trace.records, epochs_done)
        epochs_done += trace.epochs
        rows += trace_rows(trace, exact, label_names)
        stage = _stage_checks(ansatz, trace, current, part, config.rank)
        stage.update(stage=s, qubits=cur_n, discarded=k, layers=ansatz.layers, learning_rate=lr,
                     epochs=trace.epochs, termination=trace.termination)
        stages.append(stage)
        current = stage.pop("preserved_states")
        cur_n -= k

    if trace_file is not None:
        write_trace(trace_file, trace_header(label_names), rows)

    # composed stages: the errors add up
    final_eps = float(sum(st["final_cost"] for st in stages))
    estimates = evaluate_quantities(kinds, current)
    quantities = []
    for lab, kind, idx in labels:
        dev = abs(estimates[lab] - exact[lab])
        bound = disentanglement_bound(kind, config.rank, min(max(final_eps, 0.0), 1.0))
        quantities.append(dict(label=lab, quantity=str(kind), states=list(idx), exact=exact[lab],
                               estimate=estimates[lab], deviation=dev, bound=bound,
                               satisfied=dev <= bound + SLACK))
    last = stages[-1]
    converged = final_eps < CONVERGED_COST
    if not converged:
        warnings.append(f"training did not converge: final cost {final_eps:.3e} >= {CONVERGED_COST}")
    report = ExperimentReport(
        config=config.to_dict(),
        quantities=quantities,
        final_cost=final_eps,
        epsilon_witness=float(sum(st["epsilon_witness"] for st in stages)),
        epsilon_zero=float(sum(st["epsilon_zero"] for st in stages)),
        rank_bound=config.rank,
        discard_qubits=discard,
        required_preserved=required,
        converged=converged,
        termination=last["termination"],
        epochs=epochs_done,
        product_checks=[dict(entry, stage=st["stage"]) for st in stages for entry in st.pop("product_checks")],
        overlap_check=last["overlap_check"],
        stages=stages,
        warnings=warnings,
        wall_time=time.perf_counter() - start,
        trace_path=str(trace_file) if trace_file is not None else None,
    )
    if out_path is not None:
        (out_path / "report.json").write_text(report.to_json())
    return report


def _renumber(records, offset):
    for r in records:
        r.epoch += offset
    return records


def _stage_checks(ansatz, trace: TrainingTrace, states, part: QubitPartition, rank: int) -> dict:
    """Disentanglement errors and the product-distance and witness-overlap checks for one trained stage."""
    u = circuit_unitary(ansatz, trace.final_parameters)
    outs = [u @ s @ u.conj().T for s in states]
    red_a = [partial_trace(o, part, keep="discarded") for o in outs]
    red_b = [0.5 * (r + r.conj().T) for r in (partial_trace(o, part) for o in outs)]
    w = common_witness(red_a)
    eps_w = [witness_error(u, s, part, w) for s in states]
    eps_0 = [disentanglement_error(u, s, part) for s in states]
    product_checks = []
    for i, (o, rb) in enumerate(zip(outs, red_b)):
        t = trace_distance(o, product_with_pure(w, rb, part))
        b = lemma1_bound(rank, eps_w[i])
        product_checks.append(dict(state=i, trace_distance=t, epsilon=eps_w[i], bound=b, satisfied=t <= b + SLACK))
    eps = max(trace.final_cost, 0.0)
    self_min, cross_min = overlap_thresholds(eps, len(states))
    _, self_ov, _ = purity_witness(red_a[0], red_a[0])
    cross = [purity_witness(red_a[0], r)[2] for r in red_a[1:]]
    overlap_check = dict(epsilon=eps, self_overlap=self_ov, cross_overlaps=cross,
                  self_threshold=self_min, cross_threshold=cross_min,
                  satisfied=bool(self_ov >= self_min - SLACK and all(c >= cross_min - SLACK for c in cross)))
    return dict(final_cost=trace.final_cost, epsilon_witness=max(eps_w), epsilon_zero=max(eps_0),
                product_checks=product_checks, overlap_check=overlap_check, preserved_states=red_b)


def certify(report) -> list[BoundReport]:
    """Re-evaluate every bound recorded in a report (an :class:`ExperimentReport` or its dict)."""
    d = report.to_dict() if isinstance(report, ExperimentReport) else report
    cfg = d["config"]
    eps = min(max(float(d["final_cost"]), 0.0), 1.0)
    r = int(d["rank_bound"])
    out = []
    for qd in d["quantities"]:
        kind = QuantityKind.parse(qd["quantity"], cfg.get("alpha", 0.5), cfg.get("q", 1.5))
        out.append(BoundReport(quantity=str(kind), bound_value=disentanglement_bound(kind, r, eps),
                               measured_deviation=float(qd["deviation"]), r=r, epsilon=eps,
                               label=qd["label"]))
    for entry in d["product_checks"]:
        out.append(BoundReport(quantity="product_checks", bound_value=lemma1_bound(r, entry["epsilon"]),
                               measured_deviation=float(entry["trace_distance"]), r=r,
                               epsilon=float(entry["epsilon"]), T_rho=float(entry["trace_distance"]),
                               label=f"product_stage{entry.get('stage', 0)}_state{entry['state']}"))
    return out


def load_report(path) -> dict:
    return json.loads(Path(path).read_text())


def read_trace(path) -> tuple[list[str], np.ndarray]:
    """Header and numeric rows of a trace CSV."""
    text = Path(path).read_text()
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError(f"{path}: empty trace file") from None
    if header[:3] != ["epoch", "cost", "grad_norm"] or (len(header) - 3) % 3:
        raise ValueError(f"{path}: unexpected trace header {header}")
    rows = []
    for n, row in enumerate(reader, 2):
        if len(row) != len(header):
            raise ValueError(f"{path}: line {n} has {len(row)} fields, expected {len(header)}")
        try:
            rows.append([float(x) for x in row])
        except ValueError:
            raise ValueError(f"{path}: line {n} is not numeric") from None
    return header, np.array(rows, dtype=float).reshape(len(rows), len(header))


def emit_plot(trace_path, out_path) -> Path:
    """SVG chart of a trace: cost in gray, exact values in red, estimates in blue."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    header, data = read_trace(trace_path)
    labels = [h[len("exact_"):] for h in header[3::3]]
    panels = max(len(labels), 1)
    cols = min(panels, 3)
    nrows = math.ceil(panels / cols)
    fig, axes = plt.subplots(nrows, cols, figsize=(4.2 * cols, 3.2 * nrows), squeeze=False)
    epoch = data[:, 0]
    cost = data[:, 1]
    for i, ax in enumerate(axes.flat):
        if i >= panels:
            ax.axis("off")
            continue
        cax = ax.twinx() if labels else ax
        cax.plot(epoch, cost, color="gray", lw=1.0, label="cost")
        cax.set_ylabel("cost", color="gray")
        if labels:
            j = 3 + 3 * i
            ax.plot(epoch, data[:, j], color="red", lw=1.2, label="exact")
            ax.plot(epoch, data[:, j + 1], color="blue", lw=1.2, label="estimate")
            ax.set_title(labels[i], fontsize=9)
            ax.set_zorder(cax.get_zorder() + 1)
            ax.patch.set_visible(False)
        ax.set_xlabel("epoch")
    fig.tight_layout()
    out = Path(out_path)
    fig.savefig(out, format="svg")
    plt.close(fig)
    return out
