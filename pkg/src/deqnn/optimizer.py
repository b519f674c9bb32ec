"""Parameter-shift gradients and plain gradient-descent training."""
from __future__ import annotations

from dataclasses import dataclass, field
import logging
import math
from typing import Callable, Sequence

import numpy as np

from .circuit import Ansatz, evolve, evolve_columns, initialize_parameters, shift_differences
from .cost import (
    CostSpec,
    Sampled,
    apply_observables,
    column_reductions,
    cost_from_reductions,
    preserved_reductions,
    two_copy_cost,
)
from .quantities import QuantityKind

log = logging.getLogger(__name__)

SHIFT = math.pi / 2


def parameter_shift_gradient(cost_fn: Callable[[np.ndarray], float], theta, shift: float = SHIFT) -> np.ndarray:
    """``½ (f(θ + π/2 e_j) − f(θ − π/2 e_j))`` for every ``j``.

    Exact when each parameter enters ``cost_fn`` through a single Pauli rotation.
    Uses exactly ``2·len(θ)`` evaluations.
    """
    theta = np.asarray(theta, dtype=float)
    grad = np.empty_like(theta)
    factor = 1.0 / (2.0 * math.sin(shift))
    for j in range(theta.size):
        e = np.zeros_like(theta)
        e[j] = shift
        plus, minus = cost_fn(theta + e), cost_fn(theta - e)
        if not (math.isfinite(plus) and math.isfinite(minus)):
            raise FloatingPointError(f"non-finite cost at shifted parameter {j}")
        grad[j] = factor * (plus - minus)
    return grad


def finite_difference_gradient(cost_fn: Callable[[np.ndarray], float], theta, h: float = 1e-5) -> np.ndarray:
    if h <= 0:
        raise ValueError("h must be positive")
    theta = np.asarray(theta, dtype=float)
    grad = np.empty_like(theta)
    for j in range(theta.size):
        e = np.zeros_like(theta)
        e[j] = h
        grad[j] = (cost_fn(theta + e) - cost_fn(theta - e)) / (2.0 * h)
    return grad


def deqnn_gradient(theta, ansatz: Ansatz, spec: CostSpec, rng=None):
    """Cost, gradient and preserved reductions at ``θ``.

    Every parameter appears in both swap-test copies, so the cost contains
    second harmonics of each angle and the two-term shift rule applied to the
    whole cost is not exact. The rule is instead applied to one copy of the
    symmetric two-copy cost and doubled, which is exact.
    """
    theta = np.asarray(theta, dtype=float)
    if isinstance(spec.evaluation, Sampled):
        rng = rng if rng is not None else np.random.default_rng(spec.evaluation.seed)
        grad = 2.0 * parameter_shift_gradient(
            lambda t: two_copy_cost(t, theta, ansatz, spec, rng=rng), theta)
        value = two_copy_cost(theta, theta, ansatz, spec, rng=rng)
        return value, grad, preserved_reductions(evolve(ansatz, theta, spec.stack), spec.partition)

    reductions: list = []

    def observe(final):
        reductions.extend(column_reductions(final, spec))
        return apply_observables(final, reductions, spec)

    diff, final = shift_differences(ansatz, theta, spec.columns, observe)
    value = cost_from_reductions(reductions, spec)
    # d/dθ_j of 1 - w Σ Tr(...), both copies: 2 · ½ · (-w) (f+ - f-)
    grad = -spec.weight * diff
    return value, grad, column_reductions(final, spec, keep="preserved")


@dataclass
class TrainingConfig:
    steps: int = 300
    learning_rate: float = 0.15
    early_stop_threshold: float = 1e-4
    seed: int | None = 0
    record_quantities: Sequence[QuantityKind] = ()

    def __post_init__(self) -> None:
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.early_stop_threshold < 0:
            raise ValueError("early_stop_threshold must be nonnegative")


@dataclass
class EpochRecord:
    epoch: int
    cost: float
    grad_norm: float
    estimates: dict[str, float] = field(default_factory=dict)


@dataclass
class TrainingTrace:
    records: list[EpochRecord]
    final_parameters: np.ndarray
    final_cost: float
    termination: str  # "max_steps", "threshold" or "diverged"

    @property
    def epochs(self) -> int:
        return len(self.records)

    @property
    def costs(self) -> np.ndarray:
        return np.array([r.cost for r in self.records])


class TrainingDiverged(RuntimeError):
    def __init__(self, trace: TrainingTrace, epoch: int):
        super().__init__(f"cost became non-finite at epoch {epoch}")
        self.trace = trace
        self.epoch = epoch


def quantity_labels(kinds: Sequence[QuantityKind], m: int) -> list[tuple[str, QuantityKind, tuple[int, ...]]]:
    """Column labels for every (quantity, state or state pair) combination."""
    out = []
    for k in kinds:
        if k.two_state:
            for i in range(m):
                for j in range(i + 1, m):
                    out.append((f"{k.label}_{i}_{j}", k, (i, j)))
        else:
            for i in range(m):
                out.append((f"{k.label}_{i}", k, (i,)))
    return out


def evaluate_quantities(kinds: Sequence[QuantityKind], states: Sequence[np.ndarray]) -> dict[str, float]:
    return {label: k.evaluate(*(states[i] for i in idx))
            for label, k, idx in quantity_labels(kinds, len(states))}


def final_cost_at(theta, ansatz: Ansatz, spec: CostSpec, rng=None) -> float:
    """Cost at ``θ`` computed the same way as the per-epoch values."""
    if isinstance(spec.evaluation, Sampled):
        return two_copy_cost(theta, theta, ansatz, spec, rng=rng)
    x = evolve_columns(ansatz, theta, spec.columns)
    return cost_from_reductions(column_reductions(x, spec), spec)


def train(ansatz: Ansatz, spec: CostSpec, config: TrainingConfig, initial=None) -> TrainingTrace:
    """Gradient descent ``θ ← θ − α ∇C(θ)`` with an optional early stop.

    Epoch ``i`` records the cost at ``θ^i``. Training stops once that cost is
    below ``early_stop_threshold`` or after ``steps`` updates; in the latter case
    ``final_cost`` is evaluated at the last updated parameters.
    """
    if ansatz.qubits != spec.qubits:
        raise ValueError(f"ansatz has {ansatz.qubits} qubits, states have {spec.qubits}")
    rng = np.random.default_rng(config.seed)
    if initial is None:
        theta = initialize_parameters(ansatz, rng)
    else:
        theta = np.array(initial, dtype=float)
        if theta.shape != (ansatz.num_params,):
            raise ValueError(f"initial parameters must have length {ansatz.num_params}")
    sample_rng = rng if isinstance(spec.evaluation, Sampled) else None
    records: list[EpochRecord] = []
    termination = "max_steps"
    final_cost = math.nan
    for epoch in range(config.steps):
        value, grad, preserved = deqnn_gradient(theta, ansatz, spec, rng=sample_rng)
        if not (math.isfinite(value) and np.all(np.isfinite(grad))):
            trace = TrainingTrace(records, theta, math.nan, "diverged")
            raise TrainingDiverged(trace, epoch)
        estimates = {}
        if config.record_quantities:
            estimates = evaluate_quantities(config.record_quantities, preserved)
        records.append(EpochRecord(epoch, value, float(np.max(np.abs(grad))), estimates))
        if config.early_stop_threshold > 0 and value < config.early_stop_threshold:
            termination = "threshold"
            final_cost = value
            break
        theta = theta - config.learning_rate * grad
    else:
        final_cost = final_cost_at(theta, ansatz, spec, rng=sample_rng)
    log.debug("training stopped after %d epochs (%s), cost %.3e", len(records), termination, final_cost)
    return TrainingTrace(records, theta, float(final_cost), termination)

