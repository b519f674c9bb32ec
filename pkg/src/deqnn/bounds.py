"""Continuity bounds, disentanglement-error bounds and their certification records.

``continuity_bound`` bounds ``|f(ρ1) - f(ρ2)|`` (or the two-state analogue) by
the trace distances between the inputs. ``disentanglement_bound`` gives the
closed-form ``C r^a ε^b`` bounds on the change of a quantity when a state is
compressed by an ε-approximate disentangler.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
import math

from .quantities import QuantityKind

SLACK = 1e-9


def binary_entropy(t: float) -> float:
    if t <= 0.0 or t >= 1.0:
        return 0.0
    return -t * math.log2(t) - (1.0 - t) * math.log2(1.0 - t)


def _check_t(t: float, name: str) -> float:
    t = float(t)
    if not -SLACK <= t <= 1.0 + SLACK:
        raise ValueError(f"{name} must lie in [0, 1], got {t}")
    return min(max(t, 0.0), 1.0)


def _von_neumann_rhs(t: float, r: int) -> float:
    log_term = t * math.log2(r - 1) if r > 1 else 0.0
    return log_term + binary_entropy(t)


def _power_rhs(t: float, r: int, a: float) -> float:
    # ((1-T)^a - 1 + (r-1)^(1-a) T^a) / (1-a), for a in (0, 1)
    tail = (r - 1) ** (1.0 - a) * t**a if r > 1 else 0.0
    return ((1.0 - t) ** a - 1.0 + tail) / (1.0 - a)


def _envelope(fn, t: float, r: int) -> float:
    """Largest value of ``fn`` on ``[0, t]``.

    The entropy bounds peak at ``T = 1 - 1/r`` and decrease afterwards, while the
    true deviation does not; beyond the peak the peak value is used. For ``r = 1``
    both states are pure and the envelope is 0.
    """
    return fn(min(t, 1.0 - 1.0 / r), r)


def continuity_bound(kind: QuantityKind, T_rho: float, T_sigma: float | None = None, r: int = 1) -> float:
    """Upper bound on the change of ``kind`` given input trace distances.

    ``r`` must be at least the rank of every state involved. ``T_sigma`` is
    needed for two-state quantities only.
    """
    if r < 1:
        raise ValueError("r must be a positive integer")
    t = _check_t(T_rho, "T_rho")
    if kind.two_state:
        if T_sigma is None:
            raise ValueError(f"{kind.name} needs T_sigma")
        s = _check_t(T_sigma, "T_sigma")
    name, p = kind.name, kind.param
    if name == "von_neumann":
        return _envelope(_von_neumann_rhs, t, r)
    if name == "tsallis":
        if p < 1:
            return _envelope(lambda x, rr: _power_rhs(x, rr, p), t, r)
        return 2.0 * p / (p - 1.0) * t
    if name == "renyi":
        if p < 1:
            # Tsallis bound converted by the mean value theorem on log2 (Tr ρ^a >= 1)
            return _envelope(lambda x, rr: _power_rhs(x, rr, p), t, r) / math.log(2)
        return 2.0 * p / (p - 1.0) * r ** (p - 1.0) * t / math.log(2)
    if name == "trace_distance":
        return t + s
    if name in ("fidelity", "bures_angle"):
        # arccos F is a metric and F >= (1 - T)^2
        return math.acos((1.0 - t) ** 2) + math.acos((1.0 - s) ** 2)
    if name == "bures_distance":
        # D_B^2 = 2 - 2 sqrt(F) <= 2T
        return math.sqrt(2.0 * t) + math.sqrt(2.0 * s)
    if name == "hilbert_schmidt":
        # |a^2 - b^2| <= (|a| + |b|) |a - b| with Frobenius norms <= sqrt 2 and <= 2T
        return 2.0 * math.sqrt(2.0) * 2.0 * (t + s)
    raise ValueError(f"no continuity bound for {kind}")


def lemma1_bound(r: int, epsilon: float) -> float:
    """Trace distance between ``UρU†`` and ``|0⟩⟨0|_A ⊗ ρ_B`` is at most ``2 sqrt(r ε)``."""
    if epsilon < -SLACK:
        raise ValueError("epsilon must be nonnegative")
    return 2.0 * math.sqrt(r * max(epsilon, 0.0))


def disentanglement_bound(kind: QuantityKind, r: int, epsilon: float) -> float:
    """Closed-form ``C r^a ε^b`` bound for an ε-approximate disentangler."""
    if r < 1:
        raise ValueError("r must be a positive integer")
    if not -SLACK <= epsilon <= 1.0 + SLACK:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    eps = min(max(float(epsilon), 0.0), 1.0)
    name, p = kind.name, kind.param
    if name == "von_neumann":
        return 2.0 * r**0.75 * eps**0.25
    if name in ("renyi", "tsallis"):
        if p < 1:
            return 2.0**p / (1.0 - p) * r ** (1.0 - p / 2.0) * eps ** (p / 2.0)
        r_exp = p - 0.5 if name == "renyi" else 0.5
        return 4.0 * p / (p - 1.0) * r**r_exp * eps**0.5
    if name == "trace_distance":
        return 4.0 * r**0.5 * eps**0.5
    if name == "fidelity":
        return 2.0 * math.pi * r**0.25 * eps**0.25
    # quantities without a closed form: continuity bound at the product-state distance bound
    t = min(lemma1_bound(r, eps), 1.0)
    return continuity_bound(kind, t, t, r)


def recomputed_bound(kind: QuantityKind, r: int, epsilon: float) -> float:
    """Continuity bound evaluated at ``T = 2 sqrt(r ε)`` (clipped to 1)."""
    t = min(lemma1_bound(r, epsilon), 1.0)
    return continuity_bound(kind, t, t if kind.two_state else None, r)


@dataclass(frozen=True)
class BoundReport:
    quantity: str
    bound_value: float
    measured_deviation: float
    r: int
    epsilon: float
    T_rho: float | None = None
    T_sigma: float | None = None
    label: str = ""

    @property
    def satisfied(self) -> bool:
        return self.measured_deviation <= self.bound_value + SLACK

    def to_dict(self) -> dict:
        d = asdict(self)
        d["satisfied"] = self.satisfied
        return d
