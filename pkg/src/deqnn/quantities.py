"""Exact entropies and distance measures computed from spectra.

All logarithms are base 2; entropies are in bits.
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .linalg import (
    EIG_CUTOFF,
    LOG_CUTOFF,
    ArrayLike,
    as_matrix,
    hermitian_eigendecomposition,
    spectrum,
)

SINGLE_STATE = ("von_neumann", "renyi", "tsallis")
TWO_STATE = ("trace_distance", "fidelity", "bures_angle", "bures_distance", "hilbert_schmidt")


@dataclass(frozen=True)
class QuantityKind:
    """A quantity tag, e.g. ``QuantityKind("renyi", 0.5)``.

    ``param`` carries α for Rényi and q for Tsallis and is ``None`` otherwise.
    """

    name: str
    param: float | None = None

    def __post_init__(self) -> None:
        if self.name not in SINGLE_STATE + TWO_STATE:
            raise ValueError(f"unknown quantity {self.name!r}")
        if self.name in ("renyi", "tsallis"):
            if self.param is None:
                raise ValueError(f"{self.name} needs a parameter")
            _check_order(float(self.param), self.name)
            object.__setattr__(self, "param", float(self.param))
        elif self.param is not None:
            raise ValueError(f"{self.name} takes no parameter")

    @property
    def two_state(self) -> bool:
        return self.name in TWO_STATE

    @property
    def label(self) -> str:
        if self.param is None:
            return self.name
        prefix = "a" if self.name == "renyi" else "q"
        return f"{self.name}_{prefix}{self.param:g}"

    @classmethod
    def parse(cls, text: str, alpha: float = 0.5, q: float = 1.5) -> "QuantityKind":
        """Parse ``von_neumann``, ``renyi``, ``renyi:2``, ``tsallis:1.5``, ``fidelity``...

        Short aliases ``S``, ``T`` and ``F`` are accepted.
        """
        aliases = {"s": "von_neumann", "vn": "von_neumann", "t": "trace_distance",
                   "f": "fidelity", "hs": "hilbert_schmidt"}
        name, _, arg = text.strip().partition(":")
        name = aliases.get(name.lower(), name.lower())
        if name == "renyi":
            return cls(name, float(arg) if arg else alpha)
        if name == "tsallis":
            return cls(name, float(arg) if arg else q)
        if arg:
            raise ValueError(f"{name} takes no parameter")
        return cls(name)

    def __str__(self) -> str:
        return self.name if self.param is None else f"{self.name}:{self.param:g}"

    def evaluate(self, rho: ArrayLike, sigma: ArrayLike | None = None) -> float:
        if self.two_state:
            if sigma is None:
                raise ValueError(f"{self.name} needs two states")
            return _TWO[self.name](rho, sigma)
        if self.name == "von_neumann":
            return von_neumann(rho)
        if self.name == "renyi":
            return renyi(rho, self.param)
        return tsallis(rho, self.param)


def _check_order(value: float, what: str) -> None:
    if not math.isfinite(value) or value <= 0:
        raise ValueError(f"{what} order must be positive, got {value}")
    if value == 1:
        raise ValueError(f"{what} order 1 is the von Neumann limit; use von_neumann")


def _probabilities(rho: ArrayLike) -> np.ndarray:
    w = spectrum(rho)
    return w[w > LOG_CUTOFF]


def von_neumann(rho: ArrayLike) -> float:
    p = _probabilities(rho)
    return float(max(-np.sum(p * np.log2(p)), 0.0))


def _log2_power_sum(p: np.ndarray, a: float) -> float:
    # log2 Σ p^a evaluated as log-sum-exp so large a cannot underflow
    logs = a * np.log(p)
    top = logs.max()
    return float((top + np.log(np.sum(np.exp(logs - top)))) / np.log(2))


def renyi(rho: ArrayLike, alpha: float) -> float:
    _check_order(alpha, "Renyi")
    p = _probabilities(rho)
    return max(_log2_power_sum(p, alpha) / (1.0 - alpha), 0.0)


def tsallis(rho: ArrayLike, q: float) -> float:
    _check_order(q, "Tsallis")
    p = _probabilities(rho)
    return float(max((np.sum(p**q) - 1.0) / (1.0 - q), 0.0))


def _pair(rho: ArrayLike, sigma: ArrayLike) -> tuple[np.ndarray, np.ndarray]:
    """Both inputs, put in a canonical order so symmetric measures are bitwise symmetric."""
    a, b = as_matrix(rho), as_matrix(sigma)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if a.tobytes() > b.tobytes():
        a, b = b, a
    return a, b


def trace_distance(rho: ArrayLike, sigma: ArrayLike) -> float:
    a, b = _pair(rho, sigma)
    return float(0.5 * np.sum(np.abs(spectrum(a - b))))


def _sqrt_columns(m: np.ndarray) -> np.ndarray:
    """``V √Λ`` from the spectral decomposition, eigenvalues clamped at 0."""
    w, v = hermitian_eigendecomposition(m, tol=1e-8)
    if w[-1] < -EIG_CUTOFF:
        raise ValueError(f"matrix has negative eigenvalue {w[-1]!r}")
    return v * np.sqrt(np.clip(w, 0.0, None))


def fidelity(rho: ArrayLike, sigma: ArrayLike) -> float:
    """Uhlmann fidelity ``(Tr √(√ρ σ √ρ))²`` (squared convention).

    Evaluated as the squared nuclear norm of ``√ρ √σ``, i.e. the singular values
    of ``(V_ρ √Λ_ρ)† V_σ √Λ_σ``. Rounding noise in near-zero eigenvalues then
    only enters at second order, unlike the nested square root.
    """
    a, b = _pair(rho, sigma)
    m = _sqrt_columns(a).conj().T @ _sqrt_columns(b)
    f = float(np.sum(np.linalg.svd(m, compute_uv=False)) ** 2)
    return min(max(f, 0.0), 1.0)


def _bures_gap(rho: ArrayLike, sigma: ArrayLike) -> float:
    """``2 − 2√F`` computed without cancellation.

    With unit-norm square-root factors ``X, Y`` and ``W`` the unitary that
    maximizes ``Re Tr(X†YW)``, ``‖X − YW‖²_F = 2 − 2‖X†Y‖_* = 2 − 2√F``. The
    left side is a sum of squares, so nearby states give an accurate small
    gap where ``arccos`` of a rounded ``F`` would lose half the digits.
    """
    a, b = _pair(rho, sigma)
    x, y = _sqrt_columns(a), _sqrt_columns(b)
    x, y = x / np.linalg.norm(x), y / np.linalg.norm(y)
    u, _, vh = np.linalg.svd(x.conj().T @ y)
    w = vh.conj().T @ u.conj().T
    return float(min(np.sum(np.abs(x - y @ w) ** 2), 2.0))


def bures_angle(rho: ArrayLike, sigma: ArrayLike) -> float:
    """``arccos F(ρ, σ)`` with the squared fidelity, not the textbook ``arccos √F``."""
    g = _bures_gap(rho, sigma)
    # 1 − F = g (1 − g/4) and arccos(1 − 2s²) = 2 arcsin s
    return float(2.0 * np.arcsin(min(np.sqrt(0.5 * g * (1.0 - 0.25 * g)), 1.0)))


def bures_distance(rho: ArrayLike, sigma: ArrayLike) -> float:
    return float(np.sqrt(_bures_gap(rho, sigma)))


def hilbert_schmidt(rho: ArrayLike, sigma: ArrayLike) -> float:
    """Squared Hilbert-Schmidt distance ``Tr(ρ²) + Tr(σ²) − 2 Tr(ρσ)``."""
    a, b = _pair(rho, sigma)
    val = np.sum(np.abs(a) ** 2) + np.sum(np.abs(b) ** 2) - 2.0 * np.real(np.sum(a * b.conj()))
    return float(max(val, 0.0))


_TWO = {
    "trace_distance": trace_distance,
    "fidelity": fidelity,
    "bures_angle": bures_angle,
    "bures_distance": bures_distance,
    "hilbert_schmidt": hilbert_schmidt,
}

VON_NEUMANN = QuantityKind("von_neumann")
TRACE_DISTANCE = QuantityKind("trace_distance")
FIDELITY = QuantityKind("fidelity")


def default_quantities(alpha: float = 0.5, q: float = 1.5) -> list[QuantityKind]:
    return [VON_NEUMANN, QuantityKind("renyi", alpha), QuantityKind("tsallis", q),
            TRACE_DISTANCE, FIDELITY]
