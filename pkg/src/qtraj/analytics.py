"""Closed-form predictions for cascades, fidelity decay and gate budgets.

All rates are dimensionless: ``rate_time`` is ``Gamma t / hbar`` and
``gamma`` is ``Gamma tau / hbar`` per gate interval.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb, factorial

import numpy as np


@dataclass(frozen=True)
class CascadeDistribution:
    probabilities: np.ndarray

    @property
    def m(self) -> int:
        return len(self.probabilities) - 1


@dataclass(frozen=True)
class FidelityPrediction:
    value: float
    asymptote: float


def _check_nonneg(**kwargs):
    for name, val in kwargs.items():
        if val < 0:
            raise ValueError(f"{name} must be nonnegative, got {val}")


def cascade_shared(m: int, rate_time: float) -> CascadeDistribution:
    """Class populations for the shared-rate damping model (Poisson, truncated at ``m``)."""
    _check_nonneg(m=m, rate_time=rate_time)
    w = np.array([rate_time**k / factorial(k) * np.exp(-rate_time) for k in range(m)])
    return CascadeDistribution(np.append(w, 1.0 - w.sum()))


def cascade_independent(n: int, m: int, rate_time: float) -> CascadeDistribution:
    """Class populations when each of ``m`` up qubits decays independently.

    Class ``k`` has ``n_k = m - k`` qubits up. The alternating sum is the
    solution of the linear class equations; for ``m = n`` the prefactor is
    ``n! / n_k!``.
    """
    _check_nonneg(n=n, m=m, rate_time=rate_time)
    if m > n:
        raise ValueError(f"initial up count m={m} exceeds n={n}")
    w = []
    for k in range(m):
        s = sum((-1) ** (k - i) / (factorial(i) * factorial(k - i)) * np.exp(-(m - i) * rate_time)
                for i in range(k + 1))
        w.append(factorial(m) / factorial(m - k) * s)
    w = np.array(w)
    return CascadeDistribution(np.append(w, 1.0 - w.sum()))


def phaseflip_fidelity(n: int, rate_time: float, n_up: int | None = None) -> FidelityPrediction:
    """Fidelity of an equal-modulus random state under n-qubit phase flip noise.

    ``n_up`` replaces ``n`` for superpositions restricted to states with at most
    that many up qubits.
    """
    _check_nonneg(rate_time=rate_time)
    n = n if n_up is None else n_up
    if n < 1:
        raise ValueError("need n >= 1")
    tail = sum(comb(n, i) * np.exp(-2 * i * rate_time) for i in range(1, n + 1))
    return FidelityPrediction(float((1.0 + tail) / 2**n), 1.0 / 2**n)


def teleport_fidelity_independent(gamma_gate: float, k: int) -> FidelityPrediction:
    _check_nonneg(gamma_gate=gamma_gate, k=k)
    return FidelityPrediction(0.5 + 0.5 * float(np.exp(-gamma_gate * k)), 0.5)


def baker_gate_budget(n: int, k: int) -> int:
    """Approximate gate count ``2 n**2 k`` for k forward plus k backward steps."""
    return 2 * n * n * k


def baker_gate_count_exact(n: int, k: int) -> int:
    """Hadamard plus controlled-phase gates actually used (swaps excluded)."""
    return 2 * k * ((n - 1) ** 2 + 2 * n - 1)


def baker_fidelity(n: int, gamma_gate: float, k: float) -> FidelityPrediction:
    if n < 2:
        raise ValueError("baker map needs n >= 2")
    _check_nonneg(gamma_gate=gamma_gate, k=k)
    return FidelityPrediction(float(np.exp(-n * gamma_gate * 2 * n * n * k)), 0.0)


def baker_kf(n: int, gamma_gate: float, target: float = 0.9) -> float:
    """Map steps after which the predicted fidelity reaches ``target``."""
    if not 0.0 < target < 1.0:
        raise ValueError("target fidelity must lie in (0, 1)")
    return -np.log(target) / (2.0 * gamma_gate * n**3)


def baker_gates_at_kf(n: int, gamma_gate: float, target: float = 0.9) -> float:
    return -np.log(target) / (gamma_gate * n)


def baker_kf_prefactor(gamma_gate: float, target: float = 0.9) -> float:
    """``C`` in ``k_f = C / n**3``."""
    return -np.log(target) / (2.0 * gamma_gate)


def mean_phaseflip_rate(n: int) -> float:
    """Binomially averaged decay rate of the phase flip fidelity, in units of Gamma."""
    if n < 1:
        raise ValueError("need n >= 1")
    return float(sum(comb(n, i) * 2 * i for i in range(n + 1)) / 2**n)
