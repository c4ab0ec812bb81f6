"""Exact density-matrix evolution through Kraus maps, for small registers.

This is the reference the trajectory averages are checked against. Dense
operators are limited to ``n <= 10`` qubits.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .circuits import GateOp, apply_gate_array
from .engine import NOISE, Checkpoint
from .noise import MAX_KRAUS_QUBITS, NoiseChannel, kraus_matrices
from .state import DensityMatrix, InvalidDimensionError

COMPLETENESS_TOL = 1e-12
UNITARY_TOL = 1e-10

SQRT_HALF = 1.0 / np.sqrt(2.0)

# Bell kets on two qubits, indexed by 2 * (higher qubit) + (lower qubit).
BELL_STATES = {
    "phi+": np.array([1, 0, 0, 1], dtype=np.complex128) * SQRT_HALF,
    "phi-": np.array([1, 0, 0, -1], dtype=np.complex128) * SQRT_HALF,
    "psi+": np.array([0, 1, 1, 0], dtype=np.complex128) * SQRT_HALF,
    "psi-": np.array([0, 1, -1, 0], dtype=np.complex128) * SQRT_HALF,
}
BELL_OUTCOMES = tuple(BELL_STATES)


class CompletenessError(ValueError):
    pass


class ZeroProbabilityError(ValueError):
    pass


@dataclass(frozen=True)
class SuperoperatorStep:
    kraus_set: list = field(default_factory=list)
    label: str = ""

    def __post_init__(self):
        ops = [sp.csr_matrix(op, dtype=np.complex128) for op in self.kraus_set]
        if not ops:
            raise CompletenessError("empty Kraus set")
        dim = ops[0].shape[0]
        total = sum((op.conj().T @ op) for op in ops)
        err = abs(total - sp.identity(dim, dtype=np.complex128, format="csr")).max()
        if err > COMPLETENESS_TOL:
            raise CompletenessError(f"sum M^dagger M deviates from identity by {err:.3e}")
        object.__setattr__(self, "kraus_set", ops)

    @classmethod
    def from_channel(cls, channel: NoiseChannel) -> SuperoperatorStep:
        return cls(kraus_matrices(channel), label=f"{channel.model}(gamma={channel.gamma:g})")

    @property
    def dim(self) -> int:
        return self.kraus_set[0].shape[0]


def kraus_apply_array(rho: np.ndarray, ops: Sequence) -> np.ndarray:
    out = np.zeros_like(rho)
    for op in ops:
        left = op @ rho
        out += (op @ left.conj().T).conj().T
    return out


def apply_superoperator(rho: DensityMatrix, step: SuperoperatorStep) -> DensityMatrix:
    if rho.n_qubits > MAX_KRAUS_QUBITS:
        raise InvalidDimensionError(f"oracle limited to n <= {MAX_KRAUS_QUBITS}")
    if step.dim != rho.elements.shape[0]:
        raise InvalidDimensionError(
            f"Kraus operators act on dimension {step.dim}, density matrix has {rho.elements.shape[0]}"
        )
    return DensityMatrix(rho.n_qubits, kraus_apply_array(rho.elements, step.kraus_set))


def apply_unitary(rho: DensityMatrix, unitary: np.ndarray) -> DensityMatrix:
    u = np.asarray(unitary, dtype=np.complex128)
    if u.shape != rho.elements.shape:
        raise InvalidDimensionError(f"unitary shape {u.shape} vs density matrix {rho.elements.shape}")
    if np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) > UNITARY_TOL:
        raise ValueError("matrix is not unitary")
    return DensityMatrix(rho.n_qubits, u @ rho.elements @ u.conj().T)


def apply_gate_density(rho: np.ndarray, gate: GateOp, n_qubits: int) -> np.ndarray:
    """``U rho U^dagger`` for one gate without forming ``U``."""
    # The kernel maps each row r to U r, i.e. Y -> Y U^T.
    u_rho = apply_gate_array(rho.T, gate, n_qubits).T
    return apply_gate_array(u_rho.conj(), gate, n_qubits).conj()


def evolve_density(rho: DensityMatrix, schedule: Sequence, channel: NoiseChannel) -> DensityMatrix:
    """Exact counterpart of :func:`qtraj.engine.evolve_batch` for one schedule."""
    n = rho.n_qubits
    if n > MAX_KRAUS_QUBITS:
        raise InvalidDimensionError(f"oracle limited to n <= {MAX_KRAUS_QUBITS}")
    step = SuperoperatorStep.from_channel(channel) if channel.gamma > 0.0 else None
    arr = rho.elements
    for item in schedule:
        if item is NOISE:
            if step is not None:
                for _ in range(channel.sub_steps):
                    arr = kraus_apply_array(arr, step.kraus_set)
        elif isinstance(item, GateOp):
            arr = apply_gate_density(arr, item, n)
        elif isinstance(item, Checkpoint):
            continue
        else:
            raise TypeError(f"unsupported schedule item {item!r}")
    return DensityMatrix(n, arr)


def bell_project(rho_joint: DensityMatrix, outcome: str) -> tuple[DensityMatrix, float]:
    """Project qubits 0 and 1 onto a Bell state.

    Returns the normalized state of the remaining qubits (old qubit ``q``
    becomes qubit ``q - 2``) and the outcome probability.
    """
    if outcome not in BELL_STATES:
        raise ValueError(f"unknown Bell outcome {outcome!r}; choose from {BELL_OUTCOMES}")
    n = rho_joint.n_qubits
    if n < 3:
        raise InvalidDimensionError("Bell projection needs at least 3 qubits")
    bell = BELL_STATES[outcome]
    rest = 2 ** (n - 2)
    r = rho_joint.elements.reshape(rest, 4, rest, 4)
    reduced = np.einsum("a,iajb,b->ij", bell.conj(), r, bell)
    prob = float(np.trace(reduced).real)
    if prob <= 1e-15:
        raise ZeroProbabilityError(f"outcome {outcome} has zero probability")
    return DensityMatrix(n - 2, reduced / prob), prob


def partial_trace_keep(rho: np.ndarray, n_qubits: int, keep: Sequence[int]) -> np.ndarray:
    """Reduced density matrix on ``keep`` (listed least significant first)."""
    keep = list(keep)
    t = rho.reshape([2] * (2 * n_qubits))
    # Axis a of the ket half addresses qubit n-1-a.
    ket_axes = [n_qubits - 1 - q for q in keep]
    traced = [a for a in range(n_qubits) if a not in ket_axes]
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    ket = list(letters[:n_qubits])
    bra = list(letters[n_qubits:2 * n_qubits])
    for a in traced:
        bra[a] = ket[a]
    out_ket = [ket[a] for a in reversed(ket_axes)]
    out_bra = [bra[a] for a in reversed(ket_axes)]
    subscripts = "".join(ket) + "".join(bra) + "->" + "".join(out_ket) + "".join(out_bra)
    d = 2 ** len(keep)
    return np.einsum(subscripts, t).reshape(d, d)
