"""Gate kernels, QFT circuits and the quantized baker's map.

Kernels take amplitude arrays of shape ``(..., 2**n)`` and return new arrays,
so a whole batch of trajectories is advanced by one call.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .state import InvalidDimensionError, StateVector, check_qubit

SQRT_HALF = 1.0 / np.sqrt(2.0)

HADAMARD = "hadamard"
CPHASE = "controlled_phase"
SWAP = "swap"

# Kinds that enter the elementary-gate tally; swaps only reorder qubits.
COUNTED_KINDS = (HADAMARD, CPHASE)


@dataclass(frozen=True)
class GateOp:
    kind: str
    qubits: tuple[int, ...]
    angle: float = 0.0

    def __post_init__(self):
        arity = {HADAMARD: 1, CPHASE: 2, SWAP: 2}
        if self.kind not in arity:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(self.qubits) != arity[self.kind]:
            raise ValueError(f"{self.kind} takes {arity[self.kind]} qubit operand(s)")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"{self.kind} operands must be distinct, got {self.qubits}")
        if not np.isfinite(self.angle):
            raise ValueError("gate angle must be finite")

    def inverse(self) -> GateOp:
        if self.kind == CPHASE:
            return GateOp(CPHASE, self.qubits, -self.angle)
        return self


def hadamard(q: int) -> GateOp:
    return GateOp(HADAMARD, (q,))


def controlled_phase(control: int, target: int, angle: float) -> GateOp:
    return GateOp(CPHASE, (control, target), angle)


def swap(q1: int, q2: int) -> GateOp:
    return GateOp(SWAP, (q1, q2))


GateSequence = list  # list[GateOp]


@lru_cache(maxsize=1024)
def _phase_vector(n_qubits: int, q1: int, q2: int, angle: float) -> np.ndarray:
    idx = np.arange(2**n_qubits)
    both = ((idx >> q1) & (idx >> q2) & 1).astype(bool)
    return np.where(both, np.exp(1j * angle), 1.0 + 0j)


@lru_cache(maxsize=256)
def _swap_perm(n_qubits: int, q1: int, q2: int) -> np.ndarray:
    idx = np.arange(2**n_qubits)
    differ = ((idx >> q1) ^ (idx >> q2)) & 1
    return idx ^ (differ * ((1 << q1) | (1 << q2)))


def apply_gate_array(psi: np.ndarray, gate: GateOp, n_qubits: int) -> np.ndarray:
    for q in gate.qubits:
        check_qubit(q, n_qubits)
    if gate.kind == HADAMARD:
        (q,) = gate.qubits
        lead = psi.shape[:-1]
        t = psi.reshape(*lead, 2 ** (n_qubits - 1 - q), 2, 2**q)
        a = t[..., 0, :]
        b = t[..., 1, :]
        out = np.empty_like(t)
        out[..., 0, :] = (a + b) * SQRT_HALF
        out[..., 1, :] = (a - b) * SQRT_HALF
        return out.reshape(psi.shape)
    if gate.kind == CPHASE:
        return psi * _phase_vector(n_qubits, *gate.qubits, gate.angle)
    return psi[..., _swap_perm(n_qubits, *gate.qubits)]


def apply_sequence_array(psi: np.ndarray, gates: Iterable[GateOp], n_qubits: int) -> np.ndarray:
    for gate in gates:
        psi = apply_gate_array(psi, gate, n_qubits)
    return psi


def apply_gate(state: StateVector, gate: GateOp) -> StateVector:
    return StateVector(state.n_qubits, apply_gate_array(state.amplitudes, gate, state.n_qubits))


def sequence_unitary(gates: Iterable[GateOp], n_qubits: int) -> np.ndarray:
    """Dense ``2**n x 2**n`` matrix of a gate sequence."""
    # Rows of the identity are basis kets; the kernel maps row j to column j of U.
    cols = apply_sequence_array(np.eye(2**n_qubits, dtype=np.complex128), gates, n_qubits)
    return cols.T


def _check_register(qubits: Sequence[int]) -> list[int]:
    qubits = list(qubits)
    if not qubits:
        raise ValueError("QFT needs at least one qubit")
    if len(set(qubits)) != len(qubits):
        raise ValueError(f"duplicate qubit indices in {qubits}")
    return qubits


def qft_gates(qubits: Sequence[int]) -> GateSequence:
    """Hadamard/controlled-phase ladder plus bit-reversal swaps.

    ``qubits[0]`` is the least significant bit of the subregister. The
    resulting unitary has elements ``exp(2 pi i k j / 2**m) / sqrt(2**m)``.
    """
    qubits = _check_register(qubits)
    m = len(qubits)
    gates: GateSequence = []
    for j in range(m - 1, -1, -1):
        gates.append(hadamard(qubits[j]))
        for i in range(j - 1, -1, -1):
            gates.append(controlled_phase(qubits[i], qubits[j], 2.0 * np.pi / 2 ** (j - i + 1)))
    for i in range(m // 2):
        gates.append(swap(qubits[i], qubits[m - 1 - i]))
    return gates


def inverse_gates(gates: Sequence[GateOp]) -> GateSequence:
    return [g.inverse() for g in reversed(gates)]


def inverse_qft_gates(qubits: Sequence[int]) -> GateSequence:
    return inverse_gates(qft_gates(qubits))


def qft(state: StateVector, qubits: Sequence[int]) -> StateVector:
    psi = apply_sequence_array(state.amplitudes, qft_gates(qubits), state.n_qubits)
    return StateVector(state.n_qubits, psi)


def inverse_qft(state: StateVector, qubits: Sequence[int]) -> StateVector:
    psi = apply_sequence_array(state.amplitudes, inverse_qft_gates(qubits), state.n_qubits)
    return StateVector(state.n_qubits, psi)


def baker_gates(n_qubits: int, direction: str = "forward") -> GateSequence:
    """Gates of one baker map step ``B = F_n^-1 (F_{n-1} (+) F_{n-1})`` or of ``B^dagger``.

    The block-diagonal factor is the (n-1)-qubit QFT on qubits ``0 .. n-2``
    (the top qubit selects the block).
    """
    if n_qubits < 2:
        raise InvalidDimensionError(f"baker map needs n >= 2 qubits, got {n_qubits}")
    low = list(range(n_qubits - 1))
    full = list(range(n_qubits))
    forward = qft_gates(low) + inverse_qft_gates(full)
    if direction == "forward":
        return forward
    if direction == "backward":
        return inverse_gates(forward)
    raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")


def baker_step(state: StateVector, direction: str = "forward",
               log: list | None = None) -> StateVector:
    gates = baker_gates(state.n_qubits, direction)
    if log is not None:
        log.extend(gates)
    return StateVector(state.n_qubits, apply_sequence_array(state.amplitudes, gates, state.n_qubits))


def gate_count(sequence: Iterable[GateOp], include_swaps: bool = False) -> int:
    """Number of elementary gates; bit-reversal swaps are excluded unless asked for."""
    if include_swaps:
        return sum(1 for _ in sequence)
    return sum(1 for g in sequence if g.kind in COUNTED_KINDS)


def dft_matrix(m: int) -> np.ndarray:
    """Dense ``2**m`` DFT with elements ``exp(2 pi i k j / 2**m) / sqrt(2**m)``."""
    dim = 2**m
    k = np.arange(dim)
    return np.exp(2j * np.pi * np.outer(k, k) / dim) / np.sqrt(dim)


def baker_matrix(n_qubits: int) -> np.ndarray:
    """Dense baker map unitary assembled directly from DFT blocks."""
    half = dft_matrix(n_qubits - 1)
    zero = np.zeros_like(half)
    block = np.block([[half, zero], [zero, half]])
    return dft_matrix(n_qubits).conj().T @ block
