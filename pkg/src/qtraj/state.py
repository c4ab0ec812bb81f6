"""Dense state vectors and density matrices over n qubits.

Basis index convention: ``|i_{n-1} ... i_0>`` has integer index
``i = sum_l i_l 2**l``, so qubit ``l`` is bit ``l`` of the flat index.
Kernels in this package accept amplitude arrays with arbitrary leading batch
dimensions, ``(..., 2**n)``; the dataclasses below wrap a single state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NORM_TOL = 1e-12
DENSITY_TOL = 1e-10


class InvalidDimensionError(ValueError):
    """Raised when a qubit count or qubit index is out of range."""


@dataclass(frozen=True)
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.n_qubits < 1:
            raise InvalidDimensionError(f"n_qubits must be >= 1, got {self.n_qubits}")
        if amps.shape != (2**self.n_qubits,):
            raise InvalidDimensionError(
                f"expected {2**self.n_qubits} amplitudes, got shape {amps.shape}"
            )
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis(cls, n_qubits: int, index: int) -> StateVector:
        amps = np.zeros(2**n_qubits, dtype=np.complex128)
        amps[index] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def from_bits(cls, bits: str) -> StateVector:
        """Basis state from a ket label written most significant qubit first, e.g. ``"1011"``."""
        return cls.basis(len(bits), int(bits, 2))

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> StateVector:
        nrm = self.norm()
        if nrm == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.n_qubits, self.amplitudes / nrm)

    def density_matrix(self) -> DensityMatrix:
        return DensityMatrix(self.n_qubits, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class DensityMatrix:
    n_qubits: int
    elements: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.elements, dtype=np.complex128)
        dim = 2**self.n_qubits
        if rho.shape != (dim, dim):
            raise InvalidDimensionError(f"expected ({dim}, {dim}) matrix, got {rho.shape}")
        object.__setattr__(self, "elements", rho)

    def trace(self) -> float:
        return float(np.trace(self.elements).real)

    def is_valid(self, tol: float = DENSITY_TOL, check_positive: bool = False) -> bool:
        rho = self.elements
        if np.max(np.abs(rho - rho.conj().T)) > tol:
            return False
        if abs(np.trace(rho) - 1.0) > tol:
            return False
        if check_positive and np.linalg.eigvalsh(rho).min() < -1e-8:
            return False
        return True


def bit(index, qubit: int):
    """Value of qubit ``qubit`` in basis index ``index`` (works on arrays)."""
    return (index >> qubit) & 1


def popcounts(n_qubits: int) -> np.ndarray:
    """Number of up qubits for every basis index ``0 .. 2**n - 1``."""
    idx = np.arange(2**n_qubits)
    return sum(bit(idx, q) for q in range(n_qubits)).astype(np.int64)


def bit_table(n_qubits: int) -> np.ndarray:
    """``(2**n, n)`` 0/1 table whose column ``q`` is bit ``q`` of each basis index."""
    idx = np.arange(2**n_qubits)[:, None]
    return ((idx >> np.arange(n_qubits)[None, :]) & 1).astype(np.float64)


def check_qubit(qubit: int, n_qubits: int) -> None:
    if not 0 <= qubit < n_qubits:
        raise InvalidDimensionError(f"qubit {qubit} out of range for {n_qubits} qubits")


def _equal_modulus_state(n_qubits: int, rng: np.random.Generator) -> np.ndarray:
    dim = 2**n_qubits
    phases = rng.uniform(0.0, 2.0 * np.pi, size=dim)
    return np.exp(1j * phases) / np.sqrt(dim)


def random_state(n: int, rng: np.random.Generator) -> StateVector:
    """Random state whose amplitudes all have modulus ``1/sqrt(2**n)`` and uniform phases."""
    if n < 1:
        raise InvalidDimensionError(f"random_state needs n >= 1, got {n}")
    return StateVector(n, _equal_modulus_state(n, rng))


def random_chain_coefficients(n: int, rng: np.random.Generator) -> StateVector:
    """Random coefficients for the ``n - 2`` spectator qubits of an n-qubit chain."""
    if n < 3:
        raise InvalidDimensionError(f"a chain needs n >= 3 qubits, got {n}")
    return StateVector(n - 2, _equal_modulus_state(n - 2, rng))


def reduced_single_qubit_array(psi: np.ndarray, n_qubits: int, target: int) -> np.ndarray:
    """Batched single-qubit reduced density matrices, shape ``(..., 2, 2)``."""
    check_qubit(target, n_qubits)
    lead = psi.shape[:-1]
    t = psi.reshape(*lead, 2 ** (n_qubits - 1 - target), 2, 2**target)
    return np.einsum("...aib,...ajb->...ij", t, t.conj())


def reduced_single_qubit(state: StateVector, target: int) -> DensityMatrix:
    """Partial trace of ``|state><state|`` over every qubit except ``target``."""
    rho = reduced_single_qubit_array(state.amplitudes, state.n_qubits, target)
    return DensityMatrix(1, rho)


def fidelity_pure(state: StateVector, reference: StateVector) -> float:
    if state.n_qubits != reference.n_qubits:
        raise InvalidDimensionError(
            f"dimension mismatch: {state.n_qubits} vs {reference.n_qubits} qubits"
        )
    return float(abs(np.vdot(reference.amplitudes, state.amplitudes)) ** 2)


def fidelity_array(psi: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """``|<reference|psi>|**2`` over the leading batch dimensions of ``psi``."""
    return np.abs(psi @ reference.conj()) ** 2
