"""Many-qubit amplitude damping and phase flip channels as jump-operator families.

Three models are supported:

``amp_shared``
    One damping rate for the whole register. From basis state ``j`` with
    ``m(j)`` up qubits, each of the ``m(j)`` single-qubit decays happens with
    probability ``gamma / m(j)``.
``amp_independent``
    Every qubit decays on its own with probability ``gamma``; the jump
    operators are ``1 x ... x M_1 x ... x 1``.
``phase_flip``
    Every qubit suffers a ``Z`` with probability ``gamma``.

Jump labels ``mu`` run from 1 to n and address qubit ``mu - 1``. All no-jump
operators are diagonal and built exactly, so the Kraus sets are complete.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .state import StateVector, bit_table, popcounts

AMP_SHARED = "amp_shared"
AMP_INDEPENDENT = "amp_independent"
PHASE_FLIP = "phase_flip"
MODELS = (AMP_SHARED, AMP_INDEPENDENT, PHASE_FLIP)

MODEL_ALIASES = {
    "shared": AMP_SHARED,
    "amp_shared": AMP_SHARED,
    "independent": AMP_INDEPENDENT,
    "amp_independent": AMP_INDEPENDENT,
    "phase_flip": PHASE_FLIP,
    "phaseflip": PHASE_FLIP,
}

MAX_KRAUS_QUBITS = 10


class RateTooLargeError(ValueError):
    """The per-sub-step rate leaves no room for the no-jump branch."""


class ZeroJumpError(ValueError):
    """A jump was requested on a branch of zero probability."""


@dataclass(frozen=True)
class NoiseParams:
    """Rate per noise interval (between two gates) and how finely it is split.

    ``gamma_gate`` is the dimensionless rate accumulated over one interval;
    each of the ``sub_steps`` noise applications uses ``gamma_gate / sub_steps``.
    """

    gamma_gate: float
    sub_steps: int = 1

    def __post_init__(self):
        if self.sub_steps < 1:
            raise ValueError(f"sub_steps must be >= 1, got {self.sub_steps}")
        if not self.gamma_gate >= 0.0:
            raise ValueError(f"gamma must be nonnegative, got {self.gamma_gate}")

    @property
    def gamma(self) -> float:
        return self.gamma_gate / self.sub_steps


@dataclass(frozen=True)
class JumpOutcome:
    jumped: bool
    mu: int | None = None


@dataclass(frozen=True)
class NoiseChannel:
    model: str
    n_qubits: int
    params: NoiseParams = field(default_factory=lambda: NoiseParams(0.0))

    def __post_init__(self):
        model = MODEL_ALIASES.get(self.model)
        if model is None:
            raise ValueError(f"unknown noise model {self.model!r}; choose from {MODELS}")
        object.__setattr__(self, "model", model)
        if self.n_qubits < 1:
            raise ValueError(f"n_qubits must be >= 1, got {self.n_qubits}")
        g = self.gamma
        if g > 1.0:
            raise RateTooLargeError(f"per-sub-step gamma {g:g} exceeds 1")
        if model != AMP_SHARED and self.n_qubits * g > 1.0 + 1e-15:
            raise RateTooLargeError(
                f"n * gamma = {self.n_qubits * g:g} > 1 for {model}; use more sub-steps"
            )

    @classmethod
    def create(cls, model: str, n_qubits: int, gamma_gate: float, sub_steps: int = 1) -> NoiseChannel:
        return cls(model, n_qubits, NoiseParams(gamma_gate, sub_steps))

    @property
    def gamma(self) -> float:
        return self.params.gamma

    @property
    def sub_steps(self) -> int:
        return self.params.sub_steps

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    # cached tables -------------------------------------------------------

    def bits(self) -> np.ndarray:
        return _bits(self.n_qubits)

    def no_jump_diagonal(self) -> np.ndarray:
        return _no_jump_diagonal(self.model, self.n_qubits, self.gamma)

    def jump_weights(self) -> np.ndarray:
        """Per-basis-index weight multiplying ``|alpha_j|**2`` in ``dp_mu``."""
        return _jump_weights(self.model, self.n_qubits)


@lru_cache(maxsize=64)
def _bits(n: int) -> np.ndarray:
    return bit_table(n)


@lru_cache(maxsize=64)
def _jump_weights(model: str, n: int) -> np.ndarray:
    m = popcounts(n).astype(np.float64)
    if model == AMP_SHARED:
        w = np.zeros_like(m)
        w[1:] = 1.0 / m[1:]
        return w
    return np.ones_like(m)


@lru_cache(maxsize=256)
def _no_jump_diagonal(model: str, n: int, gamma: float) -> np.ndarray:
    m = popcounts(n).astype(np.float64)
    if model == AMP_SHARED:
        d = np.full(2**n, np.sqrt(1.0 - gamma))
        d[0] = 1.0
    elif model == AMP_INDEPENDENT:
        d = np.sqrt(np.clip(1.0 - m * gamma, 0.0, None))
    else:
        d = np.full(2**n, np.sqrt(max(1.0 - n * gamma, 0.0)))
    return d


@lru_cache(maxsize=256)
def _damping_maps(n: int, q: int) -> tuple[np.ndarray, np.ndarray]:
    idx = np.arange(2**n)
    src = idx[(idx >> q) & 1 == 1]
    return src, src - (1 << q)


@lru_cache(maxsize=256)
def _z_signs(n: int, q: int) -> np.ndarray:
    idx = np.arange(2**n)
    return 1.0 - 2.0 * ((idx >> q) & 1)


# batched kernels ---------------------------------------------------------------

def jump_probabilities_array(channel: NoiseChannel, psi: np.ndarray) -> np.ndarray:
    """``dp_mu`` for every trajectory in the batch, shape ``(..., n)``."""
    if channel.model == PHASE_FLIP:
        return np.full(psi.shape[:-1] + (channel.n_qubits,), channel.gamma)
    probs = psi.real**2 + psi.imag**2
    return channel.gamma * ((probs * channel.jump_weights()) @ channel.bits())


def jump_unnormalized(channel: NoiseChannel, psi: np.ndarray, qubit: int) -> np.ndarray:
    """Apply ``L_mu`` (up to its overall ``sqrt(gamma)``) for ``mu = qubit + 1``."""
    if channel.model == PHASE_FLIP:
        return psi * _z_signs(channel.n_qubits, qubit)
    src, dst = _damping_maps(channel.n_qubits, qubit)
    out = np.zeros_like(psi)
    amps = psi[..., src]
    if channel.model == AMP_SHARED:
        amps = amps * np.sqrt(channel.jump_weights()[src])
    out[..., dst] = amps
    return out


def normalize_rows(psi: np.ndarray) -> np.ndarray:
    norms = np.sqrt(np.sum(psi.real**2 + psi.imag**2, axis=-1, keepdims=True))
    return psi / norms


# single-state API ----------------------------------------------------------------

def _require_normalized(state: StateVector) -> None:
    if state.norm() == 0.0:
        raise ValueError("zero-norm state")


def jump_probabilities(channel: NoiseChannel, state: StateVector) -> np.ndarray:
    _require_normalized(state)
    return jump_probabilities_array(channel, state.amplitudes)


def apply_jump(channel: NoiseChannel, state: StateVector, mu: int) -> StateVector:
    if not 1 <= mu <= channel.n_qubits:
        raise ValueError(f"jump label mu={mu} outside 1..{channel.n_qubits}")
    out = jump_unnormalized(channel, state.amplitudes, mu - 1)
    nrm = np.linalg.norm(out)
    if nrm == 0.0:
        raise ZeroJumpError(f"jump mu={mu} has zero probability on this state")
    return StateVector(state.n_qubits, out / nrm)


def apply_no_jump(channel: NoiseChannel, state: StateVector) -> StateVector:
    dp = jump_probabilities(channel, state).sum()
    if 1.0 - dp <= 0.0:
        raise RateTooLargeError(f"no-jump probability 1 - {dp:g} <= 0")
    out = state.amplitudes * channel.no_jump_diagonal()
    return StateVector(state.n_qubits, out / np.linalg.norm(out))


def kraus_matrices(channel: NoiseChannel) -> list[np.ndarray]:
    """Dense ``[M_0, M_1, ..., M_n]`` for small registers."""
    n = channel.n_qubits
    if n > MAX_KRAUS_QUBITS:
        raise ValueError(f"refusing to build dense Kraus operators for n={n} > {MAX_KRAUS_QUBITS}")
    dim = 2**n
    ops = [np.diag(channel.no_jump_diagonal()).astype(np.complex128)]
    g = channel.gamma
    for q in range(n):
        if channel.model == PHASE_FLIP:
            ops.append(np.sqrt(g) * np.diag(_z_signs(n, q)).astype(np.complex128))
            continue
        mat = np.zeros((dim, dim), dtype=np.complex128)
        src, dst = _damping_maps(n, q)
        mat[dst, src] = np.sqrt(g * channel.jump_weights()[src])
        ops.append(mat)
    return ops
