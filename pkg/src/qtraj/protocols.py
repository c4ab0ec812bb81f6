"""Noisy teleportation through a swap chain and the forward/backward baker's map."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import analytics
from .circuits import COUNTED_KINDS, baker_gates, swap
from .engine import (
    NOISE,
    EnsembleEstimate,
    TrajectoryConfig,
    ensemble_observable,
    run_ensemble,
)
from .noise import PHASE_FLIP, NoiseChannel
from .oracle import BELL_OUTCOMES, BELL_STATES, bell_project, evolve_density, partial_trace_keep
from .state import (
    DensityMatrix,
    InvalidDimensionError,
    StateVector,
    fidelity_array,
    random_chain_coefficients,
    random_state,
)

SQRT_HALF = 1.0 / np.sqrt(2.0)
PHI_PLUS = np.array([1, 0, 0, 1], dtype=np.complex128) * SQRT_HALF

_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
# Correction applied to Bob's qubit after each Bell outcome.
CORRECTIONS = {
    "phi+": np.eye(2, dtype=np.complex128),
    "phi-": _Z,
    "psi+": _X,
    "psi-": _Z @ _X,
}

AVERAGED = "averaged"
SAMPLED = "sampled"


def setup_rng(master_seed: int) -> np.random.Generator:
    """Stream for protocol set-up draws (random initial states), disjoint from trajectory streams."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(0xFFFFFFFF, 0))
    return np.random.Generator(np.random.PCG64(ss))


# teleportation ------------------------------------------------------------------------

@dataclass(frozen=True)
class TeleportSetup:
    n_chain: int
    channel: NoiseChannel
    a: complex = SQRT_HALF
    b: complex = SQRT_HALF
    measurement_mode: str = AVERAGED
    noise_before_swap: bool = True
    trailing_noise: bool = False

    def __post_init__(self):
        if self.n_chain < 3:
            raise InvalidDimensionError(f"teleport chain needs n >= 3, got {self.n_chain}")
        if self.channel.n_qubits != self.n_chain:
            raise ValueError("channel qubit count must equal the chain length")
        if abs(abs(self.a) ** 2 + abs(self.b) ** 2 - 1.0) > 1e-12:
            raise ValueError("|a|^2 + |b|^2 must equal 1")
        if self.measurement_mode not in (AVERAGED, SAMPLED):
            raise ValueError(f"measurement_mode must be {AVERAGED!r} or {SAMPLED!r}")

    @property
    def psi(self) -> np.ndarray:
        return np.array([self.a, self.b], dtype=np.complex128)


def build_chain_initial(setup: TeleportSetup, rng: np.random.Generator) -> StateVector:
    """Random spectators on qubits ``2 .. n-1`` times ``|phi+>`` on qubits 0 and 1."""
    coeffs = random_chain_coefficients(setup.n_chain, rng)
    return StateVector(setup.n_chain, np.kron(coeffs.amplitudes, PHI_PLUS))


def swap_chain_schedule(setup: TeleportSetup) -> list:
    """Swaps (1,2), (2,3), ..., (n-2, n-1), each with one noise interval."""
    schedule = []
    for q in range(1, setup.n_chain - 1):
        if setup.noise_before_swap:
            schedule += [NOISE, swap(q, q + 1)]
        else:
            schedule += [swap(q, q + 1), NOISE]
    if setup.trailing_noise:
        schedule.append(NOISE)
    return schedule


def run_swap_chain(state: StateVector, setup: TeleportSetup, config: TrajectoryConfig,
                   trajectory_index: int = 0) -> StateVector:
    from .engine import run_trajectory

    return run_trajectory(state, swap_chain_schedule(setup), config, trajectory_index)


def teleport_branches(psi: np.ndarray, ab: np.ndarray) -> np.ndarray:
    """Corrected, unnormalized Bob-side branches for each Bell outcome.

    ``psi`` is a batch of final chain states ``(B, 2**n)``; the teleported
    qubit is joined as the new least significant qubit. Returns an array
    ``(4, B, 2, R)`` indexed by outcome, trajectory, Bob's bit and the
    configuration of the spectator qubits.
    """
    batch, dim = psi.shape
    t = psi.reshape(batch, 2, dim // 4, 2)  # (Bob, spectators, chain qubit 0)
    out = []
    for name in BELL_OUTCOMES:
        beta = BELL_STATES[name].reshape(2, 2)  # [chain qubit 0, teleported qubit]
        w = beta.conj() @ ab
        v = np.tensordot(t, w, axes=([3], [0]))
        out.append(np.einsum("ij,bjr->bir", CORRECTIONS[name], v))
    return np.stack(out)


def teleport_observable(ab: np.ndarray, mode: str = AVERAGED):
    """Per-trajectory teleportation fidelity, as an engine observable."""
    return _TeleportObservable(ab, mode)


@dataclass(frozen=True)
class _TeleportObservable:
    ab: np.ndarray
    mode: str

    def __call__(self, psi: np.ndarray, uniforms: np.ndarray | None = None) -> np.ndarray:
        branches = teleport_branches(psi, self.ab)
        probs = np.sum(np.abs(branches) ** 2, axis=(2, 3))  # (4, B)
        overlaps = np.einsum("i,obir->obr", self.ab.conj(), branches)
        fid_unnorm = np.sum(np.abs(overlaps) ** 2, axis=-1)  # (4, B)
        if self.mode == AVERAGED:
            return fid_unnorm.sum(axis=0)
        cum = np.cumsum(probs, axis=0)
        u = uniforms[:, 0] * cum[-1]
        pick = np.argmax(u[None, :] < cum, axis=0)
        cols = np.arange(psi.shape[0])
        return fid_unnorm[pick, cols] / probs[pick, cols]


def bell_outcome_probabilities(psi: np.ndarray, ab: np.ndarray) -> np.ndarray:
    """``(B, 4)`` Born probabilities of the four Bell outcomes."""
    branches = teleport_branches(psi, ab)
    return np.sum(np.abs(branches) ** 2, axis=(2, 3)).T


def teleport_fidelity(setup: TeleportSetup, config: TrajectoryConfig,
                      initial: StateVector | None = None) -> EnsembleEstimate:
    if initial is None:
        initial = build_chain_initial(setup, setup_rng(config.master_seed))
    obs = teleport_observable(setup.psi, setup.measurement_mode)
    extra = 1 if setup.measurement_mode == SAMPLED else 0
    return ensemble_observable(initial, swap_chain_schedule(setup), config, obs, extra)


def teleport_fidelity_exact(setup: TeleportSetup, initial: StateVector) -> tuple[float, dict]:
    """Density-matrix teleportation fidelity and the Bell outcome probabilities."""
    rho = evolve_density(initial.density_matrix(), swap_chain_schedule(setup), setup.channel)
    rho_psi = np.outer(setup.psi, setup.psi.conj())
    joint = DensityMatrix(setup.n_chain + 1, np.kron(rho.elements, rho_psi))
    n_rest = setup.n_chain - 1
    fidelity = 0.0
    probs = {}
    for name in BELL_OUTCOMES:
        post, p = bell_project(joint, name)
        probs[name] = p
        u = np.kron(CORRECTIONS[name], np.eye(2 ** (n_rest - 1)))
        corrected = u @ post.elements @ u.conj().T
        rho_bob = partial_trace_keep(corrected, n_rest, [n_rest - 1])
        fidelity += p * float(np.real(setup.psi.conj() @ rho_bob @ setup.psi))
    return fidelity, probs


# baker's map --------------------------------------------------------------------------

@dataclass(frozen=True)
class BakerSetup:
    n_qubits: int
    k: int
    channel: NoiseChannel
    initial: StateVector | None = None

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("baker experiment needs k >= 1 map steps")
        if self.n_qubits < 2:
            raise InvalidDimensionError("baker map needs n >= 2")
        if self.channel.model != PHASE_FLIP:
            raise ValueError("baker experiments use the phase flip channel")
        if self.channel.n_qubits != self.n_qubits:
            raise ValueError("channel qubit count must equal n_qubits")


def baker_schedule(n_qubits: int, k: int) -> list:
    """k forward then k backward steps with a noise interval after every counted gate."""
    schedule = []
    for direction in ("forward", "backward"):
        gates = baker_gates(n_qubits, direction)
        for _ in range(k):
            for g in gates:
                schedule.append(g)
                if g.kind in COUNTED_KINDS:
                    schedule.append(NOISE)
    return schedule


def _baker_initial(setup: BakerSetup, config: TrajectoryConfig) -> StateVector:
    if setup.initial is not None:
        return setup.initial
    return random_state(setup.n_qubits, setup_rng(config.master_seed))


@dataclass(frozen=True)
class _FidelityObservable:
    reference: np.ndarray

    def __call__(self, psi: np.ndarray) -> np.ndarray:
        return fidelity_array(psi, self.reference)


def fidelity_observable(reference: StateVector):
    return _FidelityObservable(reference.amplitudes)


def baker_fidelity_experiment(setup: BakerSetup, config: TrajectoryConfig) -> EnsembleEstimate:
    psi0 = _baker_initial(setup, config)
    return ensemble_observable(psi0, baker_schedule(setup.n_qubits, setup.k), config,
                               fidelity_observable(psi0))


def baker_fidelity_exact(setup: BakerSetup, initial: StateVector) -> float:
    rho = evolve_density(initial.density_matrix(), baker_schedule(setup.n_qubits, setup.k),
                         setup.channel)
    a = initial.amplitudes
    return float(np.real(a.conj() @ rho.elements @ a))


@dataclass(frozen=True)
class KfResult:
    n: int
    k_f: int | None
    k_f_fraction: float
    below_one_step: bool
    fidelities: dict


def _interp_crossing(k_lo: int, f_lo: float, k_hi: int, f_hi: float, target: float) -> float:
    lo, hi = np.log(f_lo), np.log(max(f_hi, 1e-300))
    return k_lo + (np.log(target) - lo) / (hi - lo)


def baker_kf_scan(n_list: Sequence[int], gamma: float, target: float, config: TrajectoryConfig,
                  max_k: int = 10_000) -> list[KfResult]:
    """Smallest map step count with ensemble fidelity at or below ``target``, per qubit count.

    The search starts at the analytic estimate and walks to the bracketing
    pair of integers; the fractional estimate interpolates ``ln F`` linearly.
    ``config.channel`` supplies the sub-step count; its qubit count is ignored.
    """
    if not 0.0 < target < 1.0:
        raise ValueError("target fidelity must lie in (0, 1)")
    results = []
    for n in n_list:
        channel = NoiseChannel.create(PHASE_FLIP, n, gamma, config.channel.sub_steps)
        cfg = TrajectoryConfig(channel, config.n_trajectories, config.master_seed,
                               config.chunk_size, config.workers)
        fid: dict[int, float] = {0: 1.0}

        def f(k: int) -> float:
            if k not in fid:
                fid[k] = baker_fidelity_experiment(BakerSetup(n, k, channel), cfg).mean
            return fid[k]

        k = max(1, int(round(analytics.baker_kf(n, gamma, target)))) if gamma > 0 else 1
        if f(k) <= target:
            while k > 1 and f(k - 1) <= target:
                k -= 1
        else:
            while f(k) > target:
                k += 1
                if k > max_k:
                    raise RuntimeError(f"fidelity stayed above {target} up to k={max_k}")
        frac = _interp_crossing(k - 1, f(k - 1), k, f(k), target)
        results.append(KfResult(n, k, float(frac), k == 1, dict(sorted(fid.items()))))
    return results


def power_law_fit(ns: Sequence[float], values: Sequence[float]) -> tuple[float, float]:
    """Least-squares fit of ``log(values) = log(C) + p log(ns)``; returns ``(p, C)``."""
    p, logc = np.polyfit(np.log(ns), np.log(values), 1)
    return float(p), float(np.exp(logc))
