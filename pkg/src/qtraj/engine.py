"""Monte Carlo wave-function engine.

A *schedule* is a list mixing :class:`~qtraj.circuits.GateOp` items with
:data:`NOISE` markers (one noise interval = ``sub_steps`` jump/no-jump
sub-steps) and optional :class:`Checkpoint` markers.

Trajectory ``i`` draws its uniforms from a generator seeded by
``SeedSequence(master_seed, spawn_key=(i,))``; exactly one uniform is consumed
per noise sub-step. Trajectories are advanced in fixed-size chunks whose
layout does not depend on the worker count, so results are bit-identical
for any number of workers.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .circuits import GateOp, apply_gate_array
from .noise import (
    PHASE_FLIP,
    JumpOutcome,
    NoiseChannel,
    RateTooLargeError,
    jump_probabilities_array,
    jump_unnormalized,
    normalize_rows,
)
from .state import StateVector

WORKERS_ENV = "QTRAJ_WORKERS"
DEFAULT_TRAJECTORIES = 400
DEFAULT_BAKER_TRAJECTORIES = 500


class _Noise:
    def __repr__(self):
        return "NOISE"

    def __reduce__(self):
        return "NOISE"


NOISE = _Noise()


@dataclass(frozen=True)
class Checkpoint:
    label: str = ""


@dataclass(frozen=True)
class TrajectoryConfig:
    channel: NoiseChannel
    n_trajectories: int = DEFAULT_TRAJECTORIES
    master_seed: int = 0
    chunk_size: int = 128
    workers: int | None = None

    def __post_init__(self):
        if self.n_trajectories < 1:
            raise ValueError(f"need at least one trajectory, got {self.n_trajectories}")
        if self.chunk_size < 1:
            raise ValueError("chunk_size must be positive")

    @property
    def n_qubits(self) -> int:
        return self.channel.n_qubits

    @property
    def sub_steps_per_gate(self) -> int:
        return self.channel.sub_steps

    def resolved_workers(self) -> int:
        if self.workers is not None:
            return max(1, self.workers)
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))


@dataclass(frozen=True)
class EnsembleEstimate:
    mean: float | np.ndarray
    std_error: float | np.ndarray
    n_samples: int

    @classmethod
    def from_samples(cls, values: np.ndarray) -> EnsembleEstimate:
        values = np.asarray(values, dtype=np.float64)
        n = values.shape[0]
        mean = values.mean(axis=0)
        if n < 2:
            se = np.full_like(mean, np.nan)
        else:
            se = values.std(axis=0, ddof=1) / np.sqrt(n)
        if np.ndim(mean) == 0:
            return cls(float(mean), float(se), n)
        return cls(mean, se, n)


def trajectory_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(master_seed, spawn_key=(index,))))


def trajectory_uniforms(master_seed: int, indices: Sequence[int], count: int) -> np.ndarray:
    """``(len(indices), count)`` uniforms on [0, 1), row ``r`` from trajectory ``indices[r]``."""
    out = np.empty((len(indices), count))
    for r, i in enumerate(indices):
        out[r] = trajectory_rng(master_seed, i).random(count)
    return out


def count_substeps(schedule: Sequence, channel: NoiseChannel) -> int:
    return sum(1 for item in schedule if item is NOISE) * channel.sub_steps


# core kernel ---------------------------------------------------------------------

def noise_sub_step_array(channel: NoiseChannel, psi: np.ndarray, eps: np.ndarray):
    """One jump/no-jump sub-step for a batch ``psi`` of shape ``(B, 2**n)``.

    Returns ``(psi_new, jumped, mu_index)`` with ``mu_index`` the 0-based
    qubit of the applied jump (meaningless where ``jumped`` is False).
    """
    batch = psi.shape[0]
    if channel.gamma == 0.0:
        return psi, np.zeros(batch, dtype=bool), np.zeros(batch, dtype=np.int64)
    dp = jump_probabilities_array(channel, psi)
    cum = np.cumsum(dp, axis=-1)
    total = cum[:, -1]
    jumped = eps < total
    # Intervals are closed on the right: eps == dp_1 still selects mu = 1.
    mu_index = np.argmax((eps[:, None] <= cum) & (dp > 0.0), axis=-1)

    stay = ~jumped
    if np.any(stay) and np.any(1.0 - total[stay] <= 0.0):
        raise RateTooLargeError("no-jump branch has nonpositive probability")
    if channel.model == PHASE_FLIP:
        # M_0 is proportional to the identity: no-jump rows are left as they are.
        if not np.any(jumped):
            return psi, jumped, mu_index
        out = psi.copy()
    elif np.all(stay):
        return normalize_rows(psi * channel.no_jump_diagonal()), jumped, mu_index
    else:
        out = psi.copy()
        out[stay] = normalize_rows(psi[stay] * channel.no_jump_diagonal())
    if np.any(jumped):
        for q in np.unique(mu_index[jumped]):
            rows = jumped & (mu_index == q)
            out[rows] = normalize_rows(jump_unnormalized(channel, psi[rows], int(q)))
    return out, jumped, mu_index


def evolve_batch(psi: np.ndarray, schedule: Sequence, channel: NoiseChannel,
                 uniforms: np.ndarray, on_checkpoint: Callable | None = None) -> np.ndarray:
    """Run ``schedule`` on a batch of states, consuming ``uniforms`` column by column."""
    n = channel.n_qubits
    col = 0
    for item in schedule:
        if item is NOISE:
            for _ in range(channel.sub_steps):
                psi, _, _ = noise_sub_step_array(channel, psi, uniforms[:, col])
                col += 1
        elif isinstance(item, GateOp):
            psi = apply_gate_array(psi, item, n)
        elif isinstance(item, Checkpoint):
            if on_checkpoint is not None:
                on_checkpoint(psi)
        else:
            raise TypeError(f"unsupported schedule item {item!r}")
    return psi


# single-trajectory API ---------------------------------------------------------------

def noise_sub_step(state: StateVector, channel: NoiseChannel,
                   rng: np.random.Generator) -> tuple[StateVector, JumpOutcome]:
    eps = np.array([rng.random()])
    psi, jumped, mu_index = noise_sub_step_array(channel, state.amplitudes[None, :], eps)
    outcome = JumpOutcome(True, int(mu_index[0]) + 1) if jumped[0] else JumpOutcome(False)
    return StateVector(state.n_qubits, psi[0]), outcome


def run_trajectory(initial: StateVector, schedule: Sequence, config: TrajectoryConfig,
                   trajectory_index: int) -> StateVector:
    channel = config.channel
    uniforms = trajectory_uniforms(config.master_seed, [trajectory_index],
                                   count_substeps(schedule, channel))
    psi = evolve_batch(initial.amplitudes[None, :].copy(), schedule, channel, uniforms)
    return StateVector(initial.n_qubits, psi[0])


# ensembles ---------------------------------------------------------------------------

def _chunks(n_traj: int, size: int) -> list[tuple[int, int]]:
    return [(lo, min(lo + size, n_traj)) for lo in range(0, n_traj, size)]


def _run_chunk(args):
    initial, schedule, config, observable, extra, lo, hi = args
    channel = config.channel
    n_sub = count_substeps(schedule, channel)
    uniforms = trajectory_uniforms(config.master_seed, range(lo, hi), n_sub + extra)
    psi = np.broadcast_to(initial, (hi - lo, initial.shape[-1])).copy()
    snapshots = []

    def record(p):
        snapshots.append(_observe(observable, p, uniforms[:, n_sub:], extra))

    psi = evolve_batch(psi, schedule, channel, uniforms[:, :n_sub], record)
    final = _observe(observable, psi, uniforms[:, n_sub:], extra)
    if snapshots:
        return np.stack(snapshots + [final], axis=1)
    return final


def _observe(observable, psi, extra_uniforms, extra):
    if extra:
        return np.asarray(observable(psi, extra_uniforms))
    return np.asarray(observable(psi))


def run_ensemble(initial: StateVector | np.ndarray, schedule: Sequence, config: TrajectoryConfig,
                 observable: Callable, extra_uniforms: int = 0) -> np.ndarray:
    """Per-trajectory observable values, ordered by trajectory index.

    ``observable`` maps a batch of final states ``(B, 2**n)`` to values of
    shape ``(B, ...)``. When ``extra_uniforms > 0`` it is called as
    ``observable(psi, u)`` with ``u`` holding that many further uniforms per
    trajectory (drawn after the noise uniforms from the same stream). With
    checkpoints in the schedule the result gains an axis 1 indexing the
    checkpoints followed by the final state.
    """
    amps = initial.amplitudes if isinstance(initial, StateVector) else np.asarray(initial, np.complex128)
    tasks = [(amps, list(schedule), config, observable, extra_uniforms, lo, hi)
             for lo, hi in _chunks(config.n_trajectories, config.chunk_size)]
    workers = config.resolved_workers()
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, tasks))
    else:
        parts = [_run_chunk(t) for t in tasks]
    return np.concatenate(parts, axis=0)


def ensemble_observable(initial: StateVector | np.ndarray, schedule: Sequence, config: TrajectoryConfig,
                        observable: Callable, extra_uniforms: int = 0) -> EnsembleEstimate:
    values = run_ensemble(initial, schedule, config, observable, extra_uniforms)
    return EnsembleEstimate.from_samples(values)


def projector_observable(psi: np.ndarray) -> np.ndarray:
    """``|phi><phi|`` for each trajectory, flattened and split into real and imaginary parts."""
    outer = psi[:, :, None] * psi[:, None, :].conj()
    flat = outer.reshape(psi.shape[0], -1)
    return np.concatenate([flat.real, flat.imag], axis=1)


def ensemble_density_matrix(initial: StateVector, schedule: Sequence,
                            config: TrajectoryConfig) -> tuple[np.ndarray, np.ndarray]:
    """Trajectory-averaged density matrix and the elementwise standard error.

    The error array is complex: real part is the error of the real part, and
    likewise for the imaginary part.
    """
    est = ensemble_observable(initial, schedule, config, projector_observable)
    dim = 2**config.n_qubits
    half = dim * dim
    mean = (est.mean[:half] + 1j * est.mean[half:]).reshape(dim, dim)
    se = (est.std_error[:half] + 1j * est.std_error[half:]).reshape(dim, dim)
    return mean, se
