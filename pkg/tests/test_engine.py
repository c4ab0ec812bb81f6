import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qtraj.circuits import hadamard, controlled_phase
from qtraj.engine import (
    NOISE,
    Checkpoint,
    EnsembleEstimate,
    TrajectoryConfig,
    count_substeps,
    ensemble_density_matrix,
    ensemble_observable,
    run_ensemble,
    run_trajectory,
    trajectory_rng,
    trajectory_uniforms,
)
from qtraj.noise import AMP_INDEPENDENT, AMP_SHARED, MODELS, PHASE_FLIP, NoiseChannel
from qtraj.oracle import evolve_density
from qtraj.state import StateVector, random_state

from conftest import random_ket


def _excited_population(psi):
    return np.abs(psi[:, 1]) ** 2


def _identity(psi):
    return psi.copy()


def test_single_qubit_decay_matches_exact_iteration():
    ch = NoiseChannel.create(AMP_SHARED, 1, 0.05)
    config = TrajectoryConfig(ch, 2000, master_seed=3)
    est = ensemble_observable(StateVector.basis(1, 1), [NOISE] * 20, config, _excited_population)
    exact = 0.95**20
    assert abs(est.mean - exact) < 3 * est.std_error
    rho = evolve_density(StateVector.basis(1, 1).density_matrix(), [NOISE] * 20, ch)
    assert abs(rho.elements[1, 1].real - exact) < 1e-12


def test_run_trajectory_matches_ensemble_row():
    n = 3
    ch = NoiseChannel.create(AMP_INDEPENDENT, n, 0.2)
    sched = [hadamard(0), NOISE, controlled_phase(0, 1, 0.3), NOISE, hadamard(2), NOISE]
    psi0 = random_state(n, np.random.default_rng(0))
    config = TrajectoryConfig(ch, 20, master_seed=9, chunk_size=7)
    rows = run_ensemble(psi0, sched, config, _identity)
    for i in (0, 6, 7, 19):
        single = run_trajectory(psi0, sched, config, i).amplitudes
        assert np.allclose(single, rows[i], atol=1e-13)


@pytest.mark.parametrize("model", MODELS)
def test_worker_count_does_not_change_results(model):
    n = 4
    ch = NoiseChannel.create(model, n, 0.2, 2)
    sched = [NOISE, hadamard(1), NOISE, controlled_phase(1, 3, 1.0), NOISE]
    psi0 = random_state(n, np.random.default_rng(1))
    a = run_ensemble(psi0, sched, TrajectoryConfig(ch, 50, 5, chunk_size=8, workers=1), _identity)
    b = run_ensemble(psi0, sched, TrajectoryConfig(ch, 50, 5, chunk_size=8, workers=3), _identity)
    assert np.array_equal(a, b)


def test_chunk_size_does_not_change_results():
    ch = NoiseChannel.create(AMP_SHARED, 3, 0.3)
    psi0 = random_state(3, np.random.default_rng(2))
    sched = [NOISE, hadamard(0), NOISE, NOISE]
    a = run_ensemble(psi0, sched, TrajectoryConfig(ch, 30, 1, chunk_size=4), _identity)
    b = run_ensemble(psi0, sched, TrajectoryConfig(ch, 30, 1, chunk_size=30), _identity)
    assert np.allclose(a, b, atol=1e-13)


def test_env_var_sets_workers(monkeypatch):
    ch = NoiseChannel.create(PHASE_FLIP, 2, 0.1)
    monkeypatch.setenv("QTRAJ_WORKERS", "4")
    assert TrajectoryConfig(ch).resolved_workers() == 4
    assert TrajectoryConfig(ch, workers=2).resolved_workers() == 2


def test_seed_changes_results():
    ch = NoiseChannel.create(PHASE_FLIP, 3, 0.1)
    psi0 = random_state(3, np.random.default_rng(2))
    a = run_ensemble(psi0, [NOISE] * 5, TrajectoryConfig(ch, 40, 1), _identity)
    b = run_ensemble(psi0, [NOISE] * 5, TrajectoryConfig(ch, 40, 2), _identity)
    assert not np.array_equal(a, b)


def test_uniform_streams():
    u = trajectory_uniforms(42, [3, 5], 6)
    assert np.array_equal(u[1], trajectory_rng(42, 5).random(6))
    ch = NoiseChannel.create(PHASE_FLIP, 2, 0.1, 3)
    assert count_substeps([NOISE, hadamard(0), NOISE], ch) == 6


def test_extra_uniforms_follow_noise_uniforms():
    ch = NoiseChannel.create(PHASE_FLIP, 2, 0.1, 2)
    config = TrajectoryConfig(ch, 5, 17)

    def grab(psi, u):
        return u[:, 0]

    vals = run_ensemble(StateVector.basis(2, 0), [NOISE] * 3, config, grab, extra_uniforms=1)
    for i in range(5):
        assert vals[i] == trajectory_rng(17, i).random(7)[6]


def test_checkpoints_stack_along_axis_one():
    ch = NoiseChannel.create(AMP_SHARED, 1, 0.1)
    config = TrajectoryConfig(ch, 10, 0)
    vals = run_ensemble(StateVector.basis(1, 1), [NOISE, Checkpoint("a"), NOISE, Checkpoint("b"), NOISE],
                        config, _excited_population)
    assert vals.shape == (10, 3)
    # Once decayed a trajectory stays decayed.
    assert np.all(np.diff(vals, axis=1) <= 0)


def test_ensemble_estimate():
    est = EnsembleEstimate.from_samples(np.array([1.0, 2.0, 3.0, 4.0]))
    assert est.mean == 2.5
    assert est.std_error == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2)
    assert np.isnan(EnsembleEstimate.from_samples(np.array([1.0])).std_error)
    with pytest.raises(ValueError):
        TrajectoryConfig(NoiseChannel.create(PHASE_FLIP, 1, 0.1), 0)


def test_unsupported_schedule_item():
    ch = NoiseChannel.create(PHASE_FLIP, 1, 0.1)
    with pytest.raises(TypeError):
        run_ensemble(StateVector.basis(1, 0), ["oops"], TrajectoryConfig(ch, 2), _identity)


@pytest.mark.parametrize("model", MODELS)
@given(n=st.integers(1, 4), seed=st.integers(0, 2**31), steps=st.integers(1, 6))
def test_trajectories_stay_normalized(model, n, seed, steps):
    ch = NoiseChannel.create(model, n, 0.9 / n, 1)
    psi0 = StateVector(n, random_ket(np.random.default_rng(seed), n))
    rows = run_ensemble(psi0, [NOISE, hadamard(0)] * steps, TrajectoryConfig(ch, 16, seed), _identity)
    assert np.allclose(np.linalg.norm(rows, axis=1), 1.0, atol=1e-12)


def test_zero_rate_is_noiseless():
    ch = NoiseChannel.create(AMP_SHARED, 3, 0.0, 4)
    psi0 = random_state(3, np.random.default_rng(4))
    rows = run_ensemble(psi0, [NOISE] * 3, TrajectoryConfig(ch, 5, 0), _identity)
    assert np.array_equal(rows, np.broadcast_to(psi0.amplitudes, rows.shape))


@pytest.mark.parametrize("model", MODELS)
def test_density_matrix_average_matches_oracle(model):
    n = 3
    ch = NoiseChannel.create(model, n, 0.25, 2)
    sched = [hadamard(0), NOISE, controlled_phase(0, 2, 0.4), NOISE, hadamard(1), NOISE]
    psi0 = random_state(n, np.random.default_rng(8))
    mean, se = ensemble_density_matrix(psi0, sched, TrajectoryConfig(ch, 3000, 21))
    exact = evolve_density(psi0.density_matrix(), sched, ch).elements
    dev = mean - exact
    for d, s in ((dev.real, se.real), (dev.imag, se.imag)):
        mask = np.abs(d) > 1e-10
        assert np.all(np.abs(d[mask]) < 5 * s[mask])
