import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qtraj.circuits import controlled_phase, hadamard, sequence_unitary, swap
from qtraj.engine import NOISE, Checkpoint
from qtraj.noise import AMP_SHARED, MODELS, PHASE_FLIP, NoiseChannel, kraus_matrices
from qtraj.oracle import (
    BELL_STATES,
    SuperoperatorStep,
    ZeroProbabilityError,
    apply_gate_density,
    apply_superoperator,
    apply_unitary,
    bell_project,
    evolve_density,
    partial_trace_keep,
)
from qtraj.state import DensityMatrix, InvalidDimensionError, StateVector, popcounts

from conftest import random_ket


def random_rho(rng, n, rank=3):
    vs = [random_ket(rng, n) for _ in range(rank)]
    w = rng.dirichlet(np.ones(rank))
    return sum(wi * np.outer(v, v.conj()) for wi, v in zip(w, vs))


@given(st.integers(0, 2**32 - 1))
def test_gate_density_matches_dense(seed):
    rng = np.random.default_rng(seed)
    n = 3
    rho = random_rho(rng, n)
    for gate in (hadamard(1), controlled_phase(0, 2, rng.uniform(-3, 3)), swap(0, 2)):
        u = sequence_unitary([gate], n)
        assert np.allclose(apply_gate_density(rho, gate, n), u @ rho @ u.conj().T, atol=1e-13)


@pytest.mark.parametrize("model", MODELS)
@given(seed=st.integers(0, 2**32 - 1), steps=st.integers(1, 5))
def test_evolution_keeps_density_matrix_valid(model, seed, steps):
    rng = np.random.default_rng(seed)
    n = 3
    ch = NoiseChannel.create(model, n, 0.3, 2)
    rho = DensityMatrix(n, random_rho(rng, n))
    out = evolve_density(rho, [NOISE, hadamard(0), Checkpoint()] * steps, ch)
    assert out.is_valid(tol=1e-10, check_positive=True)


def test_phase_flip_dephasing_by_hamming_distance():
    n, g = 3, 0.05
    ch = NoiseChannel.create(PHASE_FLIP, n, g)
    rho = np.full((8, 8), 1 / 8, dtype=np.complex128)
    out = evolve_density(DensityMatrix(n, rho), [NOISE] * 4, ch).elements
    idx = np.arange(8)
    hamming = popcounts(n)[idx[:, None] ^ idx[None, :]]
    assert np.max(np.abs(out - rho * (1 - 2 * g * hamming) ** 4)) < 1e-15


def test_shared_damping_example_n2():
    # From |11>: no decay with 1-gamma, each one-decay successor with gamma/2.
    g = 0.3
    ch = NoiseChannel.create(AMP_SHARED, 2, g)
    out = evolve_density(StateVector.basis(2, 3).density_matrix(), [NOISE], ch).elements
    assert np.allclose(np.diag(out).real, [0, g / 2, g / 2, 1 - g], atol=1e-15)


def test_superoperator_checks():
    ch = NoiseChannel.create(PHASE_FLIP, 2, 0.1)
    step = SuperoperatorStep.from_channel(ch)
    with pytest.raises(InvalidDimensionError):
        apply_superoperator(DensityMatrix(3, np.eye(8) / 8), step)
    with pytest.raises(ValueError):
        apply_unitary(DensityMatrix(1, np.eye(2) / 2), np.array([[1, 1], [0, 1]]))
    with pytest.raises(InvalidDimensionError):
        evolve_density(DensityMatrix(11, np.zeros((2**11, 2**11))), [], NoiseChannel.create(PHASE_FLIP, 11, 0.0))
    rho = DensityMatrix(2, np.eye(4) / 4)
    assert np.allclose(apply_superoperator(rho, step).elements, rho.elements)
    assert len(kraus_matrices(ch)) == 3


def test_bell_projection():
    # |phi-> on qubits 0,1 and |1> on qubit 2.
    ket = np.kron([0, 1], BELL_STATES["phi-"])
    rho = DensityMatrix(3, np.outer(ket, ket.conj()))
    post, p = bell_project(rho, "phi-")
    assert p == pytest.approx(1.0)
    assert np.allclose(post.elements, [[0, 0], [0, 1]])
    with pytest.raises(ZeroProbabilityError):
        bell_project(rho, "psi+")
    with pytest.raises(ValueError):
        bell_project(rho, "chi")


@given(st.integers(0, 2**32 - 1), st.integers(2, 4), st.data())
def test_partial_trace_against_kron_construction(seed, n, data):
    rng = np.random.default_rng(seed)
    keep = data.draw(st.lists(st.integers(0, n - 1), min_size=1, max_size=n - 1, unique=True))
    keep = sorted(keep)
    # Product state: the reduced matrix must be the kron of the kept factors (highest first).
    kets = {q: random_ket(rng, 1) for q in range(n)}
    full = np.ones(1)
    for q in range(n - 1, -1, -1):
        full = np.kron(full, kets[q])
    rho = np.outer(full, full.conj())
    expected = np.ones(1)
    for q in reversed(keep):
        expected = np.kron(expected, kets[q])
    got = partial_trace_keep(rho, n, keep)
    assert np.allclose(got, np.outer(expected, expected.conj()), atol=1e-12)
