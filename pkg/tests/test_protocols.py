import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qtraj.circuits import SWAP
from qtraj.engine import NOISE, TrajectoryConfig, run_ensemble
from qtraj.noise import AMP_INDEPENDENT, AMP_SHARED, PHASE_FLIP, NoiseChannel
from qtraj.protocols import (
    AVERAGED,
    SAMPLED,
    BakerSetup,
    TeleportSetup,
    baker_fidelity_exact,
    baker_fidelity_experiment,
    baker_kf_scan,
    baker_schedule,
    bell_outcome_probabilities,
    build_chain_initial,
    fidelity_observable,
    power_law_fit,
    setup_rng,
    swap_chain_schedule,
    teleport_fidelity,
    teleport_fidelity_exact,
)
from qtraj.state import InvalidDimensionError, StateVector, random_state, reduced_single_qubit


def _identity(psi):
    return psi.copy()


def random_ab(seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    v /= np.linalg.norm(v)
    return complex(v[0]), complex(v[1])


def test_chain_schedule_layout():
    ch = NoiseChannel.create(AMP_SHARED, 6, 0.1)
    sched = swap_chain_schedule(TeleportSetup(6, ch))
    swaps = [g.qubits for g in sched if g is not NOISE]
    assert swaps == [(1, 2), (2, 3), (3, 4), (4, 5)]
    assert sched[0] is NOISE and sum(g is NOISE for g in sched) == 4
    after = swap_chain_schedule(TeleportSetup(6, ch, noise_before_swap=False, trailing_noise=True))
    assert after[0].kind == SWAP and sum(g is NOISE for g in after) == 5


def test_chain_moves_bell_partner_to_top():
    n = 5
    setup = TeleportSetup(n, NoiseChannel.create(AMP_SHARED, n, 0.0))
    init = build_chain_initial(setup, setup_rng(0))
    final = run_ensemble(init, swap_chain_schedule(setup), TrajectoryConfig(setup.channel, 2), _identity)[0]
    # Qubits 0 and n-1 now hold |phi+>: each is maximally mixed and their parity is even.
    state = StateVector(n, final)
    assert np.allclose(reduced_single_qubit(state, 0).elements, np.eye(2) / 2)
    assert np.allclose(reduced_single_qubit(state, n - 1).elements, np.eye(2) / 2)
    idx = np.arange(2**n)
    odd = ((idx & 1) ^ (idx >> (n - 1) & 1)).astype(bool)
    assert np.sum(np.abs(final[odd]) ** 2) < 1e-24


@pytest.mark.parametrize("mode", [AVERAGED, SAMPLED])
@given(seed=st.integers(0, 2**31))
def test_noiseless_teleport_is_perfect(mode, seed):
    a, b = random_ab(seed)
    n = 4
    setup = TeleportSetup(n, NoiseChannel.create(AMP_SHARED, n, 0.0), a, b, mode)
    est = teleport_fidelity(setup, TrajectoryConfig(setup.channel, 8, seed))
    assert est.mean == pytest.approx(1.0, abs=1e-12)
    f, probs = teleport_fidelity_exact(setup, build_chain_initial(setup, setup_rng(seed)))
    assert f == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(list(probs.values()), 0.25)


def test_bell_outcomes_uniform_without_noise():
    n = 4
    setup = TeleportSetup(n, NoiseChannel.create(PHASE_FLIP, n, 0.0), *random_ab(1))
    init = build_chain_initial(setup, setup_rng(1))
    final = run_ensemble(init, swap_chain_schedule(setup), TrajectoryConfig(setup.channel, 3), _identity)
    assert np.allclose(bell_outcome_probabilities(final, setup.psi), 0.25)


@pytest.mark.parametrize("model", [AMP_SHARED, AMP_INDEPENDENT, PHASE_FLIP])
def test_teleport_trajectories_match_oracle(model):
    n = 5
    ch = NoiseChannel.create(model, n, 0.15, 2)
    setup = TeleportSetup(n, ch, *random_ab(3))
    init = build_chain_initial(setup, setup_rng(4))
    exact, _ = teleport_fidelity_exact(setup, init)
    est = teleport_fidelity(setup, TrajectoryConfig(ch, 2000, 6), init)
    assert abs(est.mean - exact) < 3 * est.std_error


def test_sampled_and_averaged_modes_agree():
    n = 5
    ch = NoiseChannel.create(AMP_SHARED, n, 0.4)
    avg = TeleportSetup(n, ch, *random_ab(9), AVERAGED)
    smp = TeleportSetup(n, ch, *random_ab(9), SAMPLED)
    init = build_chain_initial(avg, setup_rng(2))
    exact, _ = teleport_fidelity_exact(avg, init)
    for setup in (avg, smp):
        est = teleport_fidelity(setup, TrajectoryConfig(ch, 4000, 13), init)
        assert abs(est.mean - exact) < 3 * est.std_error


def test_teleport_setup_validation():
    ch = NoiseChannel.create(AMP_SHARED, 4, 0.1)
    with pytest.raises(InvalidDimensionError):
        TeleportSetup(2, NoiseChannel.create(AMP_SHARED, 2, 0.1))
    with pytest.raises(ValueError):
        TeleportSetup(4, ch, 1.0, 1.0)
    with pytest.raises(ValueError):
        TeleportSetup(5, ch)
    with pytest.raises(ValueError):
        TeleportSetup(4, ch, measurement_mode="guess")


def test_baker_noiseless_fidelity_is_one():
    n = 6
    ch = NoiseChannel.create(PHASE_FLIP, n, 0.0)
    est = baker_fidelity_experiment(BakerSetup(n, 2, ch), TrajectoryConfig(ch, 4, 0))
    assert est.mean >= 1 - 1e-9


def test_baker_schedule_noise_per_counted_gate():
    n, k = 4, 2
    sched = baker_schedule(n, k)
    assert sum(item is NOISE for item in sched) == 2 * n * n * k


def test_baker_trajectories_match_oracle():
    n = 4
    ch = NoiseChannel.create(PHASE_FLIP, n, 0.01)
    psi0 = random_state(n, np.random.default_rng(3))
    setup = BakerSetup(n, 1, ch, psi0)
    exact = baker_fidelity_exact(setup, psi0)
    est = baker_fidelity_experiment(setup, TrajectoryConfig(ch, 3000, 8))
    assert abs(est.mean - exact) < 3 * est.std_error


def test_baker_setup_validation():
    with pytest.raises(ValueError):
        BakerSetup(4, 1, NoiseChannel.create(AMP_SHARED, 4, 0.01))
    with pytest.raises(ValueError):
        BakerSetup(4, 0, NoiseChannel.create(PHASE_FLIP, 4, 0.01))


@given(seed=st.integers(0, 2**31), n=st.integers(1, 5))
def test_phase_flip_free_fidelity_is_zero_or_one(seed, n):
    # Equal-modulus states: any nontrivial Z pattern is orthogonal to the original.
    psi0 = random_state(n, np.random.default_rng(seed))
    ch = NoiseChannel.create(PHASE_FLIP, n, 0.5 / n)
    f = run_ensemble(psi0, [NOISE] * 3, TrajectoryConfig(ch, 20, seed), fidelity_observable(psi0))
    assert np.all((np.abs(f) < 1e-12) | (np.abs(f - 1) < 1e-12))


def test_kf_scan_brackets_target():
    ch = NoiseChannel.create(PHASE_FLIP, 4, 0.0)
    res = baker_kf_scan([4, 5], 1e-4, 0.9, TrajectoryConfig(ch, 400, 1))
    for r in res:
        assert r.fidelities[r.k_f] <= 0.9 < r.fidelities[r.k_f - 1]
        assert r.k_f - 1 < r.k_f_fraction <= r.k_f
    assert not res[0].below_one_step
    with pytest.raises(ValueError):
        baker_kf_scan([4], 1e-3, 1.2, TrajectoryConfig(ch, 10))


def test_power_law_fit_recovers_synthetic_law():
    ns = np.array([6.0, 8.0, 10.0, 12.0])
    p, c = power_law_fit(ns, 800.0 * ns**-3)
    assert p == pytest.approx(-3.0) and c == pytest.approx(800.0)


def test_kf_scan_flags_sub_step_crossing():
    ch = NoiseChannel.create(PHASE_FLIP, 4, 0.0)
    (res,) = baker_kf_scan([4], 2e-3, 0.9, TrajectoryConfig(ch, 200, 1))
    assert res.below_one_step and res.k_f == 1 and 0 < res.k_f_fraction < 1


@pytest.mark.parametrize("model", [AMP_SHARED, AMP_INDEPENDENT, PHASE_FLIP])
def test_teleport_insensitive_to_sub_steps_at_small_rate(model):
    # The s-dependence is second order in gamma_gate; at 0.02 it is far below
    # the statistical error of a 400-trajectory run (about 0.01).
    n, g = 6, 0.02
    vals = []
    for s in (1, 2, 4):
        setup = TeleportSetup(n, NoiseChannel.create(model, n, g, s))
        vals.append(teleport_fidelity_exact(setup, build_chain_initial(setup, setup_rng(0)))[0])
    assert max(vals) - min(vals) < 4e-3
    setup = TeleportSetup(n, NoiseChannel.create(model, n, g / 2, 1))
    spread_half = abs(teleport_fidelity_exact(setup, build_chain_initial(setup, setup_rng(0)))[0]
                      - teleport_fidelity_exact(TeleportSetup(n, NoiseChannel.create(model, n, g / 2, 4)),
                                                build_chain_initial(setup, setup_rng(0)))[0])
    assert spread_half < (max(vals) - min(vals)) / 3  # roughly quadratic in gamma
