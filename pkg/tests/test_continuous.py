import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from measurement_engine import kernels
from measurement_engine.continuous import (
    CHUNK,
    ContinuousParams,
    _draws,
    arrow_continuous,
    arrow_from_sum,
    arrow_operator_oracle,
    expected_mean_heat,
    expected_mean_z,
    kraus_operator,
    readout_from_draws,
    run_ensemble,
    run_trajectory,
    step,
    trajectory_stream,
)
from measurement_engine.qubit import EngineParams, QubitState, linear_entropy

REFERENCE = EngineParams(omega0=1.0, z0_override=-0.1)


def bloch(x, y, z):
    v = np.array([x, y, z])
    n = np.linalg.norm(v)
    if n > 0.999:
        v *= 0.999 / n
    return QubitState(*map(float, v))


# -- single step -------------------------------------------------------------------

@settings(max_examples=200)
@given(
    st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1),
    st.floats(-40, 40), st.sampled_from([1e-3, 0.01, 0.05, 0.1]),
)
def test_step_matches_kraus_oracle(x, y, z, r, dt):
    state = bloch(x, y, z)
    m = kraus_operator(r, dt)
    out = m @ state.density_matrix() @ m.conj().T
    tr = np.real(np.trace(out))
    new, logl = step(state, r, dt)
    assert logl == pytest.approx(math.log(tr), abs=1e-10)
    assert np.abs(new.density_matrix() - out / tr).max() < 1e-10


def test_worked_step():
    new, _ = step(QubitState(0.0, 0.0, -0.1), 2.0, 0.01)
    assert new.x == pytest.approx(0.01999733375993093, abs=1e-15)
    assert new.z == pytest.approx(-0.09998000333279121, abs=1e-15)
    assert float(arrow_from_sum(0.02)) == pytest.approx(0.00039997333617746, abs=1e-15)


@pytest.mark.parametrize("x", [-0.7, 0.0, 0.4])
def test_readout_density_is_gaussian_mixture(x):
    dt = 0.05
    state = QubitState(x, 0.0, 0.0)
    sd = math.sqrt(1 / dt)
    total = integrate.quad(lambda r: math.exp(step(state, r, dt)[1]), -60, 60, points=[-1, 1])[0]
    assert total == pytest.approx(1.0, abs=1e-10)
    for r in (-3.0, 0.5, 4.0):
        mix = sum(
            0.5 * (1 + s * x) * math.exp(-0.5 * ((r - s) / sd) ** 2) / (sd * math.sqrt(2 * math.pi))
            for s in (1, -1)
        )
        assert math.exp(step(state, r, dt)[1]) == pytest.approx(mix, rel=1e-12)


def test_kraus_completeness():
    dt = 0.02
    total = integrate.quad_vec(
        lambda r: (lambda m: m.conj().T @ m)(kraus_operator(r, dt)), -80, 80, epsabs=1e-12
    )[0]
    assert np.abs(total - np.eye(2)).max() < 1e-9


def test_readout_from_draws():
    assert readout_from_draws(0.0, 0.2, 0.0, 0.01) == 1.0
    assert readout_from_draws(0.0, 0.7, 1.0, 0.01) == pytest.approx(-1.0 + 10.0)
    assert readout_from_draws(-1.0, 0.0, 0.0, 0.01) == -1.0


# -- arrow of time -----------------------------------------------------------------

def test_arrow_closed_form_matches_operator_products():
    ens = run_ensemble(REFERENCE, ContinuousParams(0.01, 15, 1000, 5))
    initial = QubitState(0.0, 0.0, -0.1)
    worst = max(
        abs(rec.Q - arrow_operator_oracle(rec.readouts, initial, 0.01)) for rec in ens.records
    )
    assert worst < 1e-10


def test_arrow_general_start_uses_oracle():
    rng = np.random.default_rng(0)
    r = rng.normal(size=5) * 3
    start = QubitState(0.3, 0.1, -0.2)
    assert arrow_continuous(r, start, 0.01) == arrow_operator_oracle(r, start, 0.01)
    thermal = QubitState(0.0, 0.0, -0.2)
    assert arrow_continuous(r, thermal, 0.01) == pytest.approx(
        arrow_operator_oracle(r, thermal, 0.01), abs=1e-12
    )


def test_arrow_from_sum_large_argument():
    assert float(arrow_from_sum(1e3)) == pytest.approx(2 * (1e3 - math.log(2)))
    assert float(arrow_from_sum(-1e3)) == float(arrow_from_sum(1e3))


# -- randomness ----------------------------------------------------------------------

def test_batched_draws_match_per_trajectory_streams():
    u, n = _draws(99, [0, 7, 4096], 6)
    for row, idx in enumerate([0, 7, 4096]):
        rng = trajectory_stream(99, idx)
        assert np.array_equal(u[row], rng.random(6))
        assert np.array_equal(n[row], rng.standard_normal(6))


def test_streams_differ_between_trajectories_and_seeds():
    a = trajectory_stream(1, 0).random(4)
    assert not np.array_equal(a, trajectory_stream(1, 1).random(4))
    assert not np.array_equal(a, trajectory_stream(2, 0).random(4))


# -- ensembles -------------------------------------------------------------------------

@pytest.fixture(scope="module")
def reference_small():
    return run_ensemble(REFERENCE, ContinuousParams(0.01, 15, 3000, 42))


def test_per_trajectory_identities(reference_small):
    z0 = -0.1
    sl0 = 1 - z0 * z0
    for rec in reference_small.records:
        pre = rec.pre_feedback
        assert linear_entropy(pre) == pytest.approx(math.exp(-rec.Q) * sl0, rel=1e-10)
        assert rec.Q_M == pytest.approx(0.5 * (pre.z - z0), abs=1e-15)
        assert rec.W_ext >= 0
        assert rec.dS_M <= 0
        assert rec.final_state.x == 0.0 and rec.final_state.z <= 0
        G = 0.01 * math.fsum(rec.readouts)
        assert rec.Q == pytest.approx(float(arrow_from_sum(G)), abs=1e-13)
    assert reference_small.summary["fluctuation_average"] == pytest.approx(1.0, abs=1e-10)


def test_readout_variance(reference_small):
    r = np.concatenate([rec.readouts for rec in reference_small.records])
    # tau/dt plus the unit spread of the two branch means
    assert r.var(ddof=1) == pytest.approx(101.0, rel=0.02)


def test_dephasing_and_heat_means(reference_small):
    s = reference_small.summary
    T = 0.15
    assert abs(s["mean"]["z_pre"] - expected_mean_z(-0.1, T)) < 3 * s["stderr"]["z_pre"]
    assert abs(s["mean"]["Q_M"] - expected_mean_heat(-0.1, T)) < 3 * s["stderr"]["Q_M"]
    assert abs(s["mean"]["exp_minus_half_Q"] - math.exp(-T / 2)) < 3 * s["stderr"]["exp_minus_half_Q"]


def test_second_moment_matches_quadrature(reference_small):
    from measurement_engine.distributions import expectation

    s = reference_small.summary
    target = expectation(lambda q: math.exp(-q), 0.15)
    assert abs(s["mean"]["exp_minus_Q"] - target) < 3 * s["stderr"]["exp_minus_Q"]


def test_expected_means():
    assert expected_mean_heat(-0.1, 0.15) == pytest.approx(0.0036128, abs=1e-7)
    assert expected_mean_z(-0.1, 0.0) == -0.1


def test_worker_count_does_not_change_results():
    cp = ContinuousParams(0.01, 10, 2 * CHUNK + 17, 7)
    a = run_ensemble(REFERENCE, cp, workers=1)
    b = run_ensemble(REFERENCE, cp, workers=3)
    assert [r.index for r in b.records] == list(range(cp.n_traj))
    for ra, rb in zip(a.records, b.records):
        assert ra.Q == rb.Q and ra.W_ext == rb.W_ext and ra.dS_M == rb.dS_M
        assert np.array_equal(ra.readouts, rb.readouts)


def test_single_trajectory_matches_ensemble():
    cp = ContinuousParams(0.01, 15, CHUNK + 5, 3)
    ens = run_ensemble(REFERENCE, cp)
    for idx in (0, 11, CHUNK + 4):
        rec = run_trajectory(REFERENCE, cp, idx)
        assert rec.Q == ens.records[idx].Q
        assert np.array_equal(rec.readouts, ens.records[idx].readouts)
    with pytest.raises(IndexError):
        run_trajectory(REFERENCE, cp, cp.n_traj)


def test_stored_path_follows_step():
    rec = run_trajectory(REFERENCE, ContinuousParams(0.02, 12, 1, 9), 0, keep_states=True)
    state = QubitState(*rec.states[0])
    logl = 0.0
    for k, r in enumerate(rec.readouts):
        state, inc = step(state, r, 0.02)
        logl += inc
        assert np.allclose(rec.states[k + 1], [state.x, state.y, state.z], atol=1e-13)
    assert rec.log_likelihood == pytest.approx(logl, abs=1e-10)


@pytest.mark.skipif("compiled" not in kernels.BACKENDS, reason="extension not built")
def test_backends_agree():
    rng = np.random.default_rng(1)
    u = rng.random((300, 40))
    n = rng.standard_normal((300, 40))
    a = kernels.propagate(0.0, 0.0, -0.3, u, n, 0.01, True, backend="python")
    b = kernels.propagate(0.0, 0.0, -0.3, u, n, 0.01, True, backend="compiled")
    for xa, xb in zip(a, b):
        assert np.allclose(xa, xb, rtol=1e-13, atol=1e-13)


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.get_propagate("fortran")


def test_zero_steps_is_a_no_op():
    ens = run_ensemble(REFERENCE, ContinuousParams(0.01, 0, 5, 1))
    for rec in ens.records:
        assert rec.Q == 0.0 and rec.W_ext == 0.0 and rec.Q_M == 0.0
        assert rec.dS_M == pytest.approx(0.0, abs=1e-15)
        assert rec.readouts.shape == (0,)


def test_parameter_validation():
    with pytest.raises(ValueError):
        ContinuousParams(dt_over_tau=0.0)
    with pytest.raises(ValueError):
        ContinuousParams(n_traj=0)
    with pytest.raises(ValueError):
        ContinuousParams(master_seed=-1)
    with pytest.warns(UserWarning):
        ContinuousParams(dt_over_tau=0.5)
