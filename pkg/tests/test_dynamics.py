import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

import cavgrover.dynamics as dyn
from cavgrover.dynamics import (
    EffectiveModel,
    FullModel,
    PropagatorAB,
    ProtocolParams,
    analytic_propagator,
    build_effective_hamiltonian,
    build_full_hamiltonian,
    collective_coupling,
    effective_params,
    evolve,
    evolve_schedule,
    propagator,
    two_level_ab,
)
from cavgrover.exceptions import (
    DegenerateCouplingError,
    IntegrationError,
    InvalidParameterError,
    InvalidSizeError,
    SingularParameterError,
)
from cavgrover.pulses import SECH, pulse_for_area
from cavgrover.statespace import photon_state, w_state

NOMINAL = ProtocolParams()


def pulse_u(ep, area, couplings=None, width=1.0, **kw):
    pulse = pulse_for_area(SECH, area, width, **kw)
    model = EffectiveModel(ep, [pulse], couplings=couplings)
    lo, hi = pulse.support
    return pulse, propagator(model.hamiltonian, ep.n + 1, lo, hi, max_step=width / 2)


# --- parameters -----------------------------------------------------------

def test_effective_parameters_by_hand():
    # g = Omega = 105, Delta = 1050, J = 1, N = 8
    ep = effective_params(NOMINAL)
    assert ep.g_eff == pytest.approx(-105 * 105 / (2 * 1050))        # -5.25
    assert ep.delta_prime == pytest.approx(-105**2 / (4 * 1050))      # -2.625
    assert ep.delta_small == pytest.approx(-105**2 / (1050 - 2))      # -10.52004
    assert ep.delta_small == pytest.approx(-10.52004, abs=1e-5)
    assert ep.chi == pytest.approx(math.sqrt(8) * -5.25)              # -14.8492
    assert ep.pulse_time == pytest.approx(math.pi / 14.849242, rel=1e-6)


@pytest.mark.parametrize("delta,J", [(0.0, 1.0), (2.0, 1.0), (-0.5, -0.25)])
def test_poles_rejected(delta, J):
    with pytest.raises(SingularParameterError):
        ProtocolParams(delta=delta, J=J)


def test_invalid_size_and_boundary():
    with pytest.raises(InvalidSizeError):
        ProtocolParams(n=0)
    with pytest.raises(InvalidParameterError):
        ProtocolParams(boundary="mobius")


def test_omega_zero_has_no_pulse_time():
    ep = effective_params(NOMINAL.replace(omega=0.0))
    assert ep.g_eff == 0
    with pytest.raises(DegenerateCouplingError):
        ep.pulse_time


def test_regime_check():
    assert NOMINAL.regime_ok()
    assert not NOMINAL.replace(J=20.0).regime_ok()
    assert not NOMINAL.replace(g=300.0).regime_ok()


def test_collective_coupling_sign_and_norm():
    assert collective_coupling(np.full(8, -5.25)) == pytest.approx(-14.8492424)
    assert collective_coupling([3.0, 4.0]) == pytest.approx(5.0)


# --- Hamiltonians ---------------------------------------------------------

def test_effective_hamiltonian_spectrum_n8():
    ep = effective_params(NOMINAL)
    h = build_effective_hamiltonian(np.full(8, ep.g_eff))
    ev = np.sort(np.linalg.eigvalsh(h))
    chi = abs(ep.chi)
    np.testing.assert_allclose(ev, [-chi] + [0.0] * 7 + [chi], atol=1e-12)


def test_effective_hamiltonian_layout():
    h = build_effective_hamiltonian([1.0, 2.0], detuning=0.3, offsets=[0.1, -0.1])
    np.testing.assert_allclose(h, [[0.1, 0, 1], [0, -0.1, 2], [1, 2, 0.3]])
    with pytest.raises(InvalidParameterError):
        build_effective_hamiltonian([1.0, 2.0], offsets=[0.1])


def test_full_hamiltonian_single_site_transcription():
    p = ProtocolParams(n=1, g=1.3, omega=0.7, delta=20.0, J=0.0)
    ref = np.array([[0, 1.3, 0], [1.3, 0, 0.35], [0, 0.35, 0]], dtype=complex)
    np.testing.assert_allclose(build_full_hamiltonian(p, 0.0), ref, atol=1e-15)
    t = 0.37
    h = build_full_hamiltonian(p, t)
    rot = np.exp(-1j * 20.0 * t)
    assert h[0, 1] == pytest.approx(1.3 * rot)
    assert h[2, 1] == pytest.approx(0.35 * rot)


@given(st.integers(1, 6), st.floats(0, 10), st.sampled_from(["periodic", "open"]))
def test_full_hamiltonian_hermitian(n, t, boundary):
    p = ProtocolParams(n=n, g=1.0, omega=1.0, delta=20.0, J=0.05, boundary=boundary)
    h = build_full_hamiltonian(p, t, phases=np.linspace(0, 1, n))
    np.testing.assert_allclose(h, h.conj().T, atol=1e-14)


# --- integration ----------------------------------------------------------

def test_evolve_rabi_oscillation():
    chi = -14.849242
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    t = np.linspace(0, 1, 11)
    res = evolve(lambda _: 0.5 * chi * sx, [1, 0], 0, 1, t_eval=t)
    np.testing.assert_allclose(np.abs(res.states[:, 0]) ** 2, np.cos(chi * t / 2) ** 2, atol=1e-9)


def test_evolve_matrix_input_and_timeless_case():
    h = np.diag([1.0, -2.0]).astype(complex)
    u = propagator(lambda _: h, 2, 0.0, 0.8)
    np.testing.assert_allclose(u, expm(-1j * h * 0.8), atol=1e-10)
    res = evolve(lambda _: h, [1, 0], 0.5, 0.5)
    np.testing.assert_array_equal(res.final, [1, 0])
    with pytest.raises(InvalidParameterError):
        evolve(lambda _: h, [1, 0], 1.0, 0.0)


def test_evolve_failure_raises(monkeypatch):
    def broken(*args, **kwargs):
        return SimpleNamespace(status=-1, t=np.array([0.0, 0.25]), message="step size too small")
    monkeypatch.setattr(dyn, "solve_ivp", broken)
    with pytest.raises(IntegrationError) as info:
        evolve(lambda _: np.eye(1), [1.0], 0.0, 1.0)
    assert info.value.t_failed == 0.25


def test_evolve_decay_is_not_renormalised():
    res = evolve(lambda _: np.zeros((1, 1)), [1.0], 0, 2.0, decay=[0.5])
    assert abs(res.final[0]) == pytest.approx(math.exp(-0.5), rel=1e-9)


# --- analytic propagator --------------------------------------------------

def test_ab_anchors():
    a_pi = two_level_ab(pulse_for_area(SECH, np.pi, 1.0)).a
    a_2pi = two_level_ab(pulse_for_area(SECH, 2 * np.pi, 1.0)).a
    assert abs(a_pi) < 1e-3          # truncation at +-10 widths leaves ~9e-5
    assert abs(a_2pi + 1) < 1e-6
    # widening the window removes the truncation error
    assert abs(two_level_ab(pulse_for_area(SECH, np.pi, 1.0, window=25)).a) < 1e-8


@pytest.mark.parametrize("detuning", [0.3, 1.0, 2.5])
def test_two_level_detuned_sech_transfer(detuning):
    # sech-pulse transfer with static detuning: sin^2(A/2) sech^2(pi D w / 2)
    w, area = 0.8, np.pi
    ab = two_level_ab(pulse_for_area(SECH, area, w, window=30), detuning=detuning)
    ref = math.sin(area / 2) ** 2 / math.cosh(math.pi * detuning * w / 2) ** 2
    assert abs(ab.b) ** 2 == pytest.approx(ref, abs=1e-8)


def test_propagator_ab_validation():
    with pytest.raises(InvalidParameterError):
        PropagatorAB(1.0, 0.5)
    with pytest.raises(DegenerateCouplingError):
        analytic_propagator(np.zeros(3), PropagatorAB(1.0, 0.0))


def test_n2_analytic_matches_integration():
    ep = effective_params(NOMINAL.replace(n=2))
    pulse, u = pulse_u(ep, np.pi)
    ab = two_level_ab(pulse)
    np.testing.assert_allclose(analytic_propagator(ep.g_eff, ab, n=2), u, atol=1e-6)
    # a = 0: register block is 1 - |W><W|
    np.testing.assert_allclose(u[:2, :2], [[0.5, -0.5], [-0.5, 0.5]], atol=1e-3)
    np.testing.assert_allclose(np.abs(u[:2, 2]), 1 / math.sqrt(2), atol=1e-3)


@pytest.mark.parametrize("n", [2, 4, 8])
def test_global_2pi_pulse_is_householder(n):
    ep = effective_params(NOMINAL.replace(n=n))
    _, u = pulse_u(ep, 2 * np.pi)
    w = w_state(n)[:n].real
    np.testing.assert_allclose(u[:n, :n], np.eye(n) - 2 * np.outer(w, w), atol=1e-3)
    # R^2 = 1 on the register
    np.testing.assert_allclose(u[:n, :n] @ u[:n, :n], np.eye(n), atol=1e-3)


def test_dark_states_untouched_by_global_pulse():
    n = 5
    ep = effective_params(NOMINAL.replace(n=n))
    rng = np.random.default_rng(3)
    g = ep.g_eff * (1 + rng.uniform(-0.3, 0.3, n))
    _, u = pulse_u(ep, 1.7 * np.pi, couplings=g)
    # any register vector orthogonal to g is dark
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    v -= g * np.vdot(g, v) / np.vdot(g, g)
    psi = np.append(v / np.linalg.norm(v), 0)
    np.testing.assert_allclose(u @ psi, psi, atol=1e-9)


@settings(max_examples=12, deadline=None)
@given(st.integers(2, 8), st.floats(0.0, 0.3), st.floats(0.1, 4 * np.pi), st.integers(0, 2**16))
def test_analytic_equals_integration(n, spread, area, seed):
    ep = effective_params(NOMINAL.replace(n=n))
    rng = np.random.default_rng(seed)
    g = ep.g_eff * (1 + rng.uniform(-spread, spread, n))
    pulse, u = pulse_u(ep, area, couplings=g)
    ab = two_level_ab(pulse, collective_coupling(g) / ep.chi)
    np.testing.assert_allclose(analytic_propagator(g, ab), u, atol=1e-6)


# --- models ---------------------------------------------------------------

def test_effective_idle_propagator_matches_integration():
    ep = effective_params(NOMINAL.replace(n=3))
    model = EffectiveModel(ep, [], offsets=[0.2, -0.4, 1.1], kappa=0.3, resonant=False)
    psi = np.array([0.5, 0.5j, -0.5, 0.5], dtype=complex)
    times = [0.3, 1.0, 2.2]
    exact = model.idle_propagator(psi, 0.1, times)
    num = evolve(model.hamiltonian, psi, 0.1, 2.2, decay=model.decay, t_eval=times).states
    np.testing.assert_allclose(exact, num, atol=1e-9)


def test_full_idle_propagator_matches_integration():
    p = ProtocolParams(n=3, g=1.0, omega=1.0, delta=20.0, J=0.05, kappa=0.1)
    model = FullModel(p, [], offsets=[0.0, 0.02, -0.01])
    psi = model.initial_photon_state()
    times = [0.4, 1.1, 1.5]
    exact = model.idle_propagator(psi, 0.2, times)
    num = evolve(model.hamiltonian, psi, 0.2, 1.5, decay=model.decay, t_eval=times,
                 max_step=0.02).states
    np.testing.assert_allclose(exact, num, atol=1e-8)


def test_full_model_initial_state_is_uniform_photon():
    model = FullModel(ProtocolParams(n=4, g=1.0, omega=1.0, delta=20.0, J=0.05))
    psi = model.initial_photon_state()
    assert np.linalg.norm(psi) == pytest.approx(1.0)
    np.testing.assert_allclose(np.abs(psi[model.photon_indices]), 0.5)
    assert model.populations(psi)[-2] == pytest.approx(1.0)


def test_full_model_rejects_zero_g():
    with pytest.raises(DegenerateCouplingError):
        FullModel(ProtocolParams(n=2, g=0.0, omega=1.0, delta=20.0, J=0.05))


def test_evolve_schedule_kicks_and_checkpoints():
    ep = effective_params(NOMINAL.replace(n=4))
    T = ep.pulse_time
    init = pulse_for_area(SECH, np.pi, T / 2, center=5 * T, label="init")
    model = EffectiveModel(ep, [init])
    flip = lambda psi: psi * np.array([-1, 1, 1, 1, 1])
    times = np.linspace(0, 15 * T, 31)
    res = evolve_schedule(model, photon_state(4), 15 * T, times, [(12 * T, flip, "kick")])
    labels = [c.label for c in res.checkpoints]
    assert labels == ["init", "kick"]
    before = res.states[times < 12 * T - 1e-12][-1]
    after = res.states[times >= 12 * T - 1e-12][0]
    assert np.real(before[0] / after[0]) == pytest.approx(-1.0, abs=1e-9)
    np.testing.assert_allclose(np.abs(res.final), np.abs(w_state(4)), atol=1e-3)


def test_loss_norm_non_increasing():
    ep = effective_params(NOMINAL.replace(n=4))
    T = ep.pulse_time
    init = pulse_for_area(SECH, np.pi, T / 2, center=5 * T)
    model = EffectiveModel(ep, [init], kappa=0.5 * abs(ep.chi))
    times = np.linspace(0, 12 * T, 200)
    res = evolve_schedule(model, photon_state(4), 12 * T, times)
    norms = np.linalg.norm(res.states, axis=1)
    assert np.all(np.diff(norms) <= 1e-12)
    assert norms[-1] < 1.0
