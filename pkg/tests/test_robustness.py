import numpy as np
import pytest
from scipy import stats

import cavgrover.robustness as rob
from cavgrover.dynamics import EffectiveParams, ProtocolParams, effective_params
from cavgrover.exceptions import IntegrationError, InvalidParameterError
from cavgrover.grover import run_protocol
from cavgrover.robustness import (
    DisorderSpec,
    run_sweep,
    run_trial,
    sample_disorder,
    unit_deviates,
)

NOMINAL = ProtocolParams()
SMALL = ProtocolParams(n=4)


@pytest.mark.parametrize("distribution", ["uniform", "gaussian"])
def test_mean_absolute_deviation_matches_level(distribution):
    ep = EffectiveParams(100_000, -5.25, -2.625, -10.52, -5.25 * np.sqrt(1e5))
    spec = DisorderSpec(0.1, distribution, ("coupling", "cavity_frequency"))
    d = sample_disorder(spec, ep, trial=0)
    assert np.mean(np.abs(d.eps_coupling)) == pytest.approx(0.1, rel=0.02)
    assert np.mean(np.abs(d.eps_cavity)) == pytest.approx(0.1, rel=0.02)
    assert abs(np.mean(d.eps_coupling)) < 2e-3  # ~5 standard errors


def test_unit_deviates_scale():
    rng = np.random.default_rng(0)
    u = unit_deviates("uniform", rng, 200_000)
    assert u.min() >= -2 and u.max() <= 2
    assert np.mean(np.abs(u)) == pytest.approx(1.0, rel=0.01)


def test_level_zero_is_nominal():
    ep = effective_params(NOMINAL)
    d = sample_disorder(DisorderSpec(0.0, targets=("coupling", "cavity_frequency")), ep, 5)
    np.testing.assert_array_equal(d.couplings, np.full(8, ep.g_eff))
    np.testing.assert_array_equal(d.offsets, 0.0)


def test_draws_are_deterministic_and_per_trial():
    ep = effective_params(NOMINAL)
    spec = DisorderSpec(0.2, seed=42)
    a, b = sample_disorder(spec, ep, 3), sample_disorder(spec, ep, 3)
    np.testing.assert_array_equal(a.couplings, b.couplings)
    c = sample_disorder(spec, ep, 4)
    assert not np.array_equal(a.couplings, c.couplings)


def test_enabling_a_target_keeps_the_other_stream():
    ep = effective_params(NOMINAL)
    only_c = sample_disorder(DisorderSpec(0.2), ep, 1)
    both = sample_disorder(DisorderSpec(0.2, targets=("coupling", "cavity_frequency")), ep, 1)
    np.testing.assert_array_equal(only_c.couplings, both.couplings)
    assert both.offsets.any() and not only_c.offsets.any()
    # cavity shifts move the register Stark shift: offset_i = -delta eps_i
    np.testing.assert_allclose(both.offsets, -ep.delta_small * both.eps_cavity)


def test_levels_share_random_numbers():
    ep = effective_params(NOMINAL)
    spec = DisorderSpec(seed=9)
    e1 = sample_disorder(spec.at_level(0.1), ep, 2).eps_coupling
    e3 = sample_disorder(spec.at_level(0.3), ep, 2).eps_coupling
    np.testing.assert_allclose(e3, 3 * e1, rtol=1e-12)


def test_zero_disorder_reproduces_clean_trace_bitwise():
    clean = run_protocol(NOMINAL, "effective")
    ep = effective_params(NOMINAL)
    d = sample_disorder(DisorderSpec(0.0), ep, 0)
    same = run_protocol(NOMINAL, "effective", couplings=d.couplings)
    np.testing.assert_array_equal(clean.p_marked, same.p_marked)
    assert run_trial(NOMINAL, DisorderSpec(), 0.0, 7) == clean.p_marked.max()


def test_unmarked_permutation_leaves_marked_population_invariant():
    ep = effective_params(NOMINAL)
    d = sample_disorder(DisorderSpec(0.3, seed=5), ep, 0)
    g = d.couplings
    perm = np.r_[0, np.random.default_rng(1).permutation(np.arange(1, 8))]
    a = run_protocol(NOMINAL, "effective", marked=1, couplings=g)
    b = run_protocol(NOMINAL, "effective", marked=1, couplings=g[perm])
    np.testing.assert_allclose(a.p_marked, b.p_marked, atol=1e-8)


@pytest.mark.slow
def test_marked_label_does_not_change_fidelity_distribution():
    # identically distributed qubits: which one is marked is irrelevant in law
    spec_a = DisorderSpec(trials=40, seed=101)
    spec_b = DisorderSpec(trials=40, seed=202)
    a = run_sweep(NOMINAL, spec_a, [0.2], marked=1).per_level[0].values
    b = run_sweep(NOMINAL, spec_b, [0.2], marked=6).per_level[0].values
    assert stats.ks_2samp(a, b).pvalue > 1e-3


def test_sweep_is_seed_deterministic_and_thread_independent():
    spec = DisorderSpec(trials=4, seed=77)
    a = run_sweep(SMALL, spec, [0.0, 0.2])
    b = run_sweep(SMALL, spec, [0.0, 0.2])
    c = run_sweep(SMALL, spec, [0.0, 0.2], threads=2)
    assert a.to_dict() == b.to_dict() == c.to_dict()
    other = run_sweep(SMALL, DisorderSpec(trials=4, seed=78), [0.0, 0.2])
    assert other.level(0.2).values != a.level(0.2).values
    assert a.level(0.0).std == 0.0


def test_failed_trials_are_counted_and_excluded(monkeypatch):
    real = rob.run_protocol
    calls = {"n": 0}

    def flaky(*args, **kwargs):
        calls["n"] += 1
        if calls["n"] == 2:
            raise IntegrationError("step size too small", t_failed=1.0, status=-1)
        return real(*args, **kwargs)

    monkeypatch.setattr(rob, "run_protocol", flaky)
    s = run_sweep(SMALL, DisorderSpec(trials=3), [0.1]).per_level[0]
    assert s.n_trials == 3 and s.n_failed == 1
    assert np.isnan(s.values[1])
    assert s.mean == pytest.approx(np.mean([s.values[0], s.values[2]]))


def test_sweep_summary_api():
    s = run_sweep(SMALL, DisorderSpec(trials=2), [0.0, 0.1])
    np.testing.assert_array_equal(s.means, [x.mean for x in s.per_level])
    with pytest.raises(KeyError):
        s.level(0.5)
    d = s.to_dict()
    assert d["disorder"]["targets"] == ["coupling"]
    assert [x["level"] for x in d["levels"]] == [0.0, 0.1]
    with pytest.raises(InvalidParameterError):
        run_sweep(SMALL, DisorderSpec(trials=2), [])


@pytest.mark.parametrize("kwargs", [
    dict(relative_sigma=-0.1), dict(distribution="cauchy"), dict(targets=("mass",)),
    dict(trials=0), dict(seed=-1),
])
def test_disorder_spec_validation(kwargs):
    with pytest.raises(InvalidParameterError):
        DisorderSpec(**kwargs)
