"""Built-in invariant checks run by ``cavgrover ... mode: validate``."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .dynamics import (
    EffectiveModel,
    ProtocolParams,
    analytic_propagator,
    collective_coupling,
    effective_params,
    evolve,
    propagator,
    two_level_ab,
)
from .grover import run_protocol, success_probability
from .pulses import SECH, pulse_for_area
from .statespace import w_state


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""
    seconds: float = 0.0

    def __post_init__(self):
        self.passed = bool(self.passed)
        self.value = float(self.value)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.detail} ({self.seconds:.2f}s)"


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res
    wrapper.__name__ = fn.__name__
    return wrapper


@_timed
def check_closed_form_grover(n_max=64, k_max=10, tol=1e-12) -> CheckResult:
    params = ProtocolParams()
    worst = 0.0
    for n in range(2, n_max + 1):
        p = params.replace(n=n)
        for k in range(k_max + 1):
            tr = run_protocol(p, "ideal", marked=1, iterations=k)
            worst = max(worst, abs(tr.p_marked[-1] - success_probability(n, k)))
    return CheckResult("closed-form Grover", worst <= tol, worst, tol,
                       f"max |p - sin^2((2k+1)theta)| = {worst:.2e}")


def global_pulse_propagator(ep, area, width=1.0, couplings=None):
    pulse = pulse_for_area(SECH, area, width)
    model = EffectiveModel(ep, [pulse], couplings=couplings)
    lo, hi = pulse.support
    return pulse, propagator(model.hamiltonian, ep.n + 1, lo, hi, max_step=width / 2)


@_timed
def check_householder(sizes=(2, 4, 8), tol=1e-3) -> CheckResult:
    worst = 0.0
    for n in sizes:
        ep = effective_params(ProtocolParams(n=n))
        _, u = global_pulse_propagator(ep, 2 * np.pi)
        w = w_state(n)[:n].real
        worst = max(worst, np.abs(u[:n, :n] - (np.eye(n) - 2 * np.outer(w, w))).max())
    return CheckResult("Householder reflection", worst <= tol, worst, tol,
                       f"max |U_reg - (1 - 2|W><W|)| = {worst:.2e}")


@_timed
def check_w_preparation(n=8, tol=0.999) -> CheckResult:
    tr = run_protocol(ProtocolParams(n=n), "effective", marked=1, iterations=0)
    overlap = abs(np.vdot(w_state(n), tr.final_state)) ** 2
    return CheckResult("W-state preparation", overlap >= tol, overlap, tol,
                       f"|<W|psi>|^2 = {overlap:.6f}")


@_timed
def check_propagator_equivalence(sizes=(2, 4, 8), areas=(np.pi, 2 * np.pi), n_states=20,
                                 disorder=0.2, seed=7, tol=1e-5) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in sizes:
        ep = effective_params(ProtocolParams(n=n))
        for area in areas:
            for spread in (0.0, disorder):
                g = ep.g_eff * (1 + rng.uniform(-spread, spread, n))
                pulse = pulse_for_area(SECH, area, 1.0)
                model = EffectiveModel(ep, [pulse], couplings=g)
                ab = two_level_ab(pulse, collective_coupling(g) / ep.chi)
                u = analytic_propagator(g, ab)
                psi = rng.normal(size=(n + 1, n_states)) + 1j * rng.normal(size=(n + 1, n_states))
                psi /= np.linalg.norm(psi, axis=0)
                lo, hi = pulse.support
                num = evolve(model.hamiltonian, psi, lo, hi, max_step=0.5).final
                worst = max(worst, np.abs(num - u @ psi).max())
    return CheckResult("analytic propagator oracle", worst <= tol, worst, tol,
                       f"max elementwise deviation = {worst:.2e}")


@_timed
def check_unitarity(n=8, tol=1e-8) -> CheckResult:
    tr = run_protocol(ProtocolParams(n=n), "effective", marked=1, iterations=3,
                      oracle="pulsed")
    dev = float(np.abs(tr.norm - 1).max())
    return CheckResult("unitarity", dev <= tol, dev, tol, f"max |norm - 1| = {dev:.2e}")


@_timed
def check_ab_anchors(tol=1e-3) -> CheckResult:
    # the +-10 width truncation removes ~1.8e-4 of area, so |a(pi)| ~ 9e-5
    a_pi = two_level_ab(pulse_for_area(SECH, np.pi, 1.0)).a
    a_2pi = two_level_ab(pulse_for_area(SECH, 2 * np.pi, 1.0)).a
    dev = max(abs(a_pi), abs(a_2pi + 1))
    return CheckResult("a(pi) = 0, a(2 pi) = -1", dev <= tol, dev, tol,
                       f"|a(pi)| = {abs(a_pi):.1e}, |a(2pi) + 1| = {abs(a_2pi + 1):.1e}")


ALL_CHECKS = (
    check_closed_form_grover,
    check_householder,
    check_w_preparation,
    check_propagator_equivalence,
    check_unitarity,
    check_ab_anchors,
)


def run_checks(checks=ALL_CHECKS) -> list[CheckResult]:
    return [c() for c in checks]
