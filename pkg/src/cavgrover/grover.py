"""Grover search on the cavity array at three fidelity tiers.

``ideal``      exact gate algebra: oracle phase flip and the reflection
               1 - 2|W><W|, starting from |W>.
``effective``  pulsed dynamics of the collective-state model, starting from
               one photon in the common mode.
``full``       pulsed dynamics of the 3N-level cavity-array model.

Event grid (times in units of T = pi / |chi|): initialisation pi pulse
first, then for iteration m = 0, 1, ... a local 2 pi oracle pulse at
15 + 60 m and a global 2 pi reflection pulse at 45 + 60 m.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    DEFAULT_ATOL,
    DEFAULT_RTOL,
    Checkpoint,
    EffectiveModel,
    EffectiveParams,
    FullModel,
    ProtocolParams,
    effective_params,
    evolve,
    evolve_schedule,
)
from .exceptions import InvalidParameterError, RegimeError, RegimeWarning
from .pulses import DEFAULT_WINDOW, SECH, Pulse, Schedule, pulse_for_area
from .statespace import check_size, photon_state, w_state

TIERS = ("ideal", "effective", "full")
ORACLE_MODES = ("ideal", "pulsed")


def optimal_iterations(n: int) -> int:
    """floor(pi / (4 arcsin(1 / sqrt(N)))); zero for a single qubit."""
    n = check_size(n)
    if n == 1:
        return 0
    return int(np.floor(np.pi / (4 * np.arcsin(1 / np.sqrt(n))) + 1e-12))


def success_probability(n: int, k: int) -> float:
    """sin^2((2k + 1) theta) with theta = arcsin(1 / sqrt(N))."""
    theta = np.arcsin(1 / np.sqrt(check_size(n)))
    return float(np.sin((2 * k + 1) * theta) ** 2)


def _check_marked(marked, n):
    if isinstance(marked, bool) or int(marked) != marked or not 1 <= marked <= n:
        raise InvalidParameterError(f"marked qubit must lie in [1, {n}], got {marked!r}")
    return int(marked)


def oracle_ideal(psi, marked: int) -> np.ndarray:
    """Flip the sign of |psi_marked;0>."""
    psi = np.array(psi, dtype=complex)
    _check_marked(marked, psi.size - 1)
    psi[marked - 1] *= -1
    return psi


def reflection_ideal(psi) -> np.ndarray:
    """Apply 1 - 2|W><W| to the register block and negate the photonic amplitude."""
    psi = np.array(psi, dtype=complex)
    reg = psi[:-1]
    psi[:-1] = reg - 2 * reg.mean()
    psi[-1] *= -1
    return psi


def build_schedule(n: int, iterations: int, T: float, *, marked: int = 1,
                   pulse_width: float | None = None, window: float = DEFAULT_WINDOW,
                   init_center: float | None = None, first_oracle: float = 15.0,
                   reflection_delay: float = 30.0, period: float = 60.0,
                   sample_dt: float | None = None, detuning: float = 0.0) -> Schedule:
    """Pulse schedule of the search protocol.

    ``T`` is the time unit of the event grid; ``first_oracle``,
    ``reflection_delay`` and ``period`` are in units of T.  ``pulse_width``
    is the sech scale parameter (default T / 2, so each truncated pulse spans
    10 T and neighbouring windows never overlap).  The initialisation pulse
    is centred at ``init_center`` (default: one truncation half-window, so its
    support starts at t = 0).
    """
    n = check_size(n)
    marked = _check_marked(marked, n)
    if iterations < 0 or int(iterations) != iterations:
        raise InvalidParameterError(f"iterations must be a non-negative integer, got {iterations!r}")
    if not T > 0:
        raise InvalidParameterError(f"T must be > 0, got {T!r}")
    width = T / 2 if pulse_width is None else pulse_width
    t_init = window * width if init_center is None else init_center
    pulses = [pulse_for_area(SECH, np.pi, width, t_init, detuning, None, window, "init")]
    for m in range(int(iterations)):
        t_o = (first_oracle + period * m) * T
        t_r = t_o + reflection_delay * T
        pulses.append(pulse_for_area(SECH, 2 * np.pi, width, t_o, detuning, marked, window,
                                     f"oracle{m + 1}"))
        pulses.append(pulse_for_area(SECH, 2 * np.pi, width, t_r, detuning, None, window,
                                     f"reflection{m + 1}"))
    end = max(p.support[1] for p in pulses)
    if iterations:
        last = (first_oracle + reflection_delay + period * (iterations - 1)) * T
        horizon = max(last + (first_oracle * T), end)
    else:
        horizon = end
    return Schedule(tuple(pulses), horizon, T / 20 if sample_dt is None else sample_dt, T)


@dataclass
class FidelityTrace:
    tier: str
    marked: int
    times: np.ndarray
    p_marked: np.ndarray
    p_photon: np.ndarray
    norm: np.ndarray
    events: list = field(default_factory=list)  # (time, label)
    time_unit: float = 1.0
    populations: np.ndarray | None = None
    checkpoints: list = field(default_factory=list)
    final_state: np.ndarray | None = None

    def __len__(self):
        return len(self.times)

    def window_max(self, t0, t1) -> float:
        sel = (self.times >= t0) & (self.times <= t1)
        return float(self.p_marked[sel].max())

    def checkpoint(self, label):
        for c in self.checkpoints:
            if c.label == label:
                return c
        raise KeyError(label)


@dataclass(frozen=True)
class Measurement:
    max_p_marked: float
    time_of_max: float
    final_p_marked: float
    success: bool
    threshold: float


def measure(trace: FidelityTrace, threshold: float = 0.5) -> Measurement:
    if len(trace) == 0:
        raise InvalidParameterError("cannot measure an empty trace")
    i = int(np.argmax(trace.p_marked))
    best = float(trace.p_marked[i])
    return Measurement(best, float(trace.times[i]), float(trace.p_marked[-1]),
                       best >= threshold, threshold)


def _ideal_trace(n, marked, iterations, T):
    psi = w_state(n)
    times, states, events = [0.0], [psi], [(0.0, "init")]
    for m in range(iterations):
        t_o, t_r = (15 + 60 * m) * T, (45 + 60 * m) * T
        psi = oracle_ideal(psi, marked)
        times.append(t_o)
        states.append(psi)
        events.append((t_o, f"oracle{m + 1}"))
        psi = reflection_ideal(psi)
        times.append(t_r)
        states.append(psi)
        events.append((t_r, f"reflection{m + 1}"))
    states = np.array(states)
    pops = np.abs(states) ** 2
    return FidelityTrace(
        tier="ideal", marked=marked, times=np.array(times), p_marked=pops[:, marked - 1],
        p_photon=pops[:, n], norm=np.sqrt(pops.sum(axis=1)), events=events, time_unit=T,
        populations=pops,
        checkpoints=[Checkpoint(lbl, t, s) for (t, lbl), s in zip(events, states)],
        final_state=psi,
    )


def run_protocol(params: ProtocolParams, tier: str = "effective", marked: int = 1,
                 iterations="auto", *, schedule: Schedule | None = None, oracle: str = "ideal",
                 couplings=None, offsets=None, pulse_width: float | None = None,
                 sample_dt: float | None = None, resonant: bool = True,
                 stark_compensation: bool = True, allow_regime_violation: bool = False,
                 j_ratio: float = 0.1, g_ratio: float = 0.2,
                 rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL) -> FidelityTrace:
    """Run the search protocol and return the sampled marked-state fidelity.

    ``couplings`` / ``offsets`` override the per-qubit effective couplings
    and register detunings (disorder); pulses stay calibrated for the
    nominal parameters.  ``oracle="ideal"`` applies the phase flip
    instantaneously at each oracle pulse centre, ``"pulsed"`` drives the
    local 2 pi pulse through the dynamics.
    """
    if tier not in TIERS:
        raise InvalidParameterError(f"tier must be one of {TIERS}, got {tier!r}")
    if oracle not in ORACLE_MODES:
        raise InvalidParameterError(f"oracle must be one of {ORACLE_MODES}, got {oracle!r}")
    n = params.n
    marked = _check_marked(marked, n)
    ep = effective_params(params)
    if iterations == "auto":
        iterations = optimal_iterations(n)
    if tier == "ideal":
        T = ep.pulse_time if ep.chi != 0 else 1.0
        return _ideal_trace(n, marked, int(iterations), T)

    if tier == "full" and not params.regime_ok(j_ratio, g_ratio):
        msg = (f"J={params.J}, Omega={params.omega}, g={params.g}, Delta={params.delta} "
               f"violate J <= {j_ratio} Omega and g <= {g_ratio} Delta")
        if not allow_regime_violation:
            raise RegimeError(msg)
        warnings.warn(msg, RegimeWarning, stacklevel=2)

    T = ep.pulse_time
    if schedule is None:
        schedule = build_schedule(n, int(iterations), T, marked=marked,
                                  pulse_width=pulse_width, sample_dt=sample_dt)
    for p in schedule.pulses:
        if p.target is not None and p.target != marked:
            raise InvalidParameterError(
                f"oracle pulse addresses qubit {p.target}, marked qubit is {marked}"
            )
    is_oracle = [p.label.startswith("oracle") or p.target is not None for p in schedule.pulses]
    if oracle == "ideal":
        active = [p for p, o in zip(schedule.pulses, is_oracle) if not o]
    else:
        active = list(schedule.pulses)

    if tier == "effective":
        model = EffectiveModel(ep, active, couplings, offsets, params.kappa, resonant)
        psi0 = photon_state(n)
    else:
        model = FullModel(params, active, couplings, offsets, stark_compensation)
        psi0 = model.initial_photon_state()
    mark_idx = model.marked_index(marked)

    def flip(psi):
        psi = psi.copy()
        psi[mark_idx] *= -1
        return psi

    kicks = []
    if oracle == "ideal":
        kicks = [(p.center, flip, p.label) for p, o in zip(schedule.pulses, is_oracle) if o]
    res = evolve_schedule(model, psi0, schedule.horizon, schedule.sample_times(), kicks,
                          rtol=rtol, atol=atol)
    pops = np.abs(res.states) ** 2
    return FidelityTrace(
        tier=tier, marked=marked, times=res.times, p_marked=pops[:, mark_idx],
        p_photon=pops[:, model.photon_indices].sum(axis=1),
        norm=np.sqrt(pops.sum(axis=1)), events=schedule.events, time_unit=T,
        populations=pops, checkpoints=res.checkpoints, final_state=res.final,
    )


def oracle_pulsed(psi, marked: int, pulse: Pulse, ep=None, *, g_eff: float = 1.0,
                  rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL) -> np.ndarray:
    """Phase flip realised by a local pulse on the marked qubit.

    Evolves the collective-state model with the single local pulse over its
    support.  Only the ratio of the marked qubit's coupling to the nominal one
    matters, so ``ep`` may be omitted.
    """
    psi = np.asarray(psi, dtype=complex)
    n = psi.size - 1
    _check_marked(marked, n)
    if pulse.target != marked:
        raise InvalidParameterError(
            f"oracle pulse must address the marked qubit {marked}, got {pulse.addressing}"
        )
    if ep is None:
        ep = EffectiveParams(n, g_eff, 0.0, 0.0, np.sqrt(n) * g_eff)
    if pulse.shape == "off" or pulse.peak == 0:
        return psi.copy()
    model = EffectiveModel(ep, [pulse])
    lo, hi = pulse.support
    return evolve(model.hamiltonian, psi, lo, hi, rtol=rtol, atol=atol,
                  max_step=pulse.width / 2).final
