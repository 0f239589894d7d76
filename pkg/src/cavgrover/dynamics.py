"""Hamiltonians, Schroedinger-equation integration and the analytic propagator.

Two models share one interface (``hamiltonian(t)``, ``decay``, ``active_pulses``,
``idle_propagator``) so the schedule walker in :func:`evolve_schedule` can run
either of them:

* :class:`EffectiveModel` -- the (N + 1)-level collective-state Hamiltonian
  obtained after adiabatic elimination of the excited atomic states.
* :class:`FullModel` -- the 3N-level single-excitation sector of the
  cavity-array Hamiltonian in the interaction picture, with the
  ``exp(-i Delta t)`` phases kept on the couplings.

Units: hbar = 1; any consistent frequency unit (times are its inverse).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .exceptions import (
    DegenerateCouplingError,
    IntegrationError,
    InvalidParameterError,
    SingularParameterError,
)
from .pulses import Pulse
from .statespace import (
    PERIODIC,
    bloch_modes,
    build_full_basis,
    check_boundary,
    check_size,
    hopping_matrix,
)

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12


# ---------------------------------------------------------------------------
# parameters

@dataclass(frozen=True)
class ProtocolParams:
    """Physical inputs of the cavity array.

    ``omega_c`` is bookkeeping only; all dynamics run in a frame where the
    cavity free energy is removed.  ``kappa`` is a phenomenological decay
    rate of photonic amplitudes.
    """

    n: int = 8
    g: float = 105.0
    omega: float = 105.0
    delta: float = 1050.0
    J: float = 1.0
    omega_c: float = 0.0
    boundary: str = PERIODIC
    kappa: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "n", check_size(self.n))
        check_boundary(self.boundary)
        for name in ("g", "omega", "delta", "J", "omega_c", "kappa"):
            value = getattr(self, name)
            if not np.isfinite(value):
                raise InvalidParameterError(f"{name} must be finite, got {value!r}")
        if self.kappa < 0:
            raise InvalidParameterError(f"kappa must be >= 0, got {self.kappa!r}")
        _check_poles(self.delta, self.J)

    def regime_ok(self, j_ratio: float = 0.1, g_ratio: float = 0.2) -> bool:
        """True when J <= j_ratio * Omega and g <= g_ratio * Delta."""
        return abs(self.J) <= j_ratio * abs(self.omega) and abs(self.g) <= g_ratio * abs(self.delta)

    def replace(self, **changes) -> "ProtocolParams":
        return replace(self, **changes)


def _check_poles(delta, J):
    scale = max(abs(delta), abs(J), 1.0)
    if abs(delta) <= 1e-12 * scale:
        raise SingularParameterError("delta must be nonzero (effective couplings diverge)")
    if abs(delta - 2 * J) <= 1e-12 * scale:
        raise SingularParameterError(
            f"delta = 2J = {delta!r} is a pole of the Bloch-mode Stark shift"
        )


@dataclass(frozen=True)
class EffectiveParams:
    n: int
    g_eff: float        # g' = -g Omega / (2 Delta)
    delta_prime: float  # Delta' = -Omega^2 / (4 Delta)
    delta_small: float  # delta = -g^2 / (Delta - 2J)
    chi: float          # sqrt(N) g'

    @property
    def detuning(self) -> float:
        """Delta' - delta, the photonic-state detuning of the collective model."""
        return self.delta_prime - self.delta_small

    @property
    def pulse_time(self) -> float:
        """T = pi / |chi|, the natural protocol time unit."""
        if self.chi == 0:
            raise DegenerateCouplingError("chi = 0: no collective coupling, T undefined")
        return float(np.pi / abs(self.chi))


def effective_params(p: ProtocolParams) -> EffectiveParams:
    _check_poles(p.delta, p.J)
    g_eff = -p.g * p.omega / (2 * p.delta)
    return EffectiveParams(
        n=p.n,
        g_eff=g_eff,
        delta_prime=-p.omega**2 / (4 * p.delta),
        delta_small=-p.g**2 / (p.delta - 2 * p.J),
        chi=np.sqrt(p.n) * g_eff,
    )


def collective_coupling(g_eff) -> float:
    """sqrt(sum |g'_i|^2), signed like sum(g'_i) so uniform negative g' gives sqrt(N) g'."""
    g = np.asarray(g_eff)
    norm = float(np.sqrt(np.sum(np.abs(g) ** 2)))
    return -norm if np.real(np.sum(g)) < 0 else norm


# ---------------------------------------------------------------------------
# Hamiltonian builders

def build_effective_hamiltonian(couplings, detuning=0.0, offsets=None) -> np.ndarray:
    """Collective-state Hamiltonian in the register basis.

    ``couplings[k]`` links |psi_{k+1};0> with |psi_0;1>; ``detuning`` sits on
    |psi_0;1>; optional ``offsets`` shift the register diagonal.
    """
    c = np.atleast_1d(np.asarray(couplings, dtype=complex))
    if c.ndim != 1:
        raise InvalidParameterError(f"couplings must be a vector, got shape {c.shape}")
    n = c.size
    h = np.zeros((n + 1, n + 1), dtype=complex)
    h[:n, n] = c
    h[n, :n] = c.conj()
    h[n, n] = detuning
    if offsets is not None:
        offsets = np.asarray(offsets, dtype=float)
        if offsets.shape != (n,):
            raise InvalidParameterError(
                f"offsets must have shape ({n},), got {offsets.shape}"
            )
        h[np.arange(n), np.arange(n)] += offsets
    return h


def build_full_hamiltonian(p: ProtocolParams, t: float, drives=None, phases=None,
                           offsets=None) -> np.ndarray:
    """Single-excitation Hamiltonian of the cavity array at time ``t``.

    ``drives`` holds the per-site laser Rabi frequencies Omega_k(t) (defaults
    to the constant ``p.omega``); ``phases`` adds an extra laser phase
    phi_k(t) on top of the ``exp(-i Delta t)`` factor.
    """
    n = p.n
    basis = build_full_basis(n)
    ph, ex, one = basis.photon_indices, basis.excited_indices, basis.one_indices
    drives = np.broadcast_to(p.omega if drives is None else drives, (n,)).astype(float)
    phases = np.zeros(n) if phases is None else np.broadcast_to(phases, (n,))
    h = np.zeros((3 * n, 3 * n), dtype=complex)
    h[np.ix_(ph, ph)] = hopping_matrix(n, p.J, p.boundary)
    rot = np.exp(-1j * p.delta * t)
    h[ph, ex] = p.g * rot
    h[ex, ph] = np.conj(h[ph, ex])
    h[one, ex] = 0.5 * drives * rot * np.exp(-1j * np.asarray(phases))
    h[ex, one] = np.conj(h[one, ex])
    if offsets is not None:
        h[one, one] += offsets
    return h


# ---------------------------------------------------------------------------
# integration

@dataclass
class EvolutionResult:
    t: np.ndarray
    states: np.ndarray   # states[i] is the state at t[i]
    final: np.ndarray
    nfev: int = 0


def evolve(hamiltonian, psi0, t0, t1, *, decay=None, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL,
           t_eval=None, max_step=np.inf, method="DOP853") -> EvolutionResult:
    """Integrate i d(psi)/dt = (H(t) - i decay/2) psi from t0 to t1.

    ``hamiltonian`` is a callable returning a square matrix.  ``psi0`` may be a
    vector or a matrix (each column evolved, e.g. the identity for a
    propagator).  ``decay`` is an optional vector of amplitude decay rates.
    No renormalisation is applied.
    """
    psi0 = np.asarray(psi0, dtype=complex)
    if t1 < t0:
        raise InvalidParameterError(f"t1 = {t1} precedes t0 = {t0}")
    requested = np.array([] if t_eval is None else np.atleast_1d(t_eval), dtype=float)
    if t1 == t0:
        states = np.repeat(psi0[None], len(requested), axis=0)
        return EvolutionResult(requested, states, psi0.copy())
    if requested.size and (requested.min() < t0 or requested.max() > t1):
        raise InvalidParameterError("t_eval points must lie inside [t0, t1]")

    shape = psi0.shape
    damp = None if decay is None else -0.5j * np.asarray(decay, dtype=float)

    def rhs(t, y):
        h = hamiltonian(t)
        if damp is not None:
            h = h + np.diag(damp)
        return (-1j * (h @ y.reshape(shape))).ravel()

    grid = np.unique(np.append(requested, t1))
    sol = solve_ivp(rhs, (t0, t1), psi0.ravel(), method=method, t_eval=grid,
                    rtol=rtol, atol=atol, max_step=max_step)
    if sol.status < 0:
        t_fail = sol.t[-1] if sol.t.size else t0
        raise IntegrationError(
            f"integration failed at t={t_fail}: {sol.message} (rtol={rtol}, atol={atol})",
            t_failed=t_fail, status=sol.status,
        )
    ys = sol.y.T.reshape((-1,) + shape)
    idx = np.searchsorted(grid, requested)
    return EvolutionResult(requested, ys[idx], ys[-1].copy(), sol.nfev)


def propagator(hamiltonian, dim, t0, t1, **kwargs) -> np.ndarray:
    """Numerical propagator U(t1, t0) obtained by evolving the identity."""
    return evolve(hamiltonian, np.eye(dim, dtype=complex), t0, t1, **kwargs).final


# ---------------------------------------------------------------------------
# analytic propagator (Morris-Shore bright/dark reduction)

@dataclass(frozen=True)
class PropagatorAB:
    """Cayley-Klein parameters of the bright-state two-level propagator.

    The bright/photon block is [[a, b], [-conj(b) * phase, conj(a) * phase]],
    with ``phase`` the block determinant; ``phase`` = 1 for resonant pulses.
    """

    a: complex
    b: complex
    phase: complex = 1.0

    def __post_init__(self):
        norm = abs(self.a) ** 2 + abs(self.b) ** 2
        if abs(norm - 1) > 1e-8:
            raise InvalidParameterError(f"|a|^2 + |b|^2 = {norm}, expected 1")

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b],
                         [-np.conj(self.b) * self.phase, np.conj(self.a) * self.phase]])


def two_level_ab(pulse: Pulse, chi_scale: float = 1.0, detuning=None, *,
                 rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL) -> PropagatorAB:
    """Integrate the bright-state/photon problem over the pulse support.

    The coupling element is ``chi_scale * envelope(t) / 2``; ``chi_scale`` is
    the ratio of the actual collective coupling to the one the pulse was
    calibrated for (1 for a perfectly calibrated pulse).
    """
    det = pulse.detuning if detuning is None else detuning
    lo, hi = pulse.support
    if pulse.shape == "off" or pulse.peak == 0 or chi_scale == 0:
        if det == 0:
            return PropagatorAB(1.0 + 0j, 0j, 1.0 + 0j)
        phase = np.exp(-1j * det * (hi - lo))
        return PropagatorAB(1.0 + 0j, 0j, phase)

    def h(t):
        c = 0.5 * chi_scale * pulse.value(t)
        return np.array([[0.0, c], [c, det]], dtype=complex)

    u = propagator(h, 2, lo, hi, rtol=rtol, atol=atol, max_step=pulse.width)
    return PropagatorAB(complex(u[0, 0]), complex(u[0, 1]), complex(np.linalg.det(u)))


def analytic_propagator(g_eff, ab: PropagatorAB, n: int | None = None) -> np.ndarray:
    """(N + 1) x (N + 1) propagator of a global pulse from its (a, b) pair.

    Register block: delta_ij + (a - 1) g'_i g'_j / chi^2; transfer column
    b g'_i / chi; photonic diagonal conj(a) (times the block phase).
    ``g_eff`` is a scalar (needs ``n``) or the per-qubit couplings, with
    chi^2 = sum g'_i^2.
    """
    g = np.asarray(g_eff, dtype=complex)
    if g.ndim == 0:
        g = np.full(check_size(n), g)
    chi = collective_coupling(g)
    if chi == 0:
        raise DegenerateCouplingError("collective coupling chi is zero")
    m = g.size
    bright = g / chi
    u = np.eye(m + 1, dtype=complex)
    u[:m, :m] += (ab.a - 1) * np.outer(bright, bright.conj())
    u[m, m] = np.conj(ab.a) * ab.phase
    u[:m, m] = ab.b * bright
    u[m, :m] = -np.conj(ab.b) * ab.phase * bright.conj()
    return u


# ---------------------------------------------------------------------------
# models

def _merge_supports(pulses, t_max):
    spans = sorted((max(0.0, p.support[0]), min(t_max, p.support[1])) for p in pulses)
    merged = []
    for lo, hi in spans:
        if hi <= lo:
            continue
        if merged and lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return merged


def _pulse_weights(pulse, couplings, g_nominal, chi_nominal):
    """Per-qubit coupling element per unit of (envelope / 2)."""
    if pulse.is_global:
        return couplings / chi_nominal
    w = np.zeros_like(couplings)
    k = pulse.target - 1
    if k >= couplings.size:
        raise InvalidParameterError(
            f"local pulse targets qubit {pulse.target} but N = {couplings.size}"
        )
    w[k] = couplings[k] / g_nominal
    return w


class EffectiveModel:
    """Pulsed collective-state model on the register basis.

    ``couplings`` are the per-qubit g'_i (default: uniform nominal g').
    Pulses are calibrated for the nominal couplings: a global pulse of
    envelope E(t) gives qubit i the element (E/2) g'_i / chi_nominal, a local
    pulse on qubit k gives (E/2) g'_k / g'_nominal.  With ``resonant`` the
    photonic diagonal carries only each active pulse's detuning offset
    (two-photon resonance Delta' = delta is assumed tuned); otherwise the
    static Delta' - delta is added as well.
    """

    def __init__(self, ep: EffectiveParams, pulses=(), couplings=None, offsets=None,
                 kappa: float = 0.0, resonant: bool = True):
        if ep.g_eff == 0:
            raise DegenerateCouplingError("g' = 0: pulses cannot be calibrated")
        self.ep = ep
        self.n = ep.n
        self.dim = ep.n + 1
        self.couplings = (np.full(self.n, ep.g_eff, dtype=float) if couplings is None
                          else np.asarray(couplings, dtype=float).copy())
        if self.couplings.shape != (self.n,):
            raise InvalidParameterError(f"couplings must have shape ({self.n},)")
        self.offsets = np.zeros(self.n) if offsets is None else np.asarray(offsets, dtype=float)
        self.kappa = float(kappa)
        self.base_detuning = 0.0 if resonant else ep.detuning
        self.active_pulses = tuple(pulses)
        self._weights = [_pulse_weights(p, self.couplings, ep.g_eff, ep.chi)
                         for p in self.active_pulses]
        self.decay = None
        if self.kappa > 0:
            self.decay = np.zeros(self.dim)
            self.decay[self.n] = self.kappa
        self._h0 = build_effective_hamiltonian(np.zeros(self.n), 0.0, self.offsets)

    @property
    def photon_indices(self):
        return np.array([self.n])

    def marked_index(self, marked: int) -> int:
        return marked - 1

    def couplings_at(self, t) -> np.ndarray:
        c = np.zeros(self.n)
        for p, w in zip(self.active_pulses, self._weights):
            e = p.value(t)
            if e:
                c += 0.5 * e * w
        return c

    def detuning_at(self, t) -> float:
        d = self.base_detuning
        for p in self.active_pulses:
            lo, hi = p.support
            if lo <= t <= hi:
                d += p.detuning
        return d

    def hamiltonian(self, t) -> np.ndarray:
        h = self._h0.copy()
        c = self.couplings_at(t)
        n = self.n
        h[:n, n] = c
        h[n, :n] = c
        h[n, n] = self.detuning_at(t)
        return h

    def _idle_generator(self):
        h = np.diag(np.append(self.offsets, self.base_detuning)).astype(complex)
        if self.decay is not None:
            h -= 0.5j * np.diag(self.decay)
        return h

    def idle_propagator(self, psi, t0, times):
        """States at ``times`` (>= t0) evolving from psi(t0) with all pulses off."""
        diag = np.diag(self._idle_generator())
        return np.array([np.exp(-1j * diag * (t - t0)) * psi for t in times])

    def populations(self, psi) -> np.ndarray:
        return np.abs(psi) ** 2


class FullModel:
    """Pulsed cavity-array model on the 3N single-excitation basis.

    Pulses describe the same effective couplings as in :class:`EffectiveModel`;
    they are mapped onto physical laser drives so that the adiabatically
    eliminated coupling between atom k's |1> and the symmetric Bloch mode
    equals the effective element.  The laser phase is chosen to hold the
    two-photon resonance: a constant detuning cancels the Bloch-mode energy
    and its Stark shift, and with ``stark_compensation`` a chirp follows the
    drive-induced shift -Omega_k(t)^2 / (4 Delta).
    """

    def __init__(self, params: ProtocolParams, pulses=(), couplings=None, offsets=None,
                 stark_compensation: bool = True):
        if params.g == 0:
            raise DegenerateCouplingError("g = 0: the register does not couple to the cavities")
        self.params = params
        self.ep = effective_params(params)
        if self.ep.g_eff == 0:
            raise DegenerateCouplingError("g' = 0: pulses cannot be calibrated")
        n = params.n
        self.n = n
        self.dim = 3 * n
        self.basis = build_full_basis(n)
        modes = bloch_modes(n, params.J, params.boundary)
        m = modes.symmetric_mode_index()
        profile = modes.profiles[:, m]
        if np.allclose(profile.imag, 0):
            profile = profile.real
        self.mode_profile = profile
        self.mode_energy = float(modes.energies[m])
        self.mode_shift = -params.g**2 / (params.delta - self.mode_energy)
        self.couplings = (np.full(n, self.ep.g_eff) if couplings is None
                          else np.asarray(couplings, dtype=float).copy())
        self.offsets = np.zeros(n) if offsets is None else np.asarray(offsets, dtype=float)
        self.stark_compensation = stark_compensation
        self.active_pulses = tuple(pulses)
        # Omega_k(t) = envelope(t) * scale[k]
        to_drive = -2 * params.delta / (params.g * profile)
        self._scales = [0.5 * to_drive * _pulse_weights(p, self.couplings, self.ep.g_eff, self.ep.chi)
                        for p in self.active_pulses]
        self._static = build_full_hamiltonian(params, 0.0, drives=np.zeros(n), offsets=self.offsets)
        self.decay = None
        if params.kappa > 0:
            self.decay = np.zeros(self.dim)
            self.decay[self.basis.photon_indices] = params.kappa
        self._ph = self.basis.photon_indices
        self._ex = self.basis.excited_indices
        self._one = self.basis.one_indices

    @property
    def photon_indices(self):
        return self._ph

    def marked_index(self, marked: int) -> int:
        return self.basis.one_index(marked)

    def drives_at(self, t) -> np.ndarray:
        d = np.zeros(self.n, dtype=complex)
        for p, s in zip(self.active_pulses, self._scales):
            e = p.value(t)
            if e:
                d += e * s
        return d

    def laser_phases(self, t) -> np.ndarray:
        """Extra laser phase phi_k(t) keeping the Raman transition resonant."""
        phi = np.full(self.n, -(self.mode_energy + self.mode_shift) * t)
        for p, s in zip(self.active_pulses, self._scales):
            lo, hi = p.support
            if t <= lo:
                continue
            phi += p.detuning * (min(t, hi) - lo)
            if self.stark_compensation:
                phi -= np.abs(s) ** 2 * p.energy_integral(t) / (4 * self.params.delta)
        return phi

    def initial_photon_state(self) -> np.ndarray:
        psi = np.zeros(self.dim, dtype=complex)
        psi[self._ph] = self.mode_profile
        return psi

    def hamiltonian(self, t) -> np.ndarray:
        h = self._static.copy()
        rot = np.exp(-1j * self.params.delta * t)
        h[self._ph, self._ex] = self.params.g * rot
        h[self._ex, self._ph] = np.conj(h[self._ph, self._ex])
        drives = self.drives_at(t)
        if drives.any():
            drive = 0.5 * drives * rot * np.exp(-1j * self.laser_phases(t))
            h[self._one, self._ex] = drive
            h[self._ex, self._one] = np.conj(drive)
        return h

    def _idle_generator(self):
        # frame where the excited amplitudes are multiplied by exp(-i Delta t)
        h = self._static.copy()
        h[self._ph, self._ex] = self.params.g
        h[self._ex, self._ph] = self.params.g
        h[self._ex, self._ex] = self.params.delta
        h[self._one, self._one] = self.offsets
        if self.decay is not None:
            h -= 0.5j * np.diag(self.decay)
        return h

    def _frame(self, t):
        f = np.ones(self.dim, dtype=complex)
        f[self._ex] = np.exp(1j * self.params.delta * t)
        return f

    def idle_propagator(self, psi, t0, times):
        gen = self._idle_generator()
        rot0 = np.conj(self._frame(t0)) * psi
        return np.array([self._frame(t) * (expm(-1j * gen * (t - t0)) @ rot0) for t in times])

    def populations(self, psi) -> np.ndarray:
        """Populations folded onto the register labels, plus total |e> population.

        Returns N + 2 numbers: each |1_k>, the summed photonic population, and
        the summed excited-state population.
        """
        p = np.abs(psi) ** 2
        return np.concatenate([p[self._one], [p[self._ph].sum(), p[self._ex].sum()]])


# ---------------------------------------------------------------------------
# schedule walker

@dataclass
class Checkpoint:
    label: str
    time: float
    state: np.ndarray


@dataclass
class ScheduleResult:
    times: np.ndarray
    states: np.ndarray
    final: np.ndarray
    checkpoints: list = field(default_factory=list)


def evolve_schedule(model, psi0, horizon, sample_times, kicks=(), *, rtol=DEFAULT_RTOL,
                    atol=DEFAULT_ATOL) -> ScheduleResult:
    """Run ``model`` from t = 0 to ``horizon``.

    Intervals where some active pulse is on are integrated numerically;
    pulse-free gaps use the model's exact idle propagator.  ``kicks`` are
    ``(time, function, label)`` instantaneous operations applied to the state
    at the given times (e.g. an ideal oracle).  A checkpoint is stored at the
    end of every active pulse and after every kick; samples coinciding with a
    kick time see the post-kick state.
    """
    psi = np.asarray(psi0, dtype=complex).copy()
    sample_times = np.asarray(sample_times, dtype=float)
    kicks = sorted(kicks, key=lambda k: k[0])
    active = _merge_supports(model.active_pulses, horizon)
    pulse_ends = sorted((min(p.support[1], horizon), p.label) for p in model.active_pulses)

    cuts = {0.0, float(horizon)}
    for lo, hi in active:
        cuts.update((lo, hi))
    cuts.update(float(k[0]) for k in kicks if 0 <= k[0] <= horizon)
    cuts = sorted(cuts)

    def is_active(a, b):
        mid = 0.5 * (a + b)
        return any(lo <= mid <= hi for lo, hi in active)

    out = np.empty((len(sample_times), psi.size), dtype=complex)
    filled = np.zeros(len(sample_times), dtype=bool)
    checkpoints = []
    kick_i = 0
    end_i = 0
    min_width = min((p.width for p in model.active_pulses), default=np.inf)

    def apply_events(t):
        nonlocal psi, kick_i, end_i
        while end_i < len(pulse_ends) and pulse_ends[end_i][0] <= t:
            checkpoints.append(Checkpoint(pulse_ends[end_i][1], pulse_ends[end_i][0], psi.copy()))
            end_i += 1
        while kick_i < len(kicks) and kicks[kick_i][0] <= t:
            kt, fn, label = kicks[kick_i]
            psi = np.asarray(fn(psi), dtype=complex)
            checkpoints.append(Checkpoint(label, kt, psi.copy()))
            kick_i += 1

    apply_events(0.0)
    for a, b in zip(cuts[:-1], cuts[1:]):
        sel = (sample_times >= a) & (sample_times < b) & ~filled
        ts = sample_times[sel]
        if is_active(a, b):
            res = evolve(model.hamiltonian, psi, a, b, decay=model.decay, rtol=rtol,
                         atol=atol, t_eval=ts, max_step=min_width / 2)
            out[sel] = res.states
            psi = res.final
        else:
            if ts.size:
                out[sel] = model.idle_propagator(psi, a, ts)
            psi = model.idle_propagator(psi, a, [b])[0]
        filled |= sel
        apply_events(b)
    rest = ~filled
    out[rest] = psi
    return ScheduleResult(sample_times, out, psi, checkpoints)
