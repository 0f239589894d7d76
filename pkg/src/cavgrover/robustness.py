"""Monte Carlo robustness of the search against static disorder.

Every trial draws zero-mean relative deviations eps_i for the per-qubit
couplings g'_i = g' (1 + eps_i) and, optionally, per-qubit detuning offsets
from cavity-frequency fluctuations.  Pulses stay calibrated for the nominal
couplings, so disorder acts as a calibration error.

Draws for a trial depend only on (seed, trial) and are scaled by the
disorder level, so all levels of a sweep share the same underlying random
numbers and level 0 reproduces the clean protocol exactly.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .dynamics import ProtocolParams, effective_params
from .exceptions import IntegrationError, InvalidParameterError
from .grover import run_protocol

log = logging.getLogger(__name__)

DISTRIBUTIONS = ("uniform", "gaussian")
TARGETS = ("coupling", "cavity_frequency")


@dataclass(frozen=True)
class DisorderSpec:
    """How disorder is drawn.

    ``relative_sigma`` is the mean absolute relative deviation E|eps|.
    Uniform draws use half-width 2 * sigma, gaussian draws use standard
    deviation sigma * sqrt(pi / 2).
    """

    relative_sigma: float = 0.0
    distribution: str = "uniform"
    targets: tuple = ("coupling",)
    trials: int = 100
    seed: int = 1234

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        if not self.relative_sigma >= 0:
            raise InvalidParameterError(f"relative_sigma must be >= 0, got {self.relative_sigma!r}")
        if self.distribution not in DISTRIBUTIONS:
            raise InvalidParameterError(
                f"distribution must be one of {DISTRIBUTIONS}, got {self.distribution!r}"
            )
        bad = set(self.targets) - set(TARGETS)
        if bad:
            raise InvalidParameterError(f"unknown disorder targets {sorted(bad)}; allowed {TARGETS}")
        if int(self.trials) != self.trials or self.trials < 1:
            raise InvalidParameterError(f"trials must be a positive integer, got {self.trials!r}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise InvalidParameterError(f"seed must be a 64-bit non-negative integer, got {self.seed!r}")

    def at_level(self, level: float) -> "DisorderSpec":
        return DisorderSpec(level, self.distribution, self.targets, self.trials, self.seed)


@dataclass(frozen=True)
class Disorder:
    couplings: np.ndarray  # per-qubit g'_i
    offsets: np.ndarray    # per-qubit detuning offsets on the register diagonal
    eps_coupling: np.ndarray
    eps_cavity: np.ndarray


def unit_deviates(distribution: str, rng: np.random.Generator, size: int) -> np.ndarray:
    """Zero-mean draws with E|x| = 1."""
    if distribution == "uniform":
        return rng.uniform(-2.0, 2.0, size)
    return rng.normal(0.0, np.sqrt(np.pi / 2), size)


def sample_disorder(spec: DisorderSpec, ep, trial: int) -> Disorder:
    """Per-qubit couplings and detuning offsets for one trial.

    Cavity-frequency fluctuations are expressed as relative changes of the
    Bloch-mode Stark shift delta and enter as offsets on |psi_k;0>.
    """
    n = ep.n
    rng = np.random.default_rng([int(spec.seed), int(trial)])
    # both streams are always drawn so enabling one target never changes the other
    u_c = unit_deviates(spec.distribution, rng, n)
    u_w = unit_deviates(spec.distribution, rng, n)
    s = spec.relative_sigma
    eps_c = s * u_c if "coupling" in spec.targets else np.zeros(n)
    eps_w = s * u_w if "cavity_frequency" in spec.targets else np.zeros(n)
    couplings = ep.g_eff * (1.0 + eps_c)
    offsets = -ep.delta_small * eps_w
    return Disorder(couplings, offsets, eps_c, eps_w)


def run_trial(params: ProtocolParams, spec: DisorderSpec, level: float, trial: int,
              marked: int = 1, **protocol) -> float:
    """Time-maximum of the marked-state population for one disorder draw."""
    ep = effective_params(params)
    d = sample_disorder(spec.at_level(level), ep, trial)
    offsets = d.offsets if d.offsets.any() else None
    trace = run_protocol(params, "effective", marked, couplings=d.couplings, offsets=offsets,
                         **protocol)
    return float(trace.p_marked.max())


@dataclass
class LevelSummary:
    level: float
    mean: float
    std: float
    min: float
    max: float
    n_trials: int
    n_failed: int
    values: list = field(default_factory=list, repr=False)


@dataclass
class SweepSummary:
    levels: list
    per_level: list  # LevelSummary, same order as ``levels``
    spec: DisorderSpec
    marked: int

    @property
    def means(self) -> np.ndarray:
        return np.array([s.mean for s in self.per_level])

    @property
    def stds(self) -> np.ndarray:
        return np.array([s.std for s in self.per_level])

    def level(self, value) -> LevelSummary:
        for s in self.per_level:
            if s.level == value:
                return s
        raise KeyError(value)

    def to_dict(self) -> dict:
        return {
            "marked": self.marked,
            "disorder": asdict(self.spec) | {"targets": list(self.spec.targets)},
            "levels": [asdict(s) for s in self.per_level],
        }


def _safe_trial(args):
    params, spec, level, trial, marked, protocol = args
    try:
        return run_trial(params, spec, level, trial, marked, **protocol)
    except IntegrationError as exc:
        log.warning("trial %d at level %g failed: %s", trial, level, exc)
        return float("nan")


def run_sweep(params: ProtocolParams, spec: DisorderSpec, levels, marked: int = 1,
              threads: int = 1, **protocol) -> SweepSummary:
    """Aggregate ``spec.trials`` trials at each disorder level.

    Trials run in a process pool when ``threads`` > 1; results are reduced in
    (level, trial) order so the summary does not depend on scheduling.
    Failed trials are excluded and counted.
    """
    levels = [float(x) for x in levels]
    if not levels:
        raise InvalidParameterError("at least one disorder level is required")
    jobs = [(params, spec, lv, t, marked, protocol) for lv in levels for t in range(spec.trials)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(_safe_trial, jobs, chunksize=8))
    else:
        values = [_safe_trial(j) for j in jobs]
    per_level = []
    for i, lv in enumerate(levels):
        v = np.array(values[i * spec.trials:(i + 1) * spec.trials])
        ok = v[np.isfinite(v)]
        if ok.size:
            stats = dict(mean=float(ok.mean()), std=float(ok.std()), min=float(ok.min()),
                         max=float(ok.max()))
        else:
            stats = dict(mean=float("nan"), std=float("nan"), min=float("nan"), max=float("nan"))
        per_level.append(LevelSummary(lv, n_trials=int(v.size), n_failed=int(v.size - ok.size),
                                      values=v.tolist(), **stats))
        log.info("level %.3g: mean %.4f std %.4f", lv, per_level[-1].mean, per_level[-1].std)
    return SweepSummary(levels, per_level, spec, marked)
