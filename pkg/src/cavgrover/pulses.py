"""Laser pulse envelopes, areas and schedules.

The envelope of a pulse is a Rabi frequency: a resonant two-level system
driven by H = (envelope / 2) sigma_x rotates by the pulse area
``integral(envelope dt)``.  For a global pulse the envelope is the collective
Rabi frequency of the bright state (each of N equally coupled qubits sees
area / sqrt(N)); for a local pulse it is the Rabi frequency of the
addressed qubit alone.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import InvalidParameterError

SECH = "sech"
SQUARE = "square"
OFF = "off"
SHAPES = (SECH, SQUARE, OFF)

DEFAULT_WINDOW = 10.0


@dataclass(frozen=True)
class Pulse:
    """A single laser pulse.

    ``target`` is None for a global pulse, otherwise the 1-based index of the
    addressed qubit.  ``window`` is the sech truncation half-width in units
    of ``width``.
    """

    shape: str
    peak: float
    width: float
    center: float = 0.0
    detuning: float = 0.0
    target: int | None = None
    window: float = DEFAULT_WINDOW
    label: str = ""

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise InvalidParameterError(f"pulse shape must be one of {SHAPES}, got {self.shape!r}")
        if self.shape != OFF and not self.width > 0:
            raise InvalidParameterError(f"pulse width must be > 0, got {self.width!r}")
        if self.window <= 0:
            raise InvalidParameterError(f"truncation window must be > 0, got {self.window!r}")
        if self.target is not None and self.target < 1:
            raise InvalidParameterError(f"local pulse target is 1-based, got {self.target}")

    @property
    def is_global(self) -> bool:
        return self.target is None

    @property
    def addressing(self) -> str:
        return "global" if self.target is None else f"local:{self.target}"

    @property
    def support(self) -> tuple[float, float]:
        """Closed interval outside which the envelope is exactly zero."""
        if self.shape == SECH:
            half = self.window * self.width
        elif self.shape == SQUARE:
            half = self.width / 2
        else:
            half = 0.0
        return self.center - half, self.center + half

    def envelope(self, t):
        return envelope(self, t)

    def value(self, t: float) -> float:
        """Scalar envelope; fast path for ODE right-hand sides."""
        if self.shape == OFF:
            return 0.0
        x = t - self.center
        if self.shape == SQUARE:
            return self.peak if abs(x) <= self.width / 2 else 0.0
        x /= self.width
        return self.peak / math.cosh(x) if abs(x) <= self.window else 0.0

    def area(self) -> float:
        return pulse_area(self)

    def energy_integral(self, t: float) -> float:
        """Integral of envelope**2 from the start of the support up to ``t``."""
        if self.shape == OFF or self.peak == 0:
            return 0.0
        lo, hi = self.support
        tc = min(max(t, lo), hi)
        if self.shape == SQUARE:
            return self.peak**2 * (tc - lo)
        x = (tc - self.center) / self.width
        return self.peak**2 * self.width * (math.tanh(x) + math.tanh(self.window))

    def to_dict(self) -> dict:
        return {
            "shape": self.shape,
            "peak": self.peak,
            "width": self.width,
            "center": self.center,
            "detuning": self.detuning,
            "addressing": self.addressing,
            "window": self.window,
            "label": self.label,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Pulse":
        d = dict(d)
        addressing = d.pop("addressing", "global")
        if addressing == "global":
            target = None
        elif isinstance(addressing, str) and addressing.startswith("local:"):
            target = int(addressing.split(":", 1)[1])
        else:
            raise InvalidParameterError(f"bad pulse addressing {addressing!r}")
        return cls(target=target, **d)


def envelope(p: Pulse, t):
    """Envelope value(s) at time(s) ``t``; exactly zero outside the support."""
    t = np.asarray(t, dtype=float)
    if p.shape == OFF:
        return np.zeros_like(t)
    if p.shape == SQUARE:
        inside = np.abs(t - p.center) <= p.width / 2
        return np.where(inside, p.peak, 0.0)
    x = (t - p.center) / p.width
    inside = np.abs(x) <= p.window
    return np.where(inside, p.peak / np.cosh(np.where(inside, x, 0.0)), 0.0)


def pulse_area(p: Pulse) -> float:
    """Closed-form area of the untruncated shape."""
    if p.shape == SECH:
        return float(np.pi * p.peak * p.width)
    if p.shape == SQUARE:
        return float(p.peak * p.width)
    return 0.0


def pulse_for_area(shape, area, width, center=0.0, detuning=0.0, target=None,
                   window=DEFAULT_WINDOW, label="") -> Pulse:
    """Pulse of the requested area with the peak solved from the closed form.

    A zero area yields an ``off`` pulse.
    """
    if not width > 0:
        raise InvalidParameterError(f"pulse width must be > 0, got {width!r}")
    if area < 0:
        raise InvalidParameterError(f"pulse area must be >= 0, got {area!r}")
    if area == 0 or shape == OFF:
        return Pulse(OFF, 0.0, width, center, detuning, target, window, label)
    if shape == SECH:
        peak = area / (np.pi * width)
    elif shape == SQUARE:
        peak = area / width
    else:
        raise InvalidParameterError(f"pulse shape must be one of {SHAPES}, got {shape!r}")
    return Pulse(shape, float(peak), float(width), float(center), float(detuning),
                 target, float(window), label)


@dataclass(frozen=True)
class Schedule:
    """Time-ordered pulses plus the simulated horizon and output sampling step."""

    pulses: tuple = field(default_factory=tuple)
    horizon: float = 0.0
    sample_dt: float = 1.0
    time_unit: float = 1.0  # the T in which event times are quoted

    def __post_init__(self):
        pulses = tuple(sorted(self.pulses, key=lambda p: p.center))
        object.__setattr__(self, "pulses", pulses)
        if not self.sample_dt > 0:
            raise InvalidParameterError(f"sample_dt must be > 0, got {self.sample_dt!r}")
        end = max((p.support[1] for p in pulses), default=0.0)
        if self.horizon < end - 1e-12 * max(1.0, abs(end)):
            raise InvalidParameterError(
                f"horizon {self.horizon} does not cover the last pulse window (ends at {end})"
            )

    def __len__(self):
        return len(self.pulses)

    @property
    def events(self) -> list[tuple[float, str]]:
        return [(p.center, p.label) for p in self.pulses]

    def sample_times(self) -> np.ndarray:
        n = int(np.floor(self.horizon / self.sample_dt + 1e-9))
        t = np.arange(n + 1) * self.sample_dt
        if self.horizon - t[-1] > 1e-9 * self.sample_dt:
            t = np.append(t, self.horizon)
        return t

    def with_pulses(self, pulses) -> "Schedule":
        return replace(self, pulses=tuple(pulses))

    def to_dict(self) -> dict:
        return {
            "pulses": [p.to_dict() for p in self.pulses],
            "horizon": self.horizon,
            "sample_dt": self.sample_dt,
            "time_unit": self.time_unit,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Schedule":
        return cls(
            pulses=tuple(Pulse.from_dict(p) for p in d.get("pulses", [])),
            horizon=float(d["horizon"]),
            sample_dt=float(d["sample_dt"]),
            time_unit=float(d.get("time_unit", 1.0)),
        )
