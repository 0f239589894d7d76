"""Run configuration: YAML text -> validated :class:`RunConfig`.

Every key has a default (see ``DEFAULTS``); unknown keys and wrong types are
rejected with a :class:`ConfigError` naming the key.  Domain constraints (e.g.
N >= 1, Delta != 2J) are checked by constructing the domain objects, and the
resulting error is re-raised with the key prepended to its message.

Environment overrides: ``CAVGROVER_<SECTION>__<KEY>=<yaml value>``, e.g.
``CAVGROVER_PARAMS__N=4`` or ``CAVGROVER_DISORDER__SEED=7``.  Key matching is
case-insensitive.
"""
from __future__ import annotations

import copy
import os
from dataclasses import dataclass

import yaml

from .dynamics import ProtocolParams, effective_params
from .exceptions import CavGroverError, ConfigError, SingularParameterError
from .grover import ORACLE_MODES, TIERS, _check_marked, optimal_iterations
from .robustness import DisorderSpec
from .statespace import check_size

ENV_PREFIX = "CAVGROVER_"
MODES = ("trace", "sweep", "validate")
FORMATS = ("csv", "json", "svg")

DEFAULTS = {
    "mode": "trace",
    "tier": "effective",
    "marked": 1,
    "iterations": "auto",
    "oracle": "ideal",
    "threshold": 0.5,
    "allow_regime_violation": False,
    "params": {
        "N": 8,
        "g": 105.0,
        "omega": 105.0,
        "delta": 1050.0,
        "J": 1.0,
        "omega_c": 0.0,
        "boundary": "periodic",
        "kappa": 0.0,
    },
    # times below are in units of T; T = null means pi / |chi|
    "schedule": {
        "T": None,
        "pulse_width": 0.5,
        "window": 10.0,
        "init_center": None,
        "first_oracle": 15.0,
        "reflection_delay": 30.0,
        "period": 60.0,
        "sample_dt": 0.05,
        "resonant": True,
        "stark_compensation": True,
    },
    "disorder": {
        "levels": [0.0, 0.1, 0.2, 0.3],
        "distribution": "uniform",
        "targets": ["coupling"],
        "trials": 100,
        "seed": 1234,
    },
    "integrator": {"rtol": 1e-10, "atol": 1e-12},
    "output": {"dir": "out", "formats": ["csv", "json", "svg"]},
}

# keys whose default is None accept a number or null
_OPTIONAL_FLOATS = {"schedule.T", "schedule.init_center"}


@dataclass
class RunConfig:
    resolved: dict  # full config with defaults filled in
    mode: str
    tier: str
    marked: int
    iterations: int
    oracle: str
    threshold: float
    allow_regime_violation: bool
    params: ProtocolParams
    disorder: DisorderSpec
    levels: list
    rtol: float
    atol: float
    out_dir: str
    formats: list

    @property
    def schedule(self) -> dict:
        return self.resolved["schedule"]

    def time_unit(self) -> float:
        T = self.schedule["T"]
        return effective_params(self.params).pulse_time if T is None else float(T)

    def protocol_kwargs(self) -> dict:
        """Keyword arguments for :func:`cavgrover.grover.run_protocol`."""
        from .grover import build_schedule

        s = self.schedule
        T = self.time_unit()
        schedule = build_schedule(
            self.params.n, self.iterations, T, marked=self.marked,
            pulse_width=s["pulse_width"] * T, window=s["window"],
            init_center=None if s["init_center"] is None else s["init_center"] * T,
            first_oracle=s["first_oracle"], reflection_delay=s["reflection_delay"],
            period=s["period"], sample_dt=s["sample_dt"] * T,
        )
        return dict(
            schedule=schedule, oracle=self.oracle, resonant=s["resonant"],
            stark_compensation=s["stark_compensation"],
            allow_regime_violation=self.allow_regime_violation,
            rtol=self.rtol, atol=self.atol,
        )


def _type_name(v):
    return {bool: "boolean", int: "integer", float: "number", str: "string",
            list: "list", dict: "section"}.get(type(v), type(v).__name__)


def _merge(defaults: dict, given: dict, prefix="") -> dict:
    out = copy.deepcopy(defaults)
    if not isinstance(given, dict):
        raise ConfigError(prefix.rstrip(".") or "<root>", "expected a mapping")
    for key, value in given.items():
        path = f"{prefix}{key}"
        if key not in defaults:
            raise ConfigError(path, f"unknown key (allowed: {', '.join(sorted(defaults))})")
        default = defaults[key]
        if isinstance(default, dict):
            out[key] = _merge(default, value, path + ".")
            continue
        out[key] = _coerce(path, default, value)
    return out


def _coerce(path, default, value):
    if path in _OPTIONAL_FLOATS:
        if value is None:
            return None
        default = 0.0
    if path == "iterations":
        if value == "auto":
            return value
        if isinstance(value, bool) or not isinstance(value, int) or value < 0:
            raise ConfigError(path, f"must be 'auto' or a non-negative integer, got {value!r}")
        return value
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(path, f"expected boolean, got {_type_name(value)} {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, f"expected integer, got {_type_name(value)} {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, f"expected number, got {_type_name(value)} {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(path, f"expected string, got {_type_name(value)} {value!r}")
        return value
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(path, f"expected list, got {_type_name(value)} {value!r}")
        return list(value)
    return value


def _choice(path, value, allowed):
    if value not in allowed:
        raise ConfigError(path, f"must be one of {list(allowed)}, got {value!r}")


def _positive(path, value, strict=True):
    if (strict and not value > 0) or (not strict and not value >= 0):
        raise ConfigError(path, f"must be {'>' if strict else '>='} 0, got {value!r}")


def _keyed(path, exc):
    exc.args = (f"{path}: {exc}",)
    exc.key = path
    return exc


def env_overrides(environ=None) -> dict:
    """Nested override mapping built from ``CAVGROVER_*`` variables."""
    environ = os.environ if environ is None else environ
    out: dict = {}
    for name, raw in sorted(environ.items()):
        if not name.startswith(ENV_PREFIX):
            continue
        parts = name[len(ENV_PREFIX):].split("__")
        node, defaults = out, DEFAULTS
        for i, part in enumerate(parts):
            match = next((k for k in defaults if k.lower() == part.lower()), None)
            if match is None:
                raise ConfigError(name, "environment override names an unknown key")
            if i == len(parts) - 1:
                node[match] = yaml.safe_load(raw)
            else:
                if not isinstance(defaults[match], dict):
                    raise ConfigError(name, f"{match} is not a section")
                node = node.setdefault(match, {})
                defaults = defaults[match]
    return out


def _deep_update(base: dict, extra: dict) -> dict:
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(base.get(k), dict):
            _deep_update(base[k], v)
        else:
            base[k] = v
    return base


def parse_config(text: str, overrides: dict | None = None, environ=None) -> RunConfig:
    """Parse YAML config text into a validated RunConfig.

    ``overrides`` (e.g. from CLI flags) win over environment variables, which
    win over the text.
    """
    try:
        given = yaml.safe_load(text) if text and text.strip() else {}
    except yaml.YAMLError as exc:
        raise ConfigError("<root>", f"not valid YAML: {exc}") from exc
    given = given or {}
    if not isinstance(given, dict):
        raise ConfigError("<root>", "expected a mapping at the top level")
    _deep_update(given, env_overrides(environ))
    _deep_update(given, overrides or {})
    cfg = _merge(DEFAULTS, given)

    _choice("mode", cfg["mode"], MODES)
    _choice("tier", cfg["tier"], TIERS)
    _choice("oracle", cfg["oracle"], ORACLE_MODES)
    _choice("params.boundary", cfg["params"]["boundary"], ("periodic", "open"))
    _positive("threshold", cfg["threshold"], strict=False)

    p = cfg["params"]
    try:
        check_size(p["N"])
    except CavGroverError as exc:
        raise _keyed("params.N", exc)
    _positive("params.kappa", p["kappa"], strict=False)
    try:
        params = ProtocolParams(n=p["N"], g=p["g"], omega=p["omega"], delta=p["delta"],
                                J=p["J"], omega_c=p["omega_c"], boundary=p["boundary"],
                                kappa=p["kappa"])
    except SingularParameterError as exc:
        raise _keyed("params.delta", exc)
    except CavGroverError as exc:
        raise _keyed("params", exc)
    try:
        ep = effective_params(params)
        if cfg["tier"] != "ideal":
            ep.pulse_time
    except CavGroverError as exc:
        raise _keyed("params.omega", exc)

    try:
        marked = _check_marked(cfg["marked"], params.n)
    except CavGroverError as exc:
        raise _keyed("marked", exc)
    if cfg["iterations"] == "auto":
        cfg["iterations"] = optimal_iterations(params.n)

    s = cfg["schedule"]
    if s["T"] is not None:
        _positive("schedule.T", s["T"])
    for key in ("pulse_width", "window", "sample_dt", "period"):
        _positive(f"schedule.{key}", s[key])

    d = cfg["disorder"]
    levels = d["levels"]
    if not levels:
        raise ConfigError("disorder.levels", "needs at least one level")
    for lv in levels:
        if isinstance(lv, bool) or not isinstance(lv, (int, float)) or lv < 0:
            raise ConfigError("disorder.levels", f"levels must be numbers >= 0, got {lv!r}")
    d["levels"] = [float(x) for x in levels]
    try:
        disorder = DisorderSpec(0.0, d["distribution"], tuple(d["targets"]), d["trials"], d["seed"])
    except CavGroverError as exc:
        raise _keyed("disorder", exc)

    for key in ("rtol", "atol"):
        _positive(f"integrator.{key}", cfg["integrator"][key])
    formats = cfg["output"]["formats"]
    for f in formats:
        _choice("output.formats", f, FORMATS)

    return RunConfig(
        resolved=cfg, mode=cfg["mode"], tier=cfg["tier"], marked=marked,
        iterations=cfg["iterations"], oracle=cfg["oracle"], threshold=cfg["threshold"],
        allow_regime_violation=cfg["allow_regime_violation"], params=params,
        disorder=disorder, levels=d["levels"], rtol=cfg["integrator"]["rtol"],
        atol=cfg["integrator"]["atol"], out_dir=cfg["output"]["dir"], formats=list(formats),
    )
