"""Command-line front end.

    cavgrover CONFIG.yaml [--out DIR] [--seed INT] [--threads INT] [--format csv,json,svg]

Exit status 0 on success, 1 when a validate check fails or a run errors,
2 for configuration errors.  On failure an ``error.json`` is written to the
output directory (when it can be created) and the same JSON goes to stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .checks import run_checks
from .config import parse_config
from .exceptions import CavGroverError, ConfigError
from .export import (
    write_events_json,
    write_json,
    write_sweep_csv,
    write_sweep_json,
    write_trace_csv,
)
from .grover import measure, run_protocol
from .robustness import run_sweep
from .svgplot import errorbar_plot, line_plot

log = logging.getLogger("cavgrover")


def _versions():
    return {"cavgrover": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__}


def _run_trace(cfg, out: Path) -> dict:
    kwargs = {} if cfg.tier == "ideal" else cfg.protocol_kwargs()
    trace = run_protocol(cfg.params, cfg.tier, cfg.marked, cfg.iterations, **kwargs)
    m = measure(trace, cfg.threshold)
    files = []
    if "csv" in cfg.formats:
        files.append(write_trace_csv(trace, out / "trace.csv"))
    if "json" in cfg.formats:
        files.append(write_events_json(trace, out / "events.json"))
    if "svg" in cfg.formats:
        T = trace.time_unit
        files.append(line_plot(
            out / "plot.svg", trace.times / T,
            {"marked": trace.p_marked, "photon": trace.p_photon},
            title=f"N={cfg.params.n} {cfg.tier} tier, marked qubit {cfg.marked}",
            xlabel="t / T", ylabel="population", ylim=(0, 1),
            vlines=[t / T for t, _ in trace.events],
        ))
    log.info("max p_marked = %.6f at t = %.3f T", m.max_p_marked, m.time_of_max / trace.time_unit)
    return {
        "measurement": {"max_p_marked": m.max_p_marked, "time_of_max": m.time_of_max,
                        "time_of_max_over_T": m.time_of_max / trace.time_unit,
                        "final_p_marked": m.final_p_marked, "success": m.success,
                        "threshold": m.threshold},
        "time_unit": trace.time_unit,
        "files": [p.name for p in files],
        "status": "ok",
    }


def _run_sweep(cfg, out: Path, threads: int) -> dict:
    kwargs = cfg.protocol_kwargs()
    kwargs.pop("allow_regime_violation")
    summary = run_sweep(cfg.params, cfg.disorder, cfg.levels, cfg.marked, threads=threads,
                        **kwargs)
    files = []
    if "csv" in cfg.formats:
        files.append(write_sweep_csv(summary, out / "sweep.csv"))
    if "json" in cfg.formats:
        files.append(write_sweep_json(summary, out / "sweep.json"))
    if "svg" in cfg.formats:
        files.append(errorbar_plot(
            out / "plot.svg", summary.levels, summary.means, summary.stds,
            title=f"N={cfg.params.n}: max marked fidelity vs disorder",
            xlabel="mean relative coupling deviation", ylabel="max fidelity",
        ))
    return {"files": [p.name for p in files],
            "n_failed": sum(s.n_failed for s in summary.per_level), "status": "ok"}


def _run_validate(cfg, out: Path) -> dict:
    results = run_checks()
    for r in results:
        print(r.line())
    payload = [{"name": r.name, "passed": r.passed, "value": r.value,
                "tolerance": r.tolerance, "detail": r.detail, "seconds": r.seconds}
               for r in results]
    files = []
    if "json" in cfg.formats:
        files.append(write_json(payload, out / "validate.json"))
    ok = all(r.passed for r in results)
    return {"checks": payload, "files": [p.name for p in files],
            "status": "ok" if ok else "failed"}


def run(cfg, threads: int = 1) -> int:
    """Execute a parsed config and write its artifacts; returns the exit status."""
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    if cfg.mode == "trace":
        info = _run_trace(cfg, out)
    elif cfg.mode == "sweep":
        info = _run_sweep(cfg, out, threads)
    else:
        info = _run_validate(cfg, out)
    meta = {
        "config": cfg.resolved,
        "seed": cfg.disorder.seed,
        "threads": threads,
        "versions": _versions(),
        "wall_time_s": time.perf_counter() - t0,
        **info,
    }
    write_json(meta, out / "run_metadata.json")
    return 0 if info["status"] == "ok" else 1


def _error(exc, out_dir, code):
    payload = {"status": "error", "type": type(exc).__name__, "message": str(exc),
               "key": getattr(exc, "key", None), "exit_code": code}
    text = json.dumps(payload, sort_keys=True)
    print(text, file=sys.stderr)
    if out_dir is not None:
        try:
            Path(out_dir).mkdir(parents=True, exist_ok=True)
            (Path(out_dir) / "error.json").write_text(text + "\n")
        except OSError:
            pass
    return code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="cavgrover",
        description="Grover search in coupled cavity arrays: traces, disorder sweeps, checks.",
    )
    ap.add_argument("config", help="YAML run configuration")
    ap.add_argument("--out", help="output directory (overrides output.dir)")
    ap.add_argument("--seed", type=int, help="disorder seed (overrides disorder.seed)")
    ap.add_argument("--threads", type=int, default=1, help="worker processes for sweeps")
    ap.add_argument("--format", help="comma-separated subset of csv,json,svg")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides: dict = {}
    if args.out:
        overrides.setdefault("output", {})["dir"] = args.out
    if args.format:
        overrides.setdefault("output", {})["formats"] = [
            f.strip() for f in args.format.split(",") if f.strip()]
    if args.seed is not None:
        overrides.setdefault("disorder", {})["seed"] = args.seed
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        return _error(ConfigError("config", str(exc)), args.out, 2)
    try:
        cfg = parse_config(text, overrides)
    except (ConfigError, CavGroverError) as exc:
        return _error(exc, args.out, 2)
    if args.threads < 1:
        return _error(ConfigError("--threads", "must be >= 1"), cfg.out_dir, 2)
    try:
        return run(cfg, threads=args.threads)
    except Exception as exc:  # noqa: BLE001 - surfaced as error JSON
        log.exception("run failed")
        return _error(exc, cfg.out_dir, 1)


if __name__ == "__main__":
    sys.exit(main())
