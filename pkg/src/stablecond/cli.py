"""Command-line front end: configuration, seeding, dispatch and report files.

Configuration files are INI text with three sections::

    [params]
    kind = avoid_origin
    alphas = 1.5, 2.0

    [budgets]
    n = 100000
    dt_ladder = 0.01, 0.001, 0.0004

    [output]
    seed = 7
    out = results

Every key is optional; missing keys take the experiment defaults. Each run
writes ``cells.csv``, ``summary.json`` and ``run.log`` to ``<out>/<experiment>``
and exits with status 0 iff every verdict passes.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import io
import json
import logging
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from . import experiments as ex
from .killing import kill_path
from .stable import GridSpec, RngStream, StableParams, simulate_path
from .transforms import HKind

log = logging.getLogger("stablecond")

COMMANDS = {
    "verify-martingale": "martingale",
    "verify-conditioning-limit": "conditioning-limit",
    "verify-meander-limit": "meander-limit",
    "verify-feller": "feller",
    "verify-longtime": "longtime",
    "verify-brownian": "brownian",
    "resolvent": "resolvent",
    "simulate": "simulate",
}


class ConfigError(ValueError):
    """All violations found in a configuration, one message each."""

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())


def _pairs(text: str) -> tuple[tuple[float, float], ...]:
    out = []
    for item in text.split(","):
        if item.strip():
            a, r = item.split(":")
            out.append((float(a), float(r)))
    return tuple(out)


def _kind(text: str) -> str:
    text = text.strip()
    if text not in ex.KINDS:
        raise ValueError(f"expected one of {', '.join(ex.KINDS)}")
    return text


def _bool(text: str) -> bool:
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


# field name -> (section, parser, serializer)
_SCALAR = (float, lambda v: repr(float(v)))
_LIST = (_floats, lambda v: ", ".join(repr(float(x)) for x in v))
_SCHEMA = {
    "experiment": ("output", str.strip, str),
    "seed": ("output", int, str),
    "out": ("output", str.strip, str),
    "kind": ("params", _kind, str),
    "alpha": ("params",) + _SCALAR,
    "rho": ("params",) + _SCALAR,
    "grid": ("params", _pairs, lambda v: ", ".join(f"{a!r}:{r!r}" for a, r in v)),
    "alphas": ("params",) + _LIST,
    "xs": ("params",) + _LIST,
    "ts": ("params",) + _LIST,
    "t": ("params",) + _SCALAR,
    "s": ("params",) + _SCALAR,
    "eps_ladder": ("params",) + _LIST,
    "t_ladder": ("params",) + _LIST,
    "x_ladder": ("params",) + _LIST,
    "T_ladder": ("params",) + _LIST,
    "c_grid": ("params",) + _LIST,
    "bridge": ("params", _bool, lambda v: str(bool(v)).lower()),
    "n_paths": ("params", int, str),
    "n": ("budgets", int, str),
    "dt_ladder": ("budgets",) + _LIST,
    "limit_dt": ("budgets",) + _SCALAR,
    "long_dt": ("budgets",) + _SCALAR,
    "chunks": ("budgets", int, str),
    "n_se": ("budgets",) + _SCALAR,
    "ks_level": ("budgets",) + _SCALAR,
    "eps_factor": ("budgets",) + _SCALAR,
    "x_small": ("budgets",) + _SCALAR,
}
_BUDGET_KEYS = ("n", "dt_ladder", "limit_dt", "long_dt", "chunks", "n_se", "ks_level", "eps_factor", "x_small")


@dataclass(frozen=True)
class RunConfig:
    """A validated run configuration. ``None`` means "experiment default"."""

    experiment: str = "martingale"
    seed: int = 0
    out: str = "results"
    kind: str | None = None
    alpha: float | None = None
    rho: float | None = None
    grid: tuple[tuple[float, float], ...] | None = None
    alphas: tuple[float, ...] | None = None
    xs: tuple[float, ...] | None = None
    ts: tuple[float, ...] | None = None
    t: float | None = None
    s: float | None = None
    eps_ladder: tuple[float, ...] | None = None
    t_ladder: tuple[float, ...] | None = None
    x_ladder: tuple[float, ...] | None = None
    T_ladder: tuple[float, ...] | None = None
    c_grid: tuple[float, ...] | None = None
    bridge: bool = True
    n_paths: int = 10
    n: int | None = None
    dt_ladder: tuple[float, ...] | None = None
    limit_dt: float | None = None
    long_dt: float | None = None
    chunks: int | None = None
    n_se: float | None = None
    ks_level: float | None = None
    eps_factor: float | None = None
    x_small: float | None = None
    quick: bool = False  # command-line only, never serialized

    @property
    def params(self) -> StableParams | None:
        if self.alpha is None:
            return None
        return StableParams(self.alpha, 0.5 if self.rho is None else self.rho,
                            symmetric=self.kind == "avoid_origin")

    def budget(self) -> ex.Budget:
        base = ex.Budget.quick() if self.quick else ex.Budget()
        over = {k: getattr(self, k) for k in _BUDGET_KEYS if getattr(self, k) is not None}
        return dataclasses.replace(base, **over)

    def kinds(self) -> tuple[str, ...]:
        return (self.kind,) if self.kind else ex.KINDS


def _alphas_in(cfg: RunConfig) -> list[float]:
    out = [] if cfg.alpha is None else [cfg.alpha]
    out += list(cfg.alphas or ())
    out += [a for a, _ in cfg.grid or ()]
    return out


def validate(cfg: RunConfig) -> list[str]:
    errors = []
    if cfg.experiment not in ex.EXPERIMENTS + ("resolvent", "simulate"):
        errors.append(f"unknown experiment {cfg.experiment!r}")
    if not 0 <= cfg.seed < 2**64:
        errors.append("seed must be a 64-bit unsigned integer")
    pairs = [(a, 0.5 if cfg.rho is None else cfg.rho) for a in ([cfg.alpha] if cfg.alpha is not None else [])]
    pairs += [(a, 0.5) for a in cfg.alphas or ()] + list(cfg.grid or ())
    for a, r in pairs:
        try:
            StableParams(a, r)
        except ValueError as e:
            errors.append(f"alpha={a}, rho={r}: {e}")
    # without an explicit kind both transforms run, so the avoid-origin domain applies
    needs_times = cfg.kind == "avoid_origin" or (cfg.kind is None and cfg.experiment != "simulate")
    if needs_times or cfg.experiment == "resolvent":
        for a in _alphas_in(cfg):
            if not 1 < a <= 2:
                errors.append(f"avoid_origin and the resolvent require 1 < alpha <= 2, got alpha={a}")
    if cfg.kind == "avoid_origin":
        for a, r in pairs:
            if abs(r - 0.5) > 1e-12:
                errors.append(f"avoid_origin requires a symmetric process, got rho={r}")
    for name in ("eps_ladder", "x_ladder"):
        v = getattr(cfg, name)
        if v is not None and (any(e <= 0 for e in v) or list(v) != sorted(v, reverse=True)):
            errors.append(f"{name} must be positive and decreasing")
    for name in ("t_ladder", "T_ladder", "xs", "ts"):
        v = getattr(cfg, name)
        if v is not None and (not v or any(e <= 0 for e in v)):
            errors.append(f"{name} must be a non-empty list of positive values")
    for name in ("t_ladder", "T_ladder", "dt_ladder"):
        v = getattr(cfg, name)
        if v is not None and len(set(v)) != len(v):
            errors.append(f"{name} has repeated entries")
    if cfg.n_paths < 1:
        errors.append("n_paths must be positive")
    try:
        cfg.budget()
    except (ValueError, TypeError) as e:
        errors.append(f"budgets: {e}")
    return errors


def parse_config(text: str) -> RunConfig:
    """Parse and validate INI text; raises :class:`ConfigError` listing every violation."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError([f"malformed configuration: {e}"]) from None
    errors, values = [], {}
    sections = {sec for sec, *_ in _SCHEMA.values()}
    for sec in cp.sections():
        if sec not in sections:
            errors.append(f"unknown section [{sec}]")
            continue
        for key, raw in cp.items(sec):
            spec = _SCHEMA.get(key)
            if spec is None or spec[0] != sec:
                errors.append(f"unknown key {key!r} in [{sec}]")
                continue
            try:
                values[key] = spec[1](raw)
            except ValueError as e:
                errors.append(f"[{sec}] {key} = {raw!r}: {e}")
    cfg = RunConfig(**values)
    errors += validate(cfg)
    if errors:
        raise ConfigError(errors)
    return cfg


def serialize(cfg: RunConfig) -> str:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    for sec in ("params", "budgets", "output"):
        cp.add_section(sec)
    for f in fields(cfg):
        if f.name not in _SCHEMA:
            continue
        v = getattr(cfg, f.name)
        if v is None:
            continue
        sec, _, dump = _SCHEMA[f.name]
        cp.set(sec, f.name, dump(v))
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


# Dispatch ------------------------------------------------------------------------


def _kw(cfg: RunConfig, **names) -> dict:
    return {dst: getattr(cfg, src) for dst, src in names.items() if getattr(cfg, src) is not None}


def run_experiment(cfg: RunConfig) -> ex.ExperimentReport:
    b, seed = cfg.budget(), cfg.seed
    e = cfg.experiment
    if e == "martingale":
        grid = cfg.grid
        if grid is None and cfg.alpha is not None:
            grid = ((cfg.alpha, 0.5 if cfg.rho is None else cfg.rho),)
        return ex.exp_martingale(cfg.kinds(), grid, budget=b, seed=seed, bridge=cfg.bridge, **_kw(cfg, xs="xs", ts="ts"))
    if e == "conditioning-limit":
        return ex.exp_conditioning_limit(cfg.kinds(), budget=b, seed=seed, bridge=cfg.bridge,
                                         **_kw(cfg, alphas="alphas", t="t", eps_ladder="eps_ladder"))
    if e == "meander-limit":
        return ex.exp_meander_to_htransform(cfg.kinds(), budget=b, seed=seed, bridge=cfg.bridge,
                                            **_kw(cfg, alphas="alphas", s="s", t_ladder="t_ladder"))
    if e == "feller":
        return ex.exp_feller_entrance(cfg.kinds(), budget=b, seed=seed,
                                      **_kw(cfg, alpha="alpha", x_ladder="x_ladder", t="t"))
    if e == "longtime":
        return ex.exp_long_time(budget=b, seed=seed, bridge=cfg.bridge,
                                **_kw(cfg, alpha="alpha", T_ladder="T_ladder", c_grid="c_grid"))
    if e == "brownian":
        return ex.exp_brownian_checks(budget=b, seed=seed, **_kw(cfg, t="t"))
    if e == "resolvent":
        return ex.exp_resolvent(seed=seed, **_kw(cfg, alphas="alphas", xs="xs"))
    raise ValueError(f"unknown experiment {e!r}")


def simulate(cfg: RunConfig, out: Path) -> int:
    """Write ``n_paths`` sample paths (and their killing indices) to ``paths.csv``."""
    params = cfg.params or StableParams(1.5)
    b = cfg.budget()
    g = GridSpec.from_dt(cfg.t or 1.0, b.finest_dt)
    hk = HKind.of(cfg.kind or "stay_positive", params)
    spec = hk.kill_spec(params, g.dt, c=b.eps_factor)
    x0 = max(b.x_small, 1.0) if cfg.xs is None else cfg.xs[0]
    rows = ["path,t,x,killed"]
    for i in range(cfg.n_paths):
        path = simulate_path(params, g, x0, RngStream(cfg.seed, (len(ex.EXPERIMENTS) + 1, i)))
        z = kill_path(path, spec).zeta_index
        for k, (t, x) in enumerate(zip(path.times, path.values)):
            rows.append(f"{i},{float(t)!r},{float(x)!r},{int(z is not None and k >= z)}")
    (out / "paths.csv").write_text("\n".join(rows) + "\n")
    log.info("wrote %d paths of %d steps to %s", cfg.n_paths, g.n_steps, out / "paths.csv")
    return 0


def write_report(rep: ex.ExperimentReport, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "cells.csv").write_text(rep.to_csv())
    (out / "summary.json").write_text(json.dumps(rep.summary(), indent=2, default=_jsonable) + "\n")


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    raise TypeError(type(v).__name__)


def _setup_logging(out: Path) -> logging.Handler:
    out.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(out / "run.log", mode="w")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO)
    return handler


def run(cfg: RunConfig) -> int:
    """Run one configured experiment and write its artifacts; returns the exit status."""
    out = Path(cfg.out) / cfg.experiment
    handler = _setup_logging(out)
    try:
        log.info("experiment %s, seed %d, budget %s", cfg.experiment, cfg.seed, cfg.budget())
        if cfg.experiment == "simulate":
            return simulate(cfg, out)
        try:
            rep = run_experiment(cfg)
        except (RuntimeError, ValueError) as e:
            log.error("experiment %s aborted: %s", cfg.experiment, e)
            raise RuntimeError(f"experiment {cfg.experiment} aborted: {e}") from e
        write_report(rep, out)
        for c in rep.checks:
            log.info("check %-60s %s  %s", c.name, "pass" if c.passed else "FAIL", c.detail)
        for f in rep.failures:
            log.warning("failed: %s", f)
        log.info("%s: %s in %.1f s", rep.experiment, "PASS" if rep.passed else "FAIL", rep.wall_clock)
        return 0 if rep.passed else 1
    finally:
        log.removeHandler(handler)
        handler.close()


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stablecond", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, help="INI configuration file")
        sp.add_argument("--seed", type=int, help="master seed (overrides the config)")
        sp.add_argument("--out", help="output directory (overrides the config)")
        sp.add_argument("--chunks", type=int, help="RNG chunks per cell (overrides the config)")
        sp.add_argument("--quick", action="store_true", help="reduced budgets for smoke runs")
    sub.add_parser("list-experiments")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list-experiments":
        print("\n".join(ex.EXPERIMENTS))
        return 0
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        cfg = parse_config(args.config.read_text()) if args.config else RunConfig()
        over = {"experiment": COMMANDS[args.command], "quick": args.quick}
        over.update({k: getattr(args, k) for k in ("seed", "out", "chunks") if getattr(args, k) is not None})
        cfg = dataclasses.replace(cfg, **over)
        errors = validate(cfg)
        if errors:
            raise ConfigError(errors)
    except (ConfigError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    try:
        return run(cfg)
    except (RuntimeError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
