"""Command-line front end.

Each subcommand writes one CSV (comma separated, header row, LF endings,
17 significant digits) plus a JSON sidecar with the same stem and a
``.meta`` suffix describing the run.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
import time
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__, closed_form
from .checks import run_selfcheck
from .errors import BatteryError, ConfigError
from .model import BatteryParams, Drive
from .propagate import EvolveSettings, Protocol, charge_scan, default_workers
from .spectrum_meanfield import ground_state, hp_polarization
from .sweep import grid_amp_freq, sweep_atoms, sweep_lambda

UNITS = "energies in units of delta; times in units of 1/delta"
PROTOCOLS = {"locked": Protocol.PERIOD_LOCKED, "fixed": Protocol.FIXED_FREQUENCY}
SURFACE_MODES = {"analytic": "analytic_locked", "numeric": "numeric"}

# per-command defaults for keys left unset
DEFAULTS = {
    "trace": {"n": 1, "t_range": (0.5, 30.0, 400)},
    "surface": {"n": 1, "a_range": (0.05, 2.0, 80), "omega_range": (0.05, 1.5, 120)},
    "sweep-n": {"t_range": (0.5, 20.0, 79), "n_list": tuple(range(20, 301, 20))},
    "sweep-lambda": {"n": 140, "t_range": (0.5, 20.0, 79), "lambda_range": (-2.0, 2.0, 81)},
    "ground": {"n": 200, "lambda_range": (-2.0, 2.0, 81)},
}


def parse_range(text: str) -> tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"range {text!r} must look like lo:hi:points")
    try:
        lo, hi, pts = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ConfigError(f"range {text!r}: {exc}") from None
    if pts < 1 or (pts > 1 and not hi > lo):
        raise ConfigError(f"range {text!r} needs hi > lo and points >= 1")
    return lo, hi, pts


def parse_int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.replace(" ", "").split(",") if x)
    except ValueError as exc:
        raise ConfigError(f"bad integer list {text!r}: {exc}") from None


def grid(spec) -> np.ndarray:
    lo, hi, pts = spec
    return np.linspace(lo, hi, pts)


def _fmt_range(r):
    return f"{r[0]!r}:{r[1]!r}:{r[2]}"


@dataclass
class RunConfig:
    n: int | None = None
    amp: float = 1.0
    omega: float | None = None
    lam: float = 0.0
    delta: float = 1.0
    drive: str = "harmonic"
    protocol: str = "locked"
    mode: str = "analytic"
    t_range: tuple | None = None
    a_range: tuple | None = None
    omega_range: tuple | None = None
    lambda_range: tuple | None = None
    n_list: tuple | None = None
    workers: int | None = None
    out: str | None = None

    # key in files / flag name -> field name
    KEYS = {"n": "n", "amp": "amp", "omega": "omega", "lambda": "lam", "delta": "delta",
            "drive": "drive", "protocol": "protocol", "mode": "mode", "t-range": "t_range",
            "a-range": "a_range", "omega-range": "omega_range", "lambda-range": "lambda_range",
            "n-list": "n_list", "workers": "workers", "out": "out"}

    def set_from_text(self, key: str, value: str, where: str = "") -> None:
        if key not in self.KEYS:
            raise ConfigError(f"{where}unknown key {key!r}")
        name = self.KEYS[key]
        try:
            if name in ("t_range", "a_range", "omega_range", "lambda_range"):
                val = parse_range(value)
            elif name == "n_list":
                val = parse_int_list(value)
            elif name in ("n", "workers"):
                val = int(value)
            elif name in ("amp", "omega", "lam", "delta"):
                val = float(value)
            else:
                val = value
        except (ValueError, ConfigError) as exc:
            raise ConfigError(f"{where}key {key!r}: {exc}") from None
        setattr(self, name, val)
        self.validate(where)

    def validate(self, where: str = "") -> None:
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"{where}protocol must be one of {sorted(PROTOCOLS)}")
        if self.mode not in SURFACE_MODES:
            raise ConfigError(f"{where}mode must be one of {sorted(SURFACE_MODES)}")
        if self.drive not in {d.value for d in Drive}:
            raise ConfigError(f"{where}drive must be harmonic, static or off")
        if self.n is not None and self.n < 1:
            raise ConfigError(f"{where}n must be >= 1")
        if self.workers is not None and self.workers < 1:
            raise ConfigError(f"{where}workers must be >= 1")

    def to_text(self) -> str:
        lines = []
        for key, name in self.KEYS.items():
            val = getattr(self, name)
            if val is None:
                continue
            if name in ("t_range", "a_range", "omega_range", "lambda_range"):
                val = _fmt_range(val)
            elif name == "n_list":
                val = ",".join(str(v) for v in val)
            elif isinstance(val, float):
                val = repr(val)
            lines.append(f"{key} = {val}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, source: str = "<config>") -> "RunConfig":
        cfg = cls()
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            where = f"{source}:{lineno}: "
            if "=" not in line:
                raise ConfigError(f"{where}expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            cfg.set_from_text(key, value, where)
        return cfg

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def resolved(self, command: str) -> "RunConfig":
        cfg = dataclasses.replace(self)
        if command == "trace" and cfg.t_range is None and (cfg.n or 1) > 1:
            cfg.t_range = (0.5, 50.0, 400)
        for name, val in DEFAULTS.get(command, {}).items():
            if getattr(cfg, name) is None:
                setattr(cfg, name, val)
        if cfg.n is None:
            cfg.n = 1
        if cfg.workers is None:
            cfg.workers = default_workers()
        if cfg.out is None:
            cfg.out = f"{command}.csv"
        return cfg


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def write_csv(path: Path, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_meta(path: Path, command: str, cfg: RunConfig, started: float, extra: dict) -> None:
    meta = {
        "command": command,
        "tool_version": __version__,
        "units": UNITS,
        "config": {k: (list(v) if isinstance(v, tuple) else v) for k, v in cfg.as_dict().items()},
        "config_text": cfg.to_text(),
        "wall_time_s": round(time.perf_counter() - started, 3),
        **extra,
    }
    path.with_suffix(".meta").write_text(json.dumps(meta, indent=2, default=float) + "\n")


def _params(cfg: RunConfig, omega: float | None = None) -> BatteryParams:
    drive = Drive(cfg.drive)
    w = omega if omega is not None else cfg.omega
    if drive is Drive.HARMONIC and w is None:
        w = 1.0
    return BatteryParams.from_lambda(cfg.lam, cfg.delta, amp=cfg.amp, omega=w, n_atoms=cfg.n,
                                     drive=drive)


def cmd_trace(cfg: RunConfig) -> dict:
    protocol = PROTOCOLS[cfg.protocol]
    if protocol is Protocol.FIXED_FREQUENCY and cfg.drive == "harmonic" and cfg.omega is None:
        raise ConfigError("fixed protocol with a harmonic drive needs --omega")
    t = grid(cfg.t_range)
    params = _params(cfg)
    tr = charge_scan(params, t, protocol, workers=cfg.workers)
    warnings = 0
    if cfg.n == 1:
        analytic = np.full(t.size, math.nan)
        for i, T in enumerate(t):
            try:
                if protocol is Protocol.PERIOD_LOCKED:
                    analytic[i] = closed_form.locked_energy(T, cfg.amp, 1, cfg.delta)
                else:
                    eff = closed_form.effective_params(cfg.amp, params.omega, 1, cfg.delta)
                    analytic[i] = closed_form.e1_analytic(T, eff, cfg.delta)
            except BatteryError:
                warnings += 1
        static = closed_form.static_energy(t, cfg.amp, cfg.delta)
        header = ["T", "E_numeric", "E_analytic", "E_static"]
        rows = zip(t, tr.energies, analytic, static)
    else:
        header = ["T", "E_numeric", "E_per_atom"]
        rows = zip(t, tr.energies, tr.energies / cfg.n)
    write_csv(Path(cfg.out), header, rows)
    extra = {"warnings": warnings, "max_norm_drift": tr.norm_drift, "protocol": protocol.value}
    if cfg.n == 1:
        extra["static_max"] = closed_form.static_max(cfg.amp, cfg.delta)
    return extra


def cmd_surface(cfg: RunConfig) -> dict:
    amps, omegas = grid(cfg.a_range), grid(cfg.omega_range)
    surf = grid_amp_freq(amps, omegas, SURFACE_MODES[cfg.mode], cfg.n, cfg.delta,
                         workers=cfg.workers)
    out = Path(cfg.out)
    write_csv(out, ["A", "omega", "E_max"],
              ((a, w, surf.energy[i, j]) for i, a in enumerate(amps)
               for j, w in enumerate(omegas)))
    ridge = out.with_name(out.stem + "_ridge.csv")
    write_csv(ridge, ["A", "omega_ridge"], zip(amps, surf.ridge_omega))
    return {"warnings": surf.missing, "missing_cells": surf.missing, "ridge_file": ridge.name,
            "mode": surf.mode}


def cmd_sweep_n(cfg: RunConfig) -> dict:
    lo, hi, pts = cfg.t_range
    res = sweep_atoms(cfg.lam, cfg.amp, cfg.n_list, PROTOCOLS[cfg.protocol], (lo, hi), pts,
                      omega=cfg.omega, delta=cfg.delta, workers=cfg.workers)
    write_csv(Path(cfg.out), ["N", "E_max_per_atom", "T_max", "omega_max"],
              zip(res.axis.astype(int), res.e_max, res.t_max, res.omega_max))
    return {"warnings": int((~res.has_peak).sum()), **res.metadata}


def cmd_sweep_lambda(cfg: RunConfig) -> dict:
    lo, hi, pts = cfg.t_range
    res = sweep_lambda(cfg.n, cfg.amp, grid(cfg.lambda_range), PROTOCOLS[cfg.protocol],
                       (lo, hi), pts, omega=cfg.omega, delta=cfg.delta, workers=cfg.workers)
    write_csv(Path(cfg.out), ["lambda", "E_max_per_atom", "T_max"],
              zip(res.axis, res.e_max, res.t_max))
    return {"warnings": int((~res.has_peak).sum()), **res.metadata}


def cmd_ground(cfg: RunConfig) -> dict:
    rows = []
    half = cfg.n / 2
    for lam in grid(cfg.lambda_range):
        gs = ground_state(BatteryParams.from_lambda(lam, cfg.delta, n_atoms=cfg.n, amp=0.0,
                                                    drive=Drive.OFF))
        rows.append((lam, gs.sz_per_spin, hp_polarization(lam).sz_per_spin_inf,
                     gs.e0 / half, gs.e1 / half, gs.gap))
    write_csv(Path(cfg.out),
              ["lambda", "sz_per_spin_N", "sz_per_spin_inf", "e0_per_halfN", "e1_per_halfN", "gap"],
              rows)
    return {"warnings": 0, "lambda_c": -1.0}


COMMANDS = {"trace": cmd_trace, "surface": cmd_surface, "sweep-n": cmd_sweep_n,
            "sweep-lambda": cmd_sweep_lambda, "ground": cmd_ground}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dicke-battery", allow_abbrev=False,
                                     description="Harmonic charging of an N-atom quantum battery.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, allow_abbrev=False)
        p.add_argument("--config", help="flat 'key = value' file; flags override it")
        for key in RunConfig.KEYS:
            p.add_argument(f"--{key}", dest=f"opt_{RunConfig.KEYS[key]}", metavar="VALUE")
    sc = sub.add_parser("selfcheck", allow_abbrev=False)
    sc.add_argument("--quick", action="store_true")
    sc.add_argument("--perturb-bessel", type=float, default=0.0, metavar="EPS",
                    help="inject a relative error into the Bessel check (tests the check)")
    return parser


def config_from_args(args) -> RunConfig:
    if args.config:
        path = Path(args.config)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        cfg = RunConfig.from_text(text, str(path))
    else:
        cfg = RunConfig()
    for key, name in RunConfig.KEYS.items():
        val = getattr(args, f"opt_{name}")
        if val is not None:
            cfg.set_from_text(key, val, f"--{key}: ")
    return cfg


def _glue_values(argv):
    # "--lambda-range -2:0:81" would otherwise be read as a flag by argparse
    flags = {f"--{k}" for k in RunConfig.KEYS} | {"--config", "--perturb-bessel"}
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in flags and i + 1 < len(argv):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_glue_values(argv))
    if args.command == "selfcheck":
        results = run_selfcheck(quick=args.quick, perturb_bessel=args.perturb_bessel)
        for r in results:
            print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
        return 0 if all(r.passed for r in results) else 1
    started = time.perf_counter()
    try:
        cfg = config_from_args(args).resolved(args.command)
        extra = COMMANDS[args.command](cfg)
    except BatteryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    write_meta(Path(cfg.out), args.command, cfg, started, extra)
    if "ridge_file" in extra:
        write_meta(Path(cfg.out).with_name(extra["ridge_file"]), args.command, cfg, started, extra)
    if extra.get("warnings"):
        print(f"warning: {extra['warnings']} missing or degraded values in {cfg.out}",
              file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
