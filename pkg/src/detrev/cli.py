"""
Command-line runner for the built-in scenarios.

    detrev <scenario> [--config FILE] [--flag value ...] --out PATH

Every run writes one CSV file with a header row. Flags override values from
the optional ``key = value`` config file, which override built-in defaults.
Exit codes: 0 success, 2 configuration error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import math
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import evolution, sampler, scenarios
from .hilbert import expectation, fidelity

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3

SCENARIOS = ("spin-precession", "spin-tracked", "free-particle", "stochastic", "overlap-sweep")

COLUMNS = {
    "spin-precession": ("t", "fidelity_plus_x", "sx_expect", "sy_expect", "sz_expect"),
    "spin-tracked": ("t", "c_I", "c_x", "c_y", "c_z"),
    "free-particle": ("t", "x_expect", "drift", "momentum_case_residual"),
    "stochastic": ("dt", "mean_final_infidelity", "stderr", "trajectories"),
    "overlap-sweep": ("dt", "re_eps", "im_eps", "omega_expectation"),
}

SPIN_FIELDS = ("omega", "hbar", "dt", "t_final")
REQUIRED = {
    "spin-precession": SPIN_FIELDS,
    "spin-tracked": SPIN_FIELDS,
    "free-particle": ("n_points", "box_length", "mass", "hbar", "x0", "p0", "sigma", "dt", "t_final"),
    "stochastic": SPIN_FIELDS + ("trajectories", "seed", "levels"),
    "overlap-sweep": ("omega", "hbar", "dt", "levels", "state"),
}

DEFAULTS = {
    "spin-precession": dict(omega=1.0, hbar=1.0, dt=0.01, t_final=2 * math.pi),
    "spin-tracked": dict(omega=1.0, hbar=1.0, dt=0.01, t_final=2 * math.pi),
    "free-particle": dict(n_points=256, box_length=20.0, mass=1.0, hbar=1.0, x0=-2.0, p0=1.0,
                          sigma=1.0, dt=0.25, t_final=3.0),
    "stochastic": dict(omega=1.0, hbar=1.0, dt=0.1, t_final=1.0, trajectories=200, levels=4),
    "overlap-sweep": dict(omega=1.0, hbar=1.0, dt=1e-2, levels=4, state="+x"),
}

# parameter name -> (type, help)
PARAMS = {
    "omega": (float, "precession angular frequency"),
    "hbar": (float, "reduced Planck constant"),
    "dt": (float, "time step (first level for sweeps)"),
    "t_final": (float, "final time"),
    "n_points": (int, "grid points (power of two, >= 16)"),
    "box_length": (float, "periodic box length"),
    "mass": (float, "particle mass"),
    "x0": (float, "packet center"),
    "p0": (float, "packet mean momentum"),
    "sigma": (float, "packet position spread"),
    "trajectories": (int, "trajectories per dt level"),
    "seed": (int, "master random seed"),
    "levels": (int, "number of dt levels in a sweep"),
    "state": (str, "initial spin state for overlap-sweep (+z or +x)"),
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    scenario: str
    output_path: str
    omega: Optional[float] = None
    hbar: Optional[float] = None
    dt: Optional[float] = None
    t_final: Optional[float] = None
    n_points: Optional[int] = None
    box_length: Optional[float] = None
    mass: Optional[float] = None
    x0: Optional[float] = None
    p0: Optional[float] = None
    sigma: Optional[float] = None
    trajectories: Optional[int] = None
    seed: Optional[int] = None
    levels: Optional[int] = None
    state: Optional[str] = None

    def validate(self):
        """Raise :class:`ConfigError` listing every bad field."""
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario: unknown {self.scenario!r}")
        problems = []
        for name in REQUIRED[self.scenario]:
            if getattr(self, name) is None:
                problems.append(f"{name}: required for {self.scenario}")
        present = {name: getattr(self, name) for name in REQUIRED[self.scenario]
                   if getattr(self, name) is not None}

        def positive(name):
            if name in present and not (math.isfinite(present[name]) and present[name] > 0):
                problems.append(f"{name}: must be positive, got {present[name]!r}")

        for name in ("hbar", "dt", "t_final", "box_length", "mass", "sigma"):
            positive(name)
        for name in ("omega", "x0", "p0"):
            if name in present and not math.isfinite(present[name]):
                problems.append(f"{name}: must be finite")
        if "t_final" in present and "dt" in present and not present["dt"] < present["t_final"]:
            problems.append(f"dt: must be smaller than t_final ({present['t_final']!r})")
        n = present.get("n_points")
        if n is not None and (n < 16 or n & (n - 1)):
            problems.append(f"n_points: must be a power of two >= 16, got {n}")
        if present.get("trajectories") is not None and present["trajectories"] < 1:
            problems.append(f"trajectories: must be at least 1, got {present['trajectories']}")
        if present.get("levels") is not None and present["levels"] < 1:
            problems.append(f"levels: must be at least 1, got {present['levels']}")
        if present.get("seed") is not None and present["seed"] < 0:
            problems.append(f"seed: must be nonnegative, got {present['seed']}")
        if present.get("state") is not None and present["state"] not in ("+z", "+x"):
            problems.append(f"state: must be +z or +x, got {present['state']!r}")
        if problems:
            raise ConfigError("; ".join(problems))


def read_config_file(path: str) -> dict:
    """Parse ``key = value`` lines; a leading ``[section]`` header is optional."""
    with open(path) as fh:
        text = fh.read()
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError:
        parser.read_string("[run]\n" + text)
    values = {}
    for section in parser.sections():
        values.update(parser[section])
    return {key.replace("-", "_"): value for key, value in values.items()}


def build_config(scenario: str, flags: dict, file_values: dict, output_path: str) -> RunConfig:
    merged = dict(DEFAULTS[scenario])
    for key, raw in file_values.items():
        if key not in PARAMS:
            raise ConfigError(f"{key}: unknown config key")
        kind = PARAMS[key][0]
        try:
            merged[key] = kind(raw)
        except ValueError:
            raise ConfigError(f"{key}: cannot parse {raw!r} as {kind.__name__}") from None
    merged.update({k: v for k, v in flags.items() if v is not None})
    fields = {f.name for f in dataclasses.fields(RunConfig)}
    config = RunConfig(scenario=scenario, output_path=output_path,
                       **{k: v for k, v in merged.items() if k in fields})
    config.validate()
    return config


def _times(dt: float, t_final: float) -> np.ndarray:
    return dt * np.arange(evolution.step_count(dt, t_final) + 1)


def rows_spin_precession(cfg: RunConfig):
    spin = scenarios.spin_system(cfg.omega, cfg.hbar)
    dec = evolution.spectral_decompose(spin.H)
    plus_x = spin.state("+x")
    for t in _times(cfg.dt, cfg.t_final):
        psi = evolution.evolve(dec, plus_x, t, cfg.hbar)
        yield (t, fidelity(plus_x, psi), expectation(spin.Sx, psi),
               expectation(spin.Sy, psi), expectation(spin.Sz, psi))


def rows_spin_tracked(cfg: RunConfig):
    spin = scenarios.spin_system(cfg.omega, cfg.hbar)
    dec = evolution.spectral_decompose(spin.H)
    for t in _times(cfg.dt, cfg.t_final):
        A_t = evolution.tracked_observable(dec, spin.Sx, t, cfg.hbar)
        yield (t, *scenarios.spin_decompose(A_t, cfg.hbar))


def rows_free_particle(cfg: RunConfig):
    try:
        grid = scenarios.free_particle_grid(cfg.n_points, cfg.box_length, cfg.mass, cfg.hbar)
        packet = scenarios.gaussian_packet(grid, cfg.x0, cfg.p0, cfg.sigma)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    window = scenarios.tracking_window(grid, packet)
    if not cfg.t_final < window:
        raise ConfigError(f"t_final: must be below the wraparound window {window:.6g}")
    report = scenarios.verify_free_particle_tracking(grid, packet, _times(cfg.dt, cfg.t_final))
    for row in zip(report.times, report.x_expect, report.drift, report.momentum_residual):
        yield row


def rows_stochastic(cfg: RunConfig):
    spin = scenarios.spin_system(cfg.omega, cfg.hbar)
    psi0 = spin.state("+x")
    for level in range(cfg.levels):
        dt = cfg.dt / 2**level
        if not dt < cfg.t_final:
            raise ConfigError(f"dt: level {level} step {dt!r} is not below t_final")
        result = sampler.run_ensemble(spin.H, spin.Sx, psi0, dt, cfg.t_final,
                                      cfg.trajectories, cfg.seed, cfg.hbar)
        yield (dt, result.mean_final_infidelity, result.stderr, cfg.trajectories)


def rows_overlap_sweep(cfg: RunConfig):
    spin = scenarios.spin_system(cfg.omega, cfg.hbar)
    psi = spin.state(cfg.state)
    for level in range(cfg.levels):
        dt = cfg.dt / 10**level
        try:
            rep = evolution.overlap_report(spin.H, psi, dt, cfg.hbar)
        except ValueError as exc:
            raise ConfigError(f"dt: {exc}") from None
        yield (dt, rep.epsilon.real, rep.epsilon.imag, rep.omega_expectation)


RUNNERS = {
    "spin-precession": rows_spin_precession,
    "spin-tracked": rows_spin_tracked,
    "free-particle": rows_free_particle,
    "stochastic": rows_stochastic,
    "overlap-sweep": rows_overlap_sweep,
}


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def run(config: RunConfig) -> int:
    """Compute all rows, then write the CSV. Returns the process exit code."""
    config.validate()
    rows = [[_fmt(v) for v in row] for row in RUNNERS[config.scenario](config)]
    with open(config.output_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS[config.scenario])
        writer.writerows(rows)
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="detrev", description="Run a dynamics scenario and write a CSV time series.")
    sub = parser.add_subparsers(dest="scenario", required=True, metavar="scenario")
    for name in SCENARIOS:
        p = sub.add_parser(name, help=f"columns: {', '.join(COLUMNS[name])}")
        p.add_argument("--out", required=True, help="output CSV path")
        p.add_argument("--config", help="key = value file; flags take precedence")
        for param in REQUIRED[name]:
            kind, text = PARAMS[param]
            p.add_argument("--" + param.replace("_", "-"), dest=param, type=kind, default=None,
                           help=f"{text} (default: {DEFAULTS[name].get(param, 'required')})")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    flags = {k: v for k, v in vars(args).items() if k not in ("scenario", "out", "config")}
    try:
        file_values = read_config_file(args.config) if args.config else {}
    except OSError as exc:
        print(f"error: cannot read config file: {exc}", file=sys.stderr)
        return EXIT_IO
    except configparser.Error as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        config = build_config(args.scenario, flags, file_values, args.out)
        return run(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
