"""Command line front end.

One parsed config file drives one scenario: a single closed-loop run,
a gain-plane or delay sweep of the generator abscissa, a spectrum dump,
the weighted-inequality campaign, or the constants report alone.  Every
artifact embeds the resolved configuration and the package version so a
result file is self-describing; identical config and seed reproduce the
artifacts byte for byte.

Physical defaults are not hardcoded here.  They live in the shipped
reference config, and a missing key is a config error, not a silent
fallback.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import configparser
import dataclasses
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .constants import ConstantsReport, decay_constant, decay_envelope
from .diagnostics import fit_decay
from .discretization import DiscreteOperators, Mesh, assemble, build_mesh
from .errors import DegenbeamError, InsufficientDecay
from .inequalities import run_campaign
from .integrator import SchemeConfig, TimeSeries, run
from .model import BeamProblem, CoefficientFn, validate
from .spectral import assemble_generator, spectrum

SCENARIOS = ("simulate", "sweep_gains", "sweep_tau", "spectrum",
             "inequalities", "constants")


class ConfigError(Exception):
    """Config file missing, malformed, or missing a required key."""


@dataclasses.dataclass(frozen=True)
class GridSpec:
    """Inclusive linspace written as ``lo:hi:n`` in the config."""

    lo: float
    hi: float
    n: int

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"grid {text!r} must be lo:hi:n")
        try:
            lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError as exc:
            raise ConfigError(f"grid {text!r}: {exc}") from None
        if n < 1:
            raise ConfigError(f"grid {text!r} needs at least one point")
        return cls(lo, hi, n)

    def points(self) -> np.ndarray:
        if self.n == 1:
            return np.array([self.lo])
        return np.linspace(self.lo, self.hi, self.n)

    def spec(self) -> str:
        return f"{self.lo:g}:{self.hi:g}:{self.n}"


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Everything a scenario needs, resolved from one INI file."""

    sigma_spec: str
    q_spec: str
    kappa1: float
    kappa2: float
    tau: float
    gamma: float | str
    n: int
    grading: str
    ratio: float
    n_hist: int
    t_final: float
    output_stride: int
    u0_spec: str
    u1_spec: str
    f0_spec: str
    scenario: str
    output_dir: str
    seed: int
    force: bool
    kappa1_grid: GridSpec | None
    kappa2_grid: GridSpec | None
    tau_grid: GridSpec | None
    n_probes: int
    probe_degree: int


def _require(parser: configparser.ConfigParser, section: str, key: str) -> str:
    try:
        return parser.get(section, key)
    except (configparser.NoSectionError, configparser.NoOptionError):
        raise ConfigError(f"config is missing [{section}] {key}") from None


def _number(parser, section, key, conv=float):
    raw = _require(parser, section, key)
    try:
        return conv(raw)
    except ValueError:
        raise ConfigError(
            f"[{section}] {key} = {raw!r} is not a {conv.__name__}") from None


def load_config(path: str, *, scenario: str | None = None,
                out: str | None = None, seed: int | None = None,
                force: bool = False) -> RunConfig:
    """Parse the INI file and apply command-line overrides."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path!r}")

    gamma_raw = _require(parser, "problem", "gamma").strip()
    gamma: float | str
    if gamma_raw == "auto-midpoint":
        gamma = gamma_raw
    else:
        try:
            gamma = float(gamma_raw)
        except ValueError:
            raise ConfigError(
                f"[problem] gamma = {gamma_raw!r} is neither a number "
                f"nor 'auto-midpoint'") from None

    scen = scenario or _require(parser, "run", "scenario").strip()
    if scen not in SCENARIOS:
        raise ConfigError(
            f"unknown scenario {scen!r}; choose from {', '.join(SCENARIOS)}")

    def grid_or_none(key: str) -> GridSpec | None:
        if parser.has_option("sweep", key):
            return GridSpec.parse(parser.get("sweep", key))
        return None

    if scen == "sweep_gains":
        k1_grid = GridSpec.parse(_require(parser, "sweep", "kappa1"))
        k2_grid = GridSpec.parse(_require(parser, "sweep", "kappa2"))
    else:
        k1_grid, k2_grid = grid_or_none("kappa1"), grid_or_none("kappa2")
    if scen == "sweep_tau":
        tau_grid = GridSpec.parse(_require(parser, "sweep", "tau"))
    else:
        tau_grid = grid_or_none("tau")

    if scen == "simulate":
        u0 = _require(parser, "initial", "u0")
        u1 = _require(parser, "initial", "u1")
        f0 = _require(parser, "initial", "f0")
    else:
        u0 = parser.get("initial", "u0", fallback="0")
        u1 = parser.get("initial", "u1", fallback="0")
        f0 = parser.get("initial", "f0", fallback="0")

    if scen == "inequalities":
        n_probes = _number(parser, "campaign", "n_probes", int)
        degree = _number(parser, "campaign", "degree", int)
    else:
        n_probes = parser.getint("campaign", "n_probes", fallback=500)
        degree = parser.getint("campaign", "degree", fallback=8)

    return RunConfig(
        sigma_spec=_require(parser, "problem", "sigma").strip(),
        q_spec=_require(parser, "problem", "q").strip(),
        kappa1=_number(parser, "problem", "kappa1"),
        kappa2=_number(parser, "problem", "kappa2"),
        tau=_number(parser, "problem", "tau"),
        gamma=gamma,
        n=_number(parser, "mesh", "n", int),
        grading=_require(parser, "mesh", "grading").strip(),
        ratio=_number(parser, "mesh", "ratio"),
        n_hist=_number(parser, "time", "n_hist", int),
        t_final=_number(parser, "time", "t_final"),
        output_stride=_number(parser, "time", "output_stride", int),
        u0_spec=u0.strip(),
        u1_spec=u1.strip(),
        f0_spec=f0.strip(),
        scenario=scen,
        output_dir=out or _require(parser, "run", "output_dir").strip(),
        seed=seed if seed is not None else parser.getint(
            "run", "seed", fallback=42),
        force=force,
        kappa1_grid=k1_grid,
        kappa2_grid=k2_grid,
        tau_grid=tau_grid,
        n_probes=n_probes,
        probe_degree=degree,
    )


def build_problem(cfg: RunConfig, *, strict: bool,
                  kappa1: float | None = None, kappa2: float | None = None,
                  tau: float | None = None) -> BeamProblem:
    """Instantiate the configured problem, optionally overriding the
    swept parameters."""
    try:
        sigma = CoefficientFn.parse(cfg.sigma_spec)
        q = CoefficientFn.parse(cfg.q_spec)
    except (DegenbeamError, ValueError, OSError) as exc:
        raise ConfigError(f"coefficient spec: {exc}") from exc
    return BeamProblem.create(
        sigma, q,
        kappa1=cfg.kappa1 if kappa1 is None else kappa1,
        kappa2=cfg.kappa2 if kappa2 is None else kappa2,
        tau=cfg.tau if tau is None else tau,
        gamma=cfg.gamma, strict=strict)


def resolved_config(cfg: RunConfig, problem: BeamProblem) -> dict:
    """The fully resolved settings embedded in every artifact."""
    out = {
        "problem": {
            "sigma": cfg.sigma_spec, "q": cfg.q_spec,
            "kappa1": problem.kappa1, "kappa2": problem.kappa2,
            "tau": problem.tau, "gamma": problem.gamma,
        },
        "mesh": {"n": cfg.n, "grading": cfg.grading, "ratio": cfg.ratio},
        "time": {"n_hist": cfg.n_hist, "t_final": cfg.t_final,
                 "output_stride": cfg.output_stride},
        "initial": {"u0": cfg.u0_spec, "u1": cfg.u1_spec, "f0": cfg.f0_spec},
        "run": {"scenario": cfg.scenario, "seed": cfg.seed,
                "force": cfg.force},
    }
    if cfg.scenario == "sweep_gains":
        out["sweep"] = {"kappa1": cfg.kappa1_grid.spec(),
                        "kappa2": cfg.kappa2_grid.spec()}
    elif cfg.scenario == "sweep_tau":
        out["sweep"] = {"tau": cfg.tau_grid.spec()}
    elif cfg.scenario == "inequalities":
        out["campaign"] = {"n_probes": cfg.n_probes,
                           "degree": cfg.probe_degree}
    return out


# ---- artifact writers ----

def _fmt(x: float) -> str:
    return repr(float(x))


def _write_csv(path: str, config: dict, header: str,
               rows: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# degenbeam {__version__}\n")
        fh.write(f"# config: {json.dumps(config, sort_keys=True)}\n")
        fh.write(header + "\n")
        for row in rows:
            fh.write(row + "\n")


def _write_json(path: str, config: dict, payload: dict) -> None:
    doc = {"version": __version__, "config": config}
    doc.update(payload)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(doc, indent=2, sort_keys=True))
        fh.write("\n")


def write_timeseries_csv(path: str, config: dict, series: TimeSeries,
                         report: ConstantsReport | None) -> None:
    e0 = series.e0
    rows = []
    for r in series.rows:
        if report is not None and r.t >= report.M:
            envelope = _fmt(decay_envelope(report, e0, r.t))
        else:
            envelope = ""
        rows.append(",".join([
            _fmt(r.t), _fmt(r.energy), _fmt(r.lyap_g), _fmt(r.lyap_l),
            envelope, _fmt(r.tip_u), _fmt(r.tip_ut), _fmt(r.tip_ut_delay),
            _fmt(r.diss_residual),
        ]))
    _write_csv(path, config,
               "t,E,G,L,E_envelope,u(1,t),u_t(1,t),u_t(1,t-tau),"
               "dissipation_residual", rows)


# ---- scenarios ----

def _scenario_simulate(cfg: RunConfig, problem: BeamProblem,
                       ops: DiscreteOperators, out_dir: str) -> list[str]:
    scheme = SchemeConfig(n_hist=cfg.n_hist, t_final=cfg.t_final,
                          output_stride=cfg.output_stride)
    u0 = CoefficientFn.parse(cfg.u0_spec)
    u1 = CoefficientFn.parse(cfg.u1_spec)
    f0 = CoefficientFn.parse(cfg.f0_spec)
    series = run(problem, ops, scheme, (u0, u0.derivative),
                 (u1, u1.derivative), f0)
    report = series.constants
    config = resolved_config(cfg, problem)

    run_csv = os.path.join(out_dir, "run.csv")
    write_timeseries_csv(run_csv, config, series, report)
    written = [run_csv]

    try:
        fit = fit_decay(series.t, series.energy, problem.tau, report)
        fit_payload = {
            "omega": fit.omega, "r2": fit.r2,
            "window": list(fit.window), "n_points": fit.n_points,
            "m_theory": fit.m_theory,
            "envelope_status": fit.envelope_status,
            "insufficient_decay": fit.insufficient_decay,
        }
    except InsufficientDecay as exc:
        fit_payload = {"error": str(exc)}
    fit_json = os.path.join(out_dir, "decay_fit.json")
    _write_json(fit_json, config, {"decay_fit": fit_payload})
    written.append(fit_json)

    if report is not None:
        constants_json = os.path.join(out_dir, "constants.json")
        _write_json(constants_json, config, {"constants": report.to_dict()})
        written.append(constants_json)
    return written


def _abscissa(problem: BeamProblem, mesh: Mesh, n_hist: int,
              ops: DiscreteOperators) -> float:
    try:
        gen = assemble_generator(problem, mesh, n_hist, ops=ops)
        return spectrum(gen, n_probes=0).abscissa
    except (DegenbeamError, np.linalg.LinAlgError, ValueError):
        return math.nan


def _pool_map(fn, items):
    workers = min(len(items), os.cpu_count() or 1)
    if workers <= 1:
        return [fn(item) for item in items]
    # Each point owns its state; map gathers results in input order, so
    # the artifact is deterministic regardless of scheduling.
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _scenario_sweep_gains(cfg: RunConfig, problem: BeamProblem,
                          ops: DiscreteOperators, out_dir: str) -> list[str]:
    mesh = ops.mesh
    points = [(float(k1), float(k2))
              for k1 in cfg.kappa1_grid.points()
              for k2 in cfg.kappa2_grid.points()]

    def job(point):
        k1, k2 = point
        p = build_problem(cfg, strict=False, kappa1=k1, kappa2=k2)
        return _abscissa(p, mesh, cfg.n_hist, ops)

    values = _pool_map(job, points)
    rows = [f"{_fmt(k1)},{_fmt(k2)},{_fmt(a)}"
            for (k1, k2), a in zip(points, values)]
    path = os.path.join(out_dir, "gain_sweep.csv")
    _write_csv(path, resolved_config(cfg, problem),
               "kappa1,kappa2,abscissa", rows)
    return [path]


def _scenario_sweep_tau(cfg: RunConfig, problem: BeamProblem,
                        ops: DiscreteOperators, out_dir: str) -> list[str]:
    mesh = ops.mesh
    taus = [float(t) for t in cfg.tau_grid.points()]

    def job(tau):
        p = build_problem(cfg, strict=False, tau=tau)
        absc = _abscissa(p, mesh, cfg.n_hist, ops)
        try:
            m_val = decay_constant(p).M
        except (DegenbeamError, ValueError):
            m_val = math.nan
        return absc, m_val

    results = _pool_map(job, taus)
    rows = [f"{_fmt(tau)},{_fmt(a)},{_fmt(m)}"
            for tau, (a, m) in zip(taus, results)]
    path = os.path.join(out_dir, "tau_sweep.csv")
    _write_csv(path, resolved_config(cfg, problem), "tau,abscissa,M", rows)
    return [path]


def _scenario_spectrum(cfg: RunConfig, problem: BeamProblem,
                       ops: DiscreteOperators, out_dir: str) -> list[str]:
    gen = assemble_generator(problem, ops.mesh, cfg.n_hist, ops=ops)
    rep = spectrum(gen, seed=cfg.seed)
    config = resolved_config(cfg, problem)

    rows = [f"{_fmt(ev.real)},{_fmt(ev.imag)}" for ev in rep.eigenvalues]
    csv_path = os.path.join(out_dir, "spectrum.csv")
    _write_csv(csv_path, config, "Re,Im", rows)

    json_path = os.path.join(out_dir, "spectrum.json")
    _write_json(json_path, config, {"spectrum": {
        "abscissa": rep.abscissa,
        "n_unstable": rep.n_unstable,
        "dissipativity_max": rep.dissipativity_max,
        "noise_scale": rep.noise_scale,
        "n_modes": int(rep.eigenvalues.size),
        "n_dofs": gen.n_dofs,
        "n_hist": gen.n_hist,
    }})
    return [csv_path, json_path]


def _scenario_inequalities(cfg: RunConfig, problem: BeamProblem,
                           out_dir: str) -> list[str]:
    report = run_campaign([problem], n_probes=cfg.n_probes, seed=cfg.seed,
                          degree=cfg.probe_degree)
    path = os.path.join(out_dir, "inequality_campaign.json")
    _write_json(path, resolved_config(cfg, problem),
                {"campaign": report.to_dict()})
    return [path]


def _scenario_constants(cfg: RunConfig, problem: BeamProblem,
                        out_dir: str) -> list[str]:
    report = decay_constant(problem)
    path = os.path.join(out_dir, "constants.json")
    _write_json(path, resolved_config(cfg, problem),
                {"constants": report.to_dict()})
    return [path]


# ---- entry point ----

def _parse_args(argv):
    parser = argparse.ArgumentParser(
        prog="degenbeam",
        description="Closed-loop simulation and verification toolkit for a "
                    "degenerate beam with delayed boundary feedback.")
    parser.add_argument("--config", required=True,
                        help="path to the INI config file")
    parser.add_argument("--scenario", choices=SCENARIOS,
                        help="override the scenario named in the config")
    parser.add_argument("--force", action="store_true",
                        help="run even when hypothesis checks fail")
    parser.add_argument("--seed", type=int, default=None,
                        help="seed for randomized campaigns (default 42)")
    parser.add_argument("--out", default=None,
                        help="override the output directory")
    return parser.parse_args(argv)


def main(argv=None) -> int:
    args = _parse_args(argv)
    try:
        cfg = load_config(args.config, scenario=args.scenario, out=args.out,
                          seed=args.seed, force=args.force)
    except (ConfigError, configparser.Error) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    # Hypothesis gate.  Build without enforcement, then check every
    # standing assumption and name each one that fails.
    try:
        problem = build_problem(cfg, strict=False)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DegenbeamError, ValueError) as exc:
        print(f"hypothesis failed: {exc}", file=sys.stderr)
        return 1
    gate = validate(problem)
    if not gate.all_passed:
        for check in gate.failed():
            print(f"hypothesis failed: {check.name}: {check.detail}",
                  file=sys.stderr)
        if not cfg.force:
            return 1
        print("continuing under --force", file=sys.stderr)

    try:
        out_dir = cfg.output_dir
        os.makedirs(out_dir, exist_ok=True)
        if cfg.scenario == "inequalities":
            written = _scenario_inequalities(cfg, problem, out_dir)
        else:
            if cfg.scenario in ("simulate", "sweep_gains", "sweep_tau",
                                "spectrum"):
                mesh = build_mesh(cfg.n, cfg.grading, cfg.ratio)
                ops = assemble(problem, mesh)
            if cfg.scenario == "simulate":
                written = _scenario_simulate(cfg, problem, ops, out_dir)
            elif cfg.scenario == "sweep_gains":
                written = _scenario_sweep_gains(cfg, problem, ops, out_dir)
            elif cfg.scenario == "sweep_tau":
                written = _scenario_sweep_tau(cfg, problem, ops, out_dir)
            elif cfg.scenario == "spectrum":
                written = _scenario_spectrum(cfg, problem, ops, out_dir)
            else:
                written = _scenario_constants(cfg, problem, out_dir)
    except (DegenbeamError, np.linalg.LinAlgError, OSError,
            ValueError) as exc:
        print(f"{cfg.scenario} failed: {exc}", file=sys.stderr)
        return 2

    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
