"""Command-line front end.

Every subcommand writes one CSV with a header line,
LF endings and numbers in ``.15g`` format. Without ``--nu`` the rate is 1
and the time column reads directly in units of ``nu t``.

Exit codes: 0 success, 2 configuration error, 3 numerical invariant
violated, 4 I/O failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .channel import ChannelRun, batch_stderr, channel_batches, small_step_law
from .dynamics import evolve_multipole, ode_trajectory
from .estimators import SU2Depolarizer
from .gellmann import d_of_t, gamma_matrix, phi_matrix, to_coords
from .polarization import degree_pq, make_grid
from .states import (DensityState, StateValidationError, coherent, fock, noon, purity, stokes_parameters,
                     total_variance, trace_distance, twin)

__all__ = ["ScenarioConfig", "ConfigError", "InvariantError", "build_state", "run_evolve", "run_figure1",
           "run_figure2", "run_matrices", "run_mc_compare", "main"]

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT, EXIT_IO = 0, 2, 3, 4
METHODS = ("ode", "multipole", "gellmann", "mc")
CROSS_CHECK_TOL = 1e-9
OBSERVABLES = ("P_s", "P_Q", "D", "purity", "trace_M", "Sx", "Sy", "Sz")


class ConfigError(ValueError):
    pass


class InvariantError(RuntimeError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    subcommand: str = "evolve"
    state: str = "coherent"
    n: int = 2
    nu: float = 1.0
    t_max: float = 0.3
    steps: int = 30
    method: str = "multipole"
    samples: int = 20000
    seed: int = 0
    mc_steps: int = 20
    out: str | None = None

    def validate(self) -> "ScenarioConfig":
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)
        for name, kind in (("n", int), ("steps", int), ("samples", int), ("seed", int), ("mc_steps", int)):
            need(isinstance(getattr(self, name), int) and not isinstance(getattr(self, name), bool),
                 f"{name} must be an integer")
        for name in ("nu", "t_max"):
            need(isinstance(getattr(self, name), (int, float)) and np.isfinite(getattr(self, name)),
                 f"{name} must be a finite number")
        need(self.nu > 0, "nu must be > 0")
        need(self.t_max >= 0, "t_max must be >= 0")
        need(self.steps >= 1, "steps must be >= 1")
        need(self.n >= 0, "n must be >= 0")
        need(self.samples >= 1, "samples must be >= 1")
        need(self.seed >= 0, "seed must be >= 0")
        need(self.mc_steps >= 10, "mc_steps must be >= 10")
        need(self.method in METHODS, f"method must be one of {METHODS}")
        return self

    def times(self) -> np.ndarray:
        # a zero horizon collapses to the single t = 0 row so the time column stays strictly increasing
        if self.t_max == 0:
            return np.zeros(1)
        return np.linspace(0.0, self.t_max, self.steps + 1)


def _parse_floats(text: str, count: int, what: str) -> list[float]:
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) != count:
        raise ConfigError(f"{what} expects {count} comma-separated numbers, got {text!r}")
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise ConfigError(f"{what}: {exc}") from None


def build_state(spec: str, n: int) -> DensityState:
    """Construct the initial state from a spec string.

    ``coherent[:theta,phi]``, ``noon``, ``twin`` (even ``n``), ``fock:m``
    (``m`` photons in mode 1) or ``json:PATH`` / a ``.json`` path.
    """
    kind, _, arg = spec.partition(":")
    kind = kind.strip().lower()
    try:
        if kind == "coherent":
            theta, phi = _parse_floats(arg, 2, "coherent") if arg else (0.0, 0.0)
            return coherent(n, theta, phi)
        if kind == "noon":
            if n < 1:
                raise ConfigError("noon needs n >= 1")
            return noon(n)
        if kind == "twin":
            if n % 2:
                raise ConfigError(f"twin needs an even n, got {n}")
            return twin(n)
        if kind == "fock":
            try:
                m = int(arg)
            except ValueError:
                raise ConfigError(f"fock expects an integer photon count, got {arg!r}") from None
            if not 0 <= m <= n:
                raise ConfigError(f"fock:m needs 0 <= m <= n, got m={m}, n={n}")
            return fock(n, m)
    except (ValueError, StateValidationError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    path = arg if kind == "json" else spec
    if kind != "json" and not spec.lower().endswith(".json"):
        raise ConfigError(f"unrecognised state spec {spec!r}")
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise exc.__class__(f"cannot read state file {path}: {exc.strerror or exc}") from None
    try:
        return DensityState.from_json(text)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"invalid state file {path}: {exc}") from None


def _observables(rho: DensityState, grid) -> list[float]:
    report = degree_pq(rho, grid)
    s = stokes_parameters(rho).s
    return [report.P_s, report.P_Q, report.D, purity(rho), total_variance(rho), s[0], s[1], s[2]]


def _observable_fns(grid):
    return [
        lambda r: degree_pq(r, grid).P_s,
        lambda r: degree_pq(r, grid).P_Q,
        lambda r: degree_pq(r, grid).D,
        purity,
        total_variance,
        lambda r: stokes_parameters(r).s[0],
        lambda r: stokes_parameters(r).s[1],
        lambda r: stokes_parameters(r).s[2],
    ]


def _format_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format(float(x), ".15g") for x in row])
    return buf.getvalue()


def _emit(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    try:
        with path.open("w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from None


def _mc_run(cfg: ScenarioConfig) -> ChannelRun:
    # at least 16 batches so batch-means errors exist for small sample counts
    batch = int(min(4096, max(64, cfg.samples // 16)))
    return ChannelRun(samples=cfg.samples, seed=cfg.seed, steps=cfg.mc_steps, batch_size=batch)


def run_evolve(cfg: ScenarioConfig) -> str:
    """Observables along the trajectory; returns the CSV text and writes it to ``cfg.out``."""
    cfg.validate()
    rho0 = build_state(cfg.state, cfg.n)
    grid = make_grid(rho0.max_photon_number)
    times = cfg.times()
    header = ["t", *OBSERVABLES]
    rows = []
    if cfg.method == "ode":
        states = ode_trajectory(rho0, cfg.nu, times)
        rows = [[t, *_observables(r, grid)] for t, r in zip(times, states)]
    elif cfg.method in ("multipole", "gellmann"):
        for t in times:
            est = SU2Depolarizer(nu=cfg.nu, t=float(t), method=cfg.method).fit([rho0])
            rows.append([t, *_observables(est.transform([rho0])[0], grid)])
    else:
        header += [f"{name}_stderr" for name in OBSERVABLES]
        fns = _observable_fns(grid)
        for t in times:
            if t == 0:
                rows.append([t, *_observables(rho0, grid), *[0.0] * len(OBSERVABLES)])
                continue
            run = _mc_run(cfg)
            batches = channel_batches(rho0, small_step_law(cfg.nu, float(t), cfg.mc_steps), run)
            pairs = [batch_stderr(batches, f) for f in fns]
            rows.append([t, *[v for v, _ in pairs], *[e for _, e in pairs]])
    text = _format_csv(header, rows)
    _emit(text, cfg.out)
    return text


def _ratio_by_coords(rho: DensityState, nu: float, times: np.ndarray) -> np.ndarray:
    n = rho.max_photon_number
    mu0 = to_coords(rho.block(n)).mu
    d = np.atleast_1d(d_of_t(mu0, gamma_matrix(n, nu), phi_matrix(n), times))
    pq = d / (1.0 + d)
    return pq / pq[0]


def _ratio_by_multipoles(rho: DensityState, nu: float, times: np.ndarray) -> np.ndarray:
    grid = make_grid(rho.max_photon_number)
    pq = np.array([degree_pq(evolve_multipole(rho, nu, float(t)), grid).P_Q for t in times])
    return pq / pq[0]


def _ratio_columns(states: list[DensityState], nu: float, times: np.ndarray) -> list[np.ndarray]:
    cols = []
    for rho in states:
        fast = _ratio_by_coords(rho, nu, times)
        ref = _ratio_by_multipoles(rho, nu, times)
        gap = float(np.max(np.abs(fast - ref)))
        if gap > CROSS_CHECK_TOL:
            raise InvariantError(f"Gell-Mann and multipole curves disagree by {gap:.3g} (n={rho.max_photon_number})")
        cols.append(fast)
    return cols


def _time_grid(t_max: float, steps: int) -> np.ndarray:
    return ScenarioConfig(t_max=t_max, steps=steps).validate().times()


def run_figure1(nu: float, t_max: float, steps: int, out=None) -> str:
    """``P_Q(t)/P_Q(0)`` for the two-photon coherent and NOON states."""
    ScenarioConfig(nu=nu, t_max=t_max, steps=steps).validate()
    times = _time_grid(t_max, steps)
    cols = _ratio_columns([coherent(2), noon(2)], nu, times)
    text = _format_csv(["t", "ratio_coherent", "ratio_noon"], np.column_stack([times, *cols]))
    _emit(text, out)
    return text


def run_figure2(nu: float, t_max: float, steps: int, out=None) -> str:
    """``P_Q(t)/P_Q(0)`` for coherent states with one to four photons."""
    ScenarioConfig(nu=nu, t_max=t_max, steps=steps).validate()
    times = _time_grid(t_max, steps)
    cols = _ratio_columns([coherent(n) for n in range(1, 5)], nu, times)
    header = ["t", *[f"ratio_n{n}" for n in range(1, 5)]]
    text = _format_csv(header, np.column_stack([times, *cols]))
    _emit(text, out)
    return text


def _matrix_csv(mat: np.ndarray) -> str:
    return _format_csv([f"c{j + 1}" for j in range(mat.shape[1])], mat)


def run_matrices(n: int, nu: float, gamma_out=None, phi_out=None) -> tuple[str, str]:
    """Write the evolution matrix and the distance form for sector ``n``."""
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ConfigError(f"matrices need an integer n >= 1, got {n!r}")
    if not nu > 0:
        raise ConfigError("nu must be > 0")
    g, p = _matrix_csv(gamma_matrix(n, nu)), _matrix_csv(phi_matrix(n))
    if gamma_out is not None:
        _emit(g, gamma_out)
    if phi_out is not None:
        _emit(p, phi_out)
    return g, p


def run_mc_compare(cfg: ScenarioConfig) -> str:
    """Monte Carlo channel against the exact solution along the time grid."""
    cfg.validate()
    rho0 = build_state(cfg.state, cfg.n)
    grid = make_grid(rho0.max_photon_number)
    p_s = _observable_fns(grid)[0]
    rows = []
    for t in cfg.times():
        exact = evolve_multipole(rho0, cfg.nu, float(t))
        if t == 0:
            rows.append([t, 0.0, p_s(rho0), 0.0, p_s(rho0)])
            continue
        run = _mc_run(cfg)
        batches = channel_batches(rho0, small_step_law(cfg.nu, float(t), cfg.mc_steps), run)
        value, err = batch_stderr(batches, p_s)
        rows.append([t, trace_distance(batches.estimate(), exact), value, err, p_s(exact)])
    text = _format_csv(["t", "trace_distance", "P_s_mc", "P_s_stderr", "P_s_exact"], rows)
    _emit(text, cfg.out)
    return text


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    S = argparse.SUPPRESS
    common.add_argument("--config", default=S, help="JSON file with any of the flags below; flags win")
    common.add_argument("--n", type=int, default=S, help="photon number (default 2)")
    common.add_argument("--state", default=S, help="coherent[:theta,phi] | noon | twin | fock:m | json:PATH")
    common.add_argument("--nu", type=float, default=S, help="rate; time column becomes physical time")
    common.add_argument("--t-max", dest="t_max", type=float, default=S, help="final time")
    common.add_argument("--steps", type=int, default=S, help="number of time intervals")
    common.add_argument("--method", choices=METHODS, default=S)
    common.add_argument("--samples", type=int, default=S, help="Monte Carlo samples")
    common.add_argument("--mc-steps", dest="mc_steps", type=int, default=S,
                        help="small rotations per Monte Carlo trajectory (default 20)")
    common.add_argument("--seed", type=int, default=S)
    common.add_argument("--out", default=S, help="output CSV path (stdout when omitted)")

    parser = argparse.ArgumentParser(prog="su2depol", description="SU(2)-invariant depolarization of two-mode light")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, help_text in (("evolve", "observables along a trajectory"),
                            ("figure1", "P_Q ratio for n=2 coherent and NOON states"),
                            ("figure2", "P_Q ratio for coherent states n=1..4"),
                            ("gamma", "evolution matrix of the Gell-Mann coordinates"),
                            ("phi", "quadratic form giving D from the Gell-Mann coordinates"),
                            ("mc-compare", "Monte Carlo channel against the exact solution")):
        sub.add_parser(name, parents=[common], help=help_text)
    return parser


_CONFIG_KEYS = {f.name for f in fields(ScenarioConfig)} - {"subcommand"}


def _load_config(path: str) -> dict:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    cfg = {k.replace("-", "_"): v for k, v in raw.items()}
    unknown = set(cfg) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
    return cfg


def resolve_config(args: argparse.Namespace) -> ScenarioConfig:
    values = vars(args).copy()
    subcommand = values.pop("subcommand")
    merged = _load_config(values.pop("config")) if "config" in values else {}
    merged.update(values)
    if isinstance(merged.get("nu"), int) and not isinstance(merged.get("nu"), bool):
        merged["nu"] = float(merged["nu"])
    return replace(ScenarioConfig(subcommand=subcommand), **merged).validate()


def _dispatch(cfg: ScenarioConfig) -> None:
    if cfg.subcommand == "evolve":
        run_evolve(cfg)
    elif cfg.subcommand == "figure1":
        run_figure1(cfg.nu, cfg.t_max, cfg.steps, cfg.out)
    elif cfg.subcommand == "figure2":
        run_figure2(cfg.nu, cfg.t_max, cfg.steps, cfg.out)
    elif cfg.subcommand in ("gamma", "phi"):
        g, p = run_matrices(cfg.n, cfg.nu)
        _emit(g if cfg.subcommand == "gamma" else p, cfg.out)
    elif cfg.subcommand == "mc-compare":
        run_mc_compare(cfg)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve_config(args)
        _dispatch(cfg)
    except (ConfigError, StateValidationError, TypeError) as exc:
        print(f"su2depol: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantError as exc:
        print(f"su2depol: invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except OSError as exc:
        print(f"su2depol: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK
