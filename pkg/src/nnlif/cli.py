"""Config-driven command line front end.

Configuration is a plain-text document of dotted keys (`params.b = 0.9`),
optionally seeded from a named preset and overridden by repeated
`--set key=value` flags.  Every emitted file is listed with a content
hash in the run manifest; data files carry no wall-clock content, so a
given config reproduces byte-identical output.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import itertools
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import diagnostics, freeboundary, kernels, timescale
from .errors import ConfigurationError, NnlifError
from .grid import DensityProfile, Grid, build_grid, gaussian_profile, project_function
from .model import DilationParams, ModelParams, classify_regime
from .solver import StepperConfig, TauTrajectory, run_limit_equation, run_tau
from .steady import steady_numeric, steady_state

FLOAT_FORMAT = "%.17g"

PRESETS: dict[str, dict[str, str]] = {
    # Eternal blow-up demonstration: strongly excitatory, Gaussian start.
    "fig-eternal": {
        "params.v_l": "0", "params.v_r": "0", "params.v_f": "1",
        "params.mu0": "0", "params.b": "1.5", "params.a0": "1", "params.a1": "1",
        "initial.kind": "gaussian", "initial.center": "-1", "initial.variance": "0.17",
        "stepper.dtau": "1e-3", "stepper.horizon": "5",
    },
    # Transient blow-up with recovery: mildly excitatory, localized start.
    "fig-jump": {
        "params.v_l": "0", "params.v_r": "0", "params.v_f": "1",
        "params.mu0": "0", "params.b": "0.9", "params.a0": "0.5", "params.a1": "1",
        "initial.kind": "gaussian", "initial.center": "0.2", "initial.variance": "0.01",
        "stepper.dtau": "1e-4", "stepper.horizon": "10",
    },
}

_DEFAULTS: dict[str, str] = {
    "dilation.c": "1",
    "grid.n": "1024",
    "grid.tail_tolerance": "1e-12",
    "grid.widen": "1",
    "stepper.snapshot_stride": "100",
    "stepper.blowup_epsilon": "1e-8",
    "initial.kind": "gaussian",
    "entropy.equation": "limit",
    "entropy.choice": "",
    "poincare.weight": "steady",
    "poincare.n": "512",
    "poincare.x_max": "40",
}

_KNOWN_KEYS = set(_DEFAULTS) | {
    "preset",
    "params.v_l", "params.v_r", "params.v_f", "params.mu0",
    "params.b", "params.a0", "params.a1",
    "grid.v_min",
    "stepper.dtau", "stepper.horizon",
    "initial.center", "initial.variance", "initial.path",
}


@dataclass
class RunConfig:
    params: ModelParams
    dil: DilationParams
    grid_n: int
    tail_tolerance: float
    widen: float
    v_min: float | None
    stepper: StepperConfig
    initial_kind: str
    initial_center: float | None
    initial_variance: float | None
    initial_path: str | None
    entropy_equation: str
    entropy_choice: str
    poincare_weight: str
    poincare_n: int
    poincare_x_max: float
    sweep: dict[str, list[str]] = field(default_factory=dict)
    raw: dict[str, str] = field(default_factory=dict)

    def make_grid(self) -> Grid:
        return build_grid(
            self.params, self.grid_n, self.tail_tolerance,
            widen=self.widen, v_min_override=self.v_min,
        )

    def make_initial(self, grid: Grid) -> DensityProfile:
        kind = self.initial_kind
        if kind == "gaussian":
            if self.initial_center is None or self.initial_variance is None:
                raise ConfigurationError("initial.center and initial.variance are required")
            return gaussian_profile(grid, self.initial_center, self.initial_variance)
        if kind in ("steady_excitatory", "steady_inhibitory"):
            want_positive = kind == "steady_excitatory"
            if (self.params.b > 0.0) != want_positive:
                raise ConfigurationError(f"initial.kind={kind} conflicts with params.b")
            reference = steady_state(self.params, grid)
            values = reference.profile.values.copy()
            profile = DensityProfile(grid, values)
            values /= profile.mass()
            return profile
        if kind == "from_csv":
            if not self.initial_path:
                raise ConfigurationError("initial.path is required for initial.kind=from_csv")
            data = np.loadtxt(self.initial_path, delimiter=",", skiprows=1)
            return project_function(
                lambda v: np.interp(v, data[:, 0], data[:, 1], left=0.0, right=0.0),
                grid, normalize=True,
            )
        raise ConfigurationError(f"unknown initial.kind: {kind!r}")


def _parse_lines(text: str, source: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{lineno}: expected `key = value`, got {raw_line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key] = value
    return values


def _coerce(key: str, value: str, kind: type) -> float | int | str:
    try:
        return kind(value)
    except ValueError as exc:
        raise ConfigurationError(f"{key}: cannot parse {value!r} as {kind.__name__}") from exc


def parse_config(
    text: str = "", *, source: str = "<config>", overrides: dict[str, str] | None = None
) -> RunConfig:
    """Build a fully validated RunConfig from a key-value document, an
    optional preset, and explicit overrides (applied last)."""
    layered = dict(_DEFAULTS)
    file_values = _parse_lines(text, source)
    merged = {**file_values, **(overrides or {})}

    preset = merged.pop("preset", None)
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigurationError(
                f"preset: unknown preset {preset!r}; available: {sorted(PRESETS)}"
            )
        layered.update(PRESETS[preset])
    layered.update(merged)

    sweep: dict[str, list[str]] = {}
    for key in list(layered):
        if key.startswith("sweep."):
            target = key[len("sweep."):]
            if target not in _KNOWN_KEYS:
                raise ConfigurationError(f"{key}: unknown sweep target {target!r}")
            sweep[target] = [v.strip() for v in layered.pop(key).split(",")]

    unknown = set(layered) - _KNOWN_KEYS
    if unknown:
        raise ConfigurationError(f"unknown configuration key(s): {sorted(unknown)}")

    for required in ("params.v_l", "params.v_r", "params.v_f", "params.mu0",
                     "params.b", "params.a0", "params.a1"):
        if required not in layered:
            raise ConfigurationError(f"missing required key {required}")

    params = ModelParams(
        v_l=_coerce("params.v_l", layered["params.v_l"], float),
        v_r=_coerce("params.v_r", layered["params.v_r"], float),
        v_f=_coerce("params.v_f", layered["params.v_f"], float),
        mu0=_coerce("params.mu0", layered["params.mu0"], float),
        b=_coerce("params.b", layered["params.b"], float),
        a0=_coerce("params.a0", layered["params.a0"], float),
        a1=_coerce("params.a1", layered["params.a1"], float),
    )
    c_raw = layered["dilation.c"]
    c = params.a0 / params.a1 if c_raw == "a0/a1" else _coerce("dilation.c", c_raw, float)

    if "stepper.dtau" not in layered or "stepper.horizon" not in layered:
        raise ConfigurationError("missing required key stepper.dtau / stepper.horizon")
    stepper = StepperConfig(
        dtau=_coerce("stepper.dtau", layered["stepper.dtau"], float),
        horizon=_coerce("stepper.horizon", layered["stepper.horizon"], float),
        snapshot_stride=_coerce(
            "stepper.snapshot_stride", layered["stepper.snapshot_stride"], int
        ),
        blowup_epsilon=_coerce(
            "stepper.blowup_epsilon", layered["stepper.blowup_epsilon"], float
        ),
    )

    def opt_float(key: str) -> float | None:
        return _coerce(key, layered[key], float) if key in layered else None

    return RunConfig(
        params=params,
        dil=DilationParams.for_params(params, c),
        grid_n=_coerce("grid.n", layered["grid.n"], int),
        tail_tolerance=_coerce("grid.tail_tolerance", layered["grid.tail_tolerance"], float),
        widen=_coerce("grid.widen", layered["grid.widen"], float),
        v_min=opt_float("grid.v_min"),
        stepper=stepper,
        initial_kind=layered["initial.kind"],
        initial_center=opt_float("initial.center"),
        initial_variance=opt_float("initial.variance"),
        initial_path=layered.get("initial.path"),
        entropy_equation=layered["entropy.equation"],
        entropy_choice=layered["entropy.choice"],
        poincare_weight=layered["poincare.weight"],
        poincare_n=_coerce("poincare.n", layered["poincare.n"], int),
        poincare_x_max=_coerce("poincare.x_max", layered["poincare.x_max"], float),
        sweep=sweep,
        raw=dict(layered),
    )


class RunDirectory:
    """Collects emitted files and writes a hashing manifest at the end."""

    def __init__(self, root: Path):
        self.root = root
        root.mkdir(parents=True, exist_ok=True)
        self.files: dict[str, str] = {}

    def write_text(self, name: str, text: str) -> None:
        path = self.root / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        self.files[name] = hashlib.sha256(text.encode()).hexdigest()

    def write_csv(self, name: str, header: str, columns: list[np.ndarray]) -> None:
        lines = [header]
        for row in zip(*columns):
            lines.append(",".join(_fmt(x) for x in row))
        self.write_text(name, "\n".join(lines) + "\n")

    def write_json(self, name: str, payload: dict) -> None:
        self.write_text(name, json.dumps(payload, indent=2, sort_keys=True) + "\n")

    def finalize(self) -> None:
        manifest = json.dumps({"files": dict(sorted(self.files.items()))},
                              indent=2, sort_keys=True) + "\n"
        (self.root / "manifest.json").write_text(manifest)


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf"
    return FLOAT_FORMAT % x


def _emit_profile(out: RunDirectory, name: str, grid: Grid, values: np.ndarray) -> None:
    out.write_csv(name, "v,p", [grid.nodes, values])


def _emit_trajectory(out: RunDirectory, traj: TauTrajectory) -> None:
    out.write_csv(
        "series.csv", "tau,tilde_n,M,mass",
        [traj.taus, traj.tilde_n, traj.flux, traj.mass],
    )
    tmap = timescale.forward_time(traj)
    ts, n_series, mass = timescale.generalized_series(traj, tmap)
    out.write_csv("tseries.csv", "t,N,mass", [ts, n_series, mass])
    index_rows = []
    for i, (tau, values) in enumerate(traj.snapshots):
        name = f"snapshots/snap_{i:06d}.csv"
        _emit_profile(out, name, traj.grid, values)
        index_rows.append(f"{_fmt(tau)},{name}")
    out.write_text("snapshots/index.csv", "tau,file\n" + "\n".join(index_rows) + "\n")


def _run_summary(cfg: RunConfig, traj: TauTrajectory) -> dict:
    estimate, status = timescale.lifespan(traj)
    return {
        "backend": kernels.BACKEND,
        "regime": classify_regime(cfg.params).value,
        "clamped_mass": traj.clamped_mass,
        "min_value": traj.min_value,
        "left_leak": traj.left_leak,
        "lifespan_estimate": estimate,
        "lifespan_status": status.value,
        "config": cfg.raw,
    }


def _simulate(cfg: RunConfig, out: RunDirectory) -> TauTrajectory:
    grid = cfg.make_grid()
    p0 = cfg.make_initial(grid)
    traj = run_tau(p0, cfg.params, cfg.dil, cfg.stepper)
    _emit_trajectory(out, traj)
    out.write_json("run.json", _run_summary(cfg, traj))
    return traj


def _cmd_simulate(cfg: RunConfig, out: RunDirectory) -> None:
    _simulate(cfg, out)


def _cmd_steady(cfg: RunConfig, out: RunDirectory) -> None:
    grid = cfg.make_grid()
    state = steady_state(cfg.params, grid)
    _emit_profile(out, "steady_profile.csv", grid, state.profile.values)
    payload = {
        "regime": state.regime.value,
        "Z": state.z,
        "M_inf": state.m_inf,
        "mass": state.profile.mass(),
        "normalized": state.normalized,
    }
    if not state.normalized:
        payload["mass_note"] = "divergent under grid widening (non-integrable reference)"
    if cfg.params.b > 0.0:
        numeric = steady_numeric(cfg.params, grid)
        _emit_profile(out, "steady_numeric.csv", grid, numeric.values)
        payload["numeric_gap_linf"] = float(
            np.max(np.abs(numeric.values - state.profile.values))
        )
    out.write_json("steady.json", payload)


def _cmd_jump(cfg: RunConfig, out: RunDirectory) -> None:
    traj = _simulate(cfg, out)
    events = timescale.detect_blowups(traj)
    lines = []
    for event in events:
        record = {
            "tau1": event.tau1, "tau2": event.tau2, "t_star": event.t_star,
            "delta_tau": event.delta_tau, "terminated": event.terminated,
            "l1_gap": None, "delta_tau_independent": None,
        }
        check = timescale.verify_jump(traj, event)
        record["l1_gap"] = check.l1_gap
        record["delta_tau_independent"] = check.delta_tau_independent
        record["horizon_exhausted"] = check.horizon_exhausted
        lines.append(json.dumps(record, sort_keys=True))
    out.write_text("events.jsonl", "\n".join(lines) + ("\n" if lines else ""))


def _cmd_entropy(cfg: RunConfig, out: RunDirectory) -> None:
    grid = cfg.make_grid()
    p0 = cfg.make_initial(grid)
    reference = steady_state(cfg.params, grid)
    choice_name = cfg.entropy_choice or (
        "quadratic-centered" if cfg.params.b > 0.0 else "quadratic"
    )
    if choice_name not in diagnostics.ENTROPY_CHOICES:
        raise ConfigurationError(f"entropy.choice: unknown generator {choice_name!r}")
    choice = diagnostics.ENTROPY_CHOICES[choice_name]

    if cfg.entropy_equation == "limit":
        traj = run_limit_equation(p0, cfg.params, cfg.stepper, report_c=cfg.dil.c)
        report = diagnostics.entropy_series(traj, reference, choice)
    elif cfg.entropy_equation == "nonlinear":
        dil = DilationParams.flux_convention(cfg.params)
        traj = run_tau(p0, cfg.params, dil, cfg.stepper)
        report = diagnostics.entropy_series(traj, reference, choice, dil)
    else:
        raise ConfigurationError(
            f"entropy.equation must be 'limit' or 'nonlinear', got {cfg.entropy_equation!r}"
        )
    out.write_csv(
        "entropy.csv", "tau,S,D,E,nu,hVR",
        [report.taus, report.entropy, report.dissipation,
         report.perturbation, report.nu, report.h_reset],
    )
    out.write_json("run.json", _run_summary(cfg, traj))


def _cmd_fb_check(cfg: RunConfig, out: RunDirectory) -> None:
    grid = cfg.make_grid()
    p0 = cfg.make_initial(grid)
    traj = run_tau(p0, cfg.params, cfg.dil, cfg.stepper)
    check = freeboundary.cross_check_transform(traj)
    out.write_csv(
        "fb.csv", "s,gamma,beta,D,ell,ell_R",
        [check.s, check.state.gamma, check.state.beta,
         check.state.drift, check.path.ell, check.path.ell_r],
    )
    out.write_json("fb.json", {
        "beta_gap": check.beta_gap,
        "lipschitz_max": check.lipschitz_max,
        "bounds_ok": check.bounds_ok,
    })


def _cmd_poincare(cfg: RunConfig, out: RunDirectory) -> None:
    n = cfg.poincare_n
    if cfg.poincare_weight == "constant":
        nodes = np.linspace(0.0, 1.0, n + 1)
        weights = np.ones_like(nodes)
    elif cfg.poincare_weight == "appendix":
        nodes = np.linspace(0.0, cfg.poincare_x_max, n + 1)
        weights = diagnostics.appendix_weight(nodes)
    elif cfg.poincare_weight == "steady":
        grid = build_grid(cfg.params, n, cfg.tail_tolerance,
                          widen=cfg.widen, v_min_override=cfg.v_min)
        nodes = grid.nodes
        weights = steady_state(cfg.params, grid).profile.values
    else:
        raise ConfigurationError(
            f"poincare.weight must be constant/appendix/steady, got {cfg.poincare_weight!r}"
        )
    alpha = diagnostics.poincare_constant(weights, nodes)
    out.write_json("poincare.json", {"alpha": alpha, "n": n, "weight_id": cfg.poincare_weight})


def _cmd_sweep(cfg: RunConfig, out: RunDirectory) -> None:
    if not cfg.sweep:
        raise ConfigurationError("sweep requires at least one sweep.<key> entry")
    keys = sorted(cfg.sweep)
    combos = list(itertools.product(*(cfg.sweep[k] for k in keys)))
    index = []
    workers = max(1, int(os.environ.get("NNLIF_THREADS", "1")))

    def one(idx_combo: tuple[int, tuple[str, ...]]) -> tuple[int, dict]:
        idx, combo = idx_combo
        overrides = dict(zip(keys, combo))
        sub = RunDirectory(out.root / f"run_{idx:03d}")
        entry = {"run": f"run_{idx:03d}", "overrides": overrides}
        try:
            sub_cfg = parse_config("", overrides={**cfg.raw, **overrides})
            _simulate(sub_cfg, sub)
            sub.finalize()
            entry["status"] = "ok"
        except NnlifError as exc:
            (sub.root / "FAILED").write_text(f"{type(exc).__name__}: {exc}\n")
            entry["status"] = "failed"
            entry["error"] = str(exc)
        return idx, entry

    tasks = list(enumerate(combos))
    if workers == 1:
        results = [one(t) for t in tasks]
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, tasks))
    for _, entry in sorted(results):
        index.append(entry)
    out.write_json("index.json", {"sweep": keys, "runs": index})


_COMMANDS = {
    "simulate": _cmd_simulate,
    "steady": _cmd_steady,
    "jump": _cmd_jump,
    "entropy": _cmd_entropy,
    "fb-check": _cmd_fb_check,
    "poincare": _cmd_poincare,
    "sweep": _cmd_sweep,
}


def run_scenario(cfg: RunConfig, subcommand: str, out_dir: str | Path) -> None:
    """Orchestrate one subcommand into an output directory with manifest."""
    if subcommand not in _COMMANDS:
        raise ConfigurationError(f"unknown subcommand {subcommand!r}")
    out = RunDirectory(Path(out_dir))
    _COMMANDS[subcommand](cfg, out)
    out.finalize()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nnlif",
        description="Numerical laboratory for the time-dilated mean-field "
                    "integrate-and-fire equation",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, default=None, help="key-value config file")
        p.add_argument("--set", dest="sets", action="append", default=[],
                       metavar="KEY=VALUE", help="override a config key")
        p.add_argument("--out", type=Path, required=True, help="output directory")
        p.add_argument("--preset", default=None, choices=sorted(PRESETS))
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = args.config.read_text() if args.config else ""
        overrides: dict[str, str] = {}
        if args.preset:
            overrides["preset"] = args.preset
        for item in args.sets:
            if "=" not in item:
                raise ConfigurationError(f"--set expects KEY=VALUE, got {item!r}")
            key, value = item.split("=", 1)
            overrides[key.strip()] = value.strip()
        cfg = parse_config(text, source=str(args.config or "<cli>"), overrides=overrides)
        run_scenario(cfg, args.command, args.out)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except NnlifError as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
