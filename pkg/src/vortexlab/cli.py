"""Configuration, experiment orchestration, and file I/O.

Configs are flat key-value text with dotted keys (`domain.kind`,
`vortices.u[0].x`); every run writes a machine-readable JSON report (also
on failure, tagged with the failing stage), and identical config + seed
produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import cnls, geometry, profile_gamma, reduced_dynamics, vortex_tracking
from .errors import (
    BlowupError,
    ConfigurationError,
    DomainError,
    SolverError,
    TrackingError,
    VortexLabError,
)
from .harmonic_map import VortexConfiguration, VortexFamily

__all__ = ["RunConfig", "load_config", "run_experiment", "write_report", "main"]

EXPERIMENTS = ("profile", "gamma", "reduced", "simulate", "compare", "track")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


class ConfigError(ConfigurationError):
    """Config parse/validation error with the offending key and line."""

    def __init__(self, message, key=None, line=None):
        tag = ""
        if key is not None:
            tag += f" (key {key!r}"
            tag += f", line {line})" if line is not None else ")"
        elif line is not None:
            tag += f" (line {line})"
        super().__init__(message + tag)
        self.key = key
        self.line = line


@dataclass
class RunConfig:
    experiment: str
    domain: object
    grid: geometry.GridSpec | None
    epsilon: float
    g: float
    dt: float
    T: float
    vortices: VortexConfiguration
    snapshot_stride: int = 8
    seed: int = 0
    out_dir: str = "."
    profile_R: float = 200.0
    profile_mesh: int = 2048
    gamma_R: tuple = (200.0, 400.0, 800.0)
    ode_dt: float = 1e-3
    track_max_jump: float = 0.1
    snapshots: tuple = ()
    raw: dict = field(default_factory=dict)


_VORTEX_KEY = re.compile(r"^vortices\.(u|v)\[(\d+)\]\.(x|y|degree)$")

_SCALAR_KEYS = {
    "experiment",
    "domain.kind",
    "domain.radius",
    "domain.lx",
    "domain.ly",
    "grid.nx",
    "grid.ny",
    "epsilon",
    "g",
    "dt",
    "T",
    "snapshot_stride",
    "seed",
    "profile.R",
    "profile.mesh",
    "ode.dt",
    "track.max_jump",
}
_VECTOR_KEYS = {"domain.center", "domain.corner", "gamma.R", "track.snapshots"}


def _parse_lines(text):
    entries = {}
    for lineno, rawline in enumerate(text.splitlines(), start=1):
        line = rawline.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected `key = value`", line=lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError("empty key", line=lineno)
        if key in entries:
            raise ConfigError("duplicate key", key=key, line=lineno)
        if key not in _SCALAR_KEYS and key not in _VECTOR_KEYS and not _VORTEX_KEY.match(key):
            raise ConfigError("unknown key", key=key, line=lineno)
        entries[key] = (value, lineno)
    return entries


def _get(entries, key, conv, default=None, required=False):
    if key not in entries:
        if required:
            raise ConfigError("missing required key", key=key)
        return default
    value, lineno = entries[key]
    try:
        return conv(value)
    except ValueError as exc:
        raise ConfigError(f"bad value {value!r}: {exc}", key=key, line=lineno) from None


def _floats(value):
    return tuple(float(tok) for tok in value.split())


def load_config(path) -> RunConfig:
    """Parse and validate a run configuration file."""
    text = Path(path).read_text()
    entries = _parse_lines(text)

    experiment = _get(entries, "experiment", str, required=True)
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {EXPERIMENTS}", key="experiment")

    kind = _get(entries, "domain.kind", str, required=True)
    if kind == "disk":
        center = _get(entries, "domain.center", _floats, default=(0.0, 0.0))
        radius = _get(entries, "domain.radius", float, required=True)
        if len(center) != 2:
            raise ConfigError("domain.center needs two numbers", key="domain.center")
        domain = geometry.Disk(tuple(center), radius)
    elif kind == "rectangle":
        corner = _get(entries, "domain.corner", _floats, required=True)
        lx = _get(entries, "domain.lx", float, required=True)
        ly = _get(entries, "domain.ly", float, required=True)
        if len(corner) != 2:
            raise ConfigError("domain.corner needs two numbers", key="domain.corner")
        domain = geometry.Rectangle(tuple(corner), lx, ly)
    else:
        raise ConfigError("domain.kind must be disk or rectangle", key="domain.kind")

    g = _get(entries, "g", float, default=0.5)
    if not 0.0 <= g < 1.0:
        raise ConfigError(f"g = {g} outside the open interval (0,1) (g = 0 allowed "
                          "for the decoupled oracle)", key="g")
    epsilon = _get(entries, "epsilon", float, default=1.0 / 32.0)
    if epsilon <= 0:
        raise ConfigError("epsilon must be positive", key="epsilon")
    dt = _get(entries, "dt", float, default=0.25 * epsilon**2)
    if dt <= 0:
        raise ConfigError("dt must be positive", key="dt")
    T = _get(entries, "T", float, default=0.1)
    if T <= 0:
        raise ConfigError("T must be positive", key="T")

    nx = _get(entries, "grid.nx", int)
    ny = _get(entries, "grid.ny", int)
    grid = None
    if nx is not None or ny is not None:
        if nx is None or ny is None:
            raise ConfigError("grid.nx and grid.ny must be given together", key="grid.nx")
        grid = geometry.GridSpec(nx, ny)

    fams = {"u": {}, "v": {}}
    for key, (value, lineno) in entries.items():
        m = _VORTEX_KEY.match(key)
        if not m:
            continue
        comp, idx, fld = m.group(1), int(m.group(2)), m.group(3)
        conv = int if fld == "degree" else float
        try:
            fams[comp].setdefault(idx, {})[fld] = conv(value)
        except ValueError:
            raise ConfigError("bad vortex value", key=key, line=lineno) from None

    def family(comp):
        entries_ = fams[comp]
        if not entries_:
            return VortexFamily.empty()
        positions, degrees = [], []
        for idx in range(len(entries_)):
            if idx not in entries_:
                raise ConfigError(f"vortices.{comp} indices must be contiguous from 0",
                                  key=f"vortices.{comp}[{idx}]")
            rec = entries_[idx]
            for fld in ("x", "y", "degree"):
                if fld not in rec:
                    raise ConfigError("incomplete vortex record",
                                      key=f"vortices.{comp}[{idx}].{fld}")
            if rec["degree"] not in (1, -1):
                raise ConfigError("degree must be +1 or -1",
                                  key=f"vortices.{comp}[{idx}].degree")
            positions.append((rec["x"], rec["y"]))
            degrees.append(rec["degree"])
        return VortexFamily(np.array(positions), np.array(degrees))

    vortices = VortexConfiguration(u=family("u"), v=family("v"))
    for fam_name, fam in (("u", vortices.u), ("v", vortices.v)):
        for i, p in enumerate(fam.positions):
            if geometry.distance_to_boundary(domain, p) <= 0:
                raise ConfigError("vortex is not strictly inside the domain",
                                  key=f"vortices.{fam_name}[{i}]")
    if (len(vortices.u) or len(vortices.v)) and not vortices.separation(domain) > 0:
        raise ConfigError("vortex configuration violates min_separation > 0",
                          key="vortices")

    raw = {key: value for key, (value, _) in sorted(entries.items())}
    return RunConfig(
        experiment=experiment,
        domain=domain,
        grid=grid,
        epsilon=epsilon,
        g=g,
        dt=dt,
        T=T,
        vortices=vortices,
        snapshot_stride=_get(entries, "snapshot_stride", int, default=8),
        seed=_get(entries, "seed", int, default=0),
        profile_R=_get(entries, "profile.R", float, default=200.0),
        profile_mesh=_get(entries, "profile.mesh", int, default=2048),
        gamma_R=_get(entries, "gamma.R", _floats, default=(200.0, 400.0, 800.0)),
        ode_dt=_get(entries, "ode.dt", float, default=1e-3),
        track_max_jump=_get(entries, "track.max_jump", float, default=0.1),
        snapshots=_get(entries, "track.snapshots", lambda v: tuple(v.split()), default=()),
        raw=raw,
    )


def content_hash(path) -> str:
    """Git-blob style sha1 of a file's bytes."""
    data = Path(path).read_bytes()
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def write_report(path, payload):
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _default_sim_grid(cfg) -> geometry.GridSpec:
    """Cells per core held >= 8 when the config leaves the grid implicit."""
    if cfg.grid is not None:
        return cfg.grid
    n = 8
    need_x = 8.0 * cfg.domain.lx / cfg.epsilon
    need_y = 8.0 * cfg.domain.ly / cfg.epsilon
    while n < max(need_x, need_y):
        n *= 2
    return geometry.GridSpec(n, n)


def _write_diag_csv(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "mass_u", "mass_v", "energy", "Qx", "Qy"])
        for row in rows:
            writer.writerow([format(v, ".17g") for v in row])


def _simulate(cfg, out, write_snapshots=True, vortices=None, record=None):
    """Shared PDE loop: build, step, snapshot, diagnose."""
    vortices = vortices if vortices is not None else cfg.vortices
    grid = _default_sim_grid(cfg)
    profile = profile_gamma.solve_profile(cfg.g, cfg.profile_R, mesh=cfg.profile_mesh)
    state = cnls.build_initial_data(cfg.domain, grid, vortices, profile, cfg.epsilon)
    n_steps = int(round(cfg.T / cfg.dt))
    snaps = [state]
    diags = []

    def diag(st):
        mu, mv = cnls.mass(st)
        q = cnls.momentum(st)
        diags.append((st.t, mu, mv, cnls.energy(st), q[0], q[1]))

    diag(state)
    for k in range(n_steps):
        state = cnls.step(state, cfg.dt)
        if (k + 1) % cfg.snapshot_stride == 0 or k == n_steps - 1:
            snaps.append(state)
            diag(state)
            if write_snapshots:
                cnls.write_snapshot(Path(out) / f"snapshot_{len(snaps)-1:05d}.cnls", state)
    _write_diag_csv(Path(out) / "diagnostics.csv", diags)
    if record is not None:
        record["n_steps"] = n_steps
        record["grid"] = [grid.nx, grid.ny]
    return snaps, diags


def _traj_payload(traj):
    return {
        "reason": traj.reason,
        "samples": len(traj.times),
        "vortices": len(traj.labels),
        "w_drift_u": traj.metadata.get("w_drift_u"),
        "w_drift_v": traj.metadata.get("w_drift_v"),
    }


def _sup_deviation(times_a, pos_a, times_b, pos_b):
    """sup_t |a(t) - b(t)| per vortex, b linearly interpolated in time."""
    devs = []
    for j in range(pos_a.shape[1]):
        bx = np.interp(times_a, times_b, pos_b[:, j, 0])
        by = np.interp(times_a, times_b, pos_b[:, j, 1])
        devs.append(float(np.hypot(pos_a[:, j, 0] - bx, pos_a[:, j, 1] - by).max()))
    return devs


def run_compare(cfg: RunConfig, out) -> dict:
    """PDE-with-tracking against the reduced ODE from the same data.

    Emits per-vortex sup deviations, conservation diagnostics, and the
    decoupling delta: the change of the v-component trajectory when the
    u-family is removed with everything else held fixed.
    """
    out = Path(out)
    metrics = {}
    snaps, diags = _simulate(cfg, out, write_snapshots=False, record=metrics)
    floor = vortex_tracking.default_modulus_floor(cfg.g)
    tracks = vortex_tracking.track_run(snaps, cfg.track_max_jump, floor)

    ode = reduced_dynamics.integrate(
        reduced_dynamics.OdeState(0.0, cfg.vortices), cfg.domain, cfg.T, cfg.ode_dt
    )
    metrics["ode_reason"] = ode.reason
    metrics["w_drift_u"] = ode.metadata["w_drift_u"]
    metrics["w_drift_v"] = ode.metadata["w_drift_v"]

    for comp in ("u", "v"):
        tr = tracks[comp]
        reduced_dynamics.write_trajectory_csv(out / f"pde_{comp}.csv", tr)
        ode_comp = ode.component(comp)
        if len(tr.labels) and len(ode_comp.labels):
            devs = _sup_deviation(tr.times, tr.positions, ode_comp.times, ode_comp.positions)
            metrics[f"sup_deviation_{comp}"] = devs
    reduced_dynamics.write_trajectory_csv(out / "ode.csv", ode)

    e0 = diags[0][3]
    metrics["energy_drift"] = abs(diags[-1][3] / e0 - 1.0) if e0 else 0.0
    metrics["mass_drift_u"] = abs(diags[-1][1] / diags[0][1] - 1.0)
    metrics["mass_drift_v"] = abs(diags[-1][2] / diags[0][2] - 1.0)

    # decoupling probe: drop the u-family, keep everything else fixed
    if len(cfg.vortices.u) and len(cfg.vortices.v):
        v_only = VortexConfiguration(u=VortexFamily.empty(), v=cfg.vortices.v)
        snaps2, _ = _simulate(cfg, out, write_snapshots=False, vortices=v_only)
        tracks2 = vortex_tracking.track_run(snaps2, cfg.track_max_jump, floor)
        tr_v, tr_v2 = tracks["v"], tracks2["v"]
        metrics["decoupling_delta"] = max(
            _sup_deviation(tr_v.times, tr_v.positions, tr_v2.times, tr_v2.positions)
        )
    return metrics


def run_experiment(cfg: RunConfig, out) -> dict:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    metrics = {}
    if cfg.experiment == "profile":
        prof = profile_gamma.solve_profile(cfg.g, cfg.profile_R, mesh=cfg.profile_mesh)
        with open(out / "profile.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["r", "f1", "f2"])
            for r, f1, f2 in zip(prof.r, prof.f1, prof.f2):
                writer.writerow([format(v, ".17g") for v in (r, f1, f2)])
        fit = profile_gamma.tail_fit(prof) if prof.R >= 100 else None
        metrics = {"residual": prof.residual, "g": cfg.g, "R": cfg.profile_R}
        if fit:
            metrics.update(alpha_hat=fit.alpha_hat, beta_hat=fit.beta_hat,
                           fit_warning=fit.warning)
    elif cfg.experiment == "gamma":
        rows = []
        for R in cfg.gamma_R:
            res = profile_gamma.gamma_g(cfg.g, R)
            rows.append((cfg.g, R, res.gamma, res.tail_correction, res.residual))
        with open(out / "gamma.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["g", "R", "gamma", "tail_correction", "residual"])
            for row in rows:
                writer.writerow([format(v, ".17g") for v in row])
        metrics = {"gamma": {format(r[1], "g"): r[2] for r in rows}}
    elif cfg.experiment == "reduced":
        traj = reduced_dynamics.integrate(
            reduced_dynamics.OdeState(0.0, cfg.vortices), cfg.domain, cfg.T, cfg.ode_dt
        )
        reduced_dynamics.write_trajectory_csv(out / "ode.csv", traj)
        metrics = _traj_payload(traj)
    elif cfg.experiment == "simulate":
        snaps, diags = _simulate(cfg, out, write_snapshots=True, record=metrics)
        e0 = diags[0][3]
        metrics["energy_drift"] = abs(diags[-1][3] / e0 - 1.0) if e0 else 0.0
        metrics["snapshots"] = len(snaps)
    elif cfg.experiment == "track":
        if not cfg.snapshots:
            raise ConfigError("track experiment needs track.snapshots", key="track.snapshots")
        snaps = [cnls.read_snapshot(p, cfg.domain) for p in cfg.snapshots]
        tracks = vortex_tracking.track_run(
            snaps, cfg.track_max_jump, vortex_tracking.default_modulus_floor(cfg.g)
        )
        for comp in ("u", "v"):
            reduced_dynamics.write_trajectory_csv(out / f"pde_{comp}.csv", tracks[comp])
        metrics = {comp: _traj_payload(tracks[comp]) for comp in ("u", "v")}
    elif cfg.experiment == "compare":
        metrics = run_compare(cfg, out)
    else:  # unreachable after validation
        raise ConfigError(f"unknown experiment {cfg.experiment}")
    return metrics


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="vortexlab",
        description="Vortex dynamics lab for the coupled two-component NLS system",
    )
    parser.add_argument("command", choices=EXPERIMENTS)
    parser.add_argument("--config", required=True, help="path to the run configuration")
    parser.add_argument("--out", default=None, help="output directory (default: config's out)")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker hint; results are identical for any value")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    args = parser.parse_args(argv)

    out = args.out or "."
    report_path = Path(out) / "report.json"
    payload = {"status": "error", "stage": "load_config", "experiment": args.command}
    try:
        cfg = load_config(args.config)
        payload["config"] = cfg.raw
        payload["config_hash"] = content_hash(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        payload["seed"] = cfg.seed
        if cfg.experiment != args.command:
            raise ConfigError(
                f"config declares experiment {cfg.experiment!r}, command is {args.command!r}",
                key="experiment",
            )
        payload["stage"] = "run"
        Path(out).mkdir(parents=True, exist_ok=True)
        payload["metrics"] = run_experiment(cfg, out)
        payload["status"] = "ok"
        payload.pop("stage")
        code = EXIT_OK
    except (ConfigError, ConfigurationError, DomainError) as exc:
        payload["error"] = str(exc)
        code = EXIT_VALIDATION
    except (SolverError, BlowupError, TrackingError, VortexLabError) as exc:
        payload["error"] = str(exc)
        code = EXIT_NUMERICAL
    except OSError as exc:
        payload["error"] = str(exc)
        code = EXIT_IO
    try:
        Path(out).mkdir(parents=True, exist_ok=True)
        write_report(report_path, payload)
    except OSError as exc:
        print(f"cannot write report: {exc}", file=sys.stderr)
        return EXIT_IO
    if code != EXIT_OK:
        print(payload.get("error", "failed"), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
