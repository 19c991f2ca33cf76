"""Command-line front end: experiment drivers, CSV traces and SVG plots.

Exit codes: 0 on success, 1 for configuration problems, 2 for numerical or IO
failures.  Failures print one machine-parsable line ``ERROR:<code>: message``
to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import pathlib
import sys
from dataclasses import dataclass, field

import numpy as np

from .control import StrainGains, TaskGains, task_coordinates
from .errors import (ConfigError, NearSingular, NotConverged, OutOfRange,
                     PcsError, RankDeficient, RotationNearPi, SingularJacobian)
from .ik import IkSettings
from .kinematics import SectionProducts, fk_shape, jacobian
from .liegroup import (Ad, Pose, exp_se3, log_se3, log_so3, tangent_T,
                       tangent_T_quadrature)
from .rod import REFERENCE_STRAIN, RodSpec, cross_section, potential_energy
from .sim import (CircleTrajectory, SimConfig, Trace, rk4_step,
                  run_ik_experiment, run_shape_regulation, run_tip_tracking)
from .statics import StaticsWorkspace, gravity_matrix

_REQUIRED = object()


# ---------------------------------------------------------------------------
# Config parsing (strict: unknown keys are rejected by name)


@dataclass
class ExperimentConfig:
    rod: RodSpec
    dt: float = 1e-3
    duration: float | None = None
    record_every: int = 10
    samples_per_section: int = 40
    ik_settings: IkSettings = field(default_factory=IkSettings)
    strain_gain: float = 2.0
    task_gain: float = 2.0
    trajectory: CircleTrajectory | None = None
    target_pose: Pose | None = None
    initial_guesses: list | None = None
    desired_strain: np.ndarray | None = None
    snapshot_times: tuple = (0.0, 0.5, 1.0, 1.5, 2.0)
    out_dir: str = "out"
    write_csv: bool = True
    write_svg: bool = True


def _check_keys(section: dict, allowed, path: str):
    for key in section:
        if key not in allowed:
            where = f"{path}.{key}" if path else key
            raise ConfigError(f"unknown config key '{where}'")


def _get(section: dict, key: str, path: str, default=_REQUIRED):
    if key not in section:
        if default is _REQUIRED:
            where = f"{path}.{key}" if path else key
            raise ConfigError(f"missing config key '{where}'")
        return default
    return section[key]


def _number(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"config key '{where}' must be a number")
    return float(value)


def _vector(value, length, where):
    if not isinstance(value, list) or len(value) != length:
        raise ConfigError(f"config key '{where}' must be a list of {length} numbers")
    return np.array([_number(v, where) for v in value])


def _parse_rod(section: dict) -> RodSpec:
    allowed = {"length", "num_sections", "radius", "youngs_modulus",
               "poisson_ratio", "density", "shear_viscosity",
               "section_lengths", "gravity_twist"}
    _check_keys(section, allowed, "rod")
    num_sections = _get(section, "num_sections", "rod")
    if not isinstance(num_sections, int) or isinstance(num_sections, bool):
        raise ConfigError("config key 'rod.num_sections' must be an integer")
    kwargs = dict(
        length=_number(_get(section, "length", "rod"), "rod.length"),
        num_sections=num_sections,
        radius=_number(_get(section, "radius", "rod"), "rod.radius"),
        youngs_modulus=_number(_get(section, "youngs_modulus", "rod"),
                               "rod.youngs_modulus"),
        poisson_ratio=_number(_get(section, "poisson_ratio", "rod"),
                              "rod.poisson_ratio"),
        density=_number(_get(section, "density", "rod"), "rod.density"),
        shear_viscosity=_number(_get(section, "shear_viscosity", "rod"),
                                "rod.shear_viscosity"),
    )
    if "section_lengths" in section:
        kwargs["section_lengths"] = _vector(section["section_lengths"],
                                            num_sections, "rod.section_lengths")
    if "gravity_twist" in section:
        kwargs["gravity_twist"] = _vector(section["gravity_twist"], 6,
                                          "rod.gravity_twist")
    try:
        return RodSpec(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"rod: {exc}") from exc


def parse_config(data: dict) -> ExperimentConfig:
    allowed = {"rod", "sim", "ik", "gains", "trajectory", "target",
               "shape_regulation", "output"}
    _check_keys(data, allowed, "")
    rod = _parse_rod(_get(data, "rod", ""))
    cfg = ExperimentConfig(rod=rod)

    sim = _get(data, "sim", "", default={})
    _check_keys(sim, {"dt", "duration", "record_every", "samples_per_section"}, "sim")
    cfg.dt = _number(_get(sim, "dt", "sim", 1e-3), "sim.dt")
    if "duration" in sim:
        cfg.duration = _number(sim["duration"], "sim.duration")
    rec = _get(sim, "record_every", "sim", 10)
    if not isinstance(rec, int) or isinstance(rec, bool) or rec < 1:
        raise ConfigError("config key 'sim.record_every' must be a positive integer")
    cfg.record_every = rec
    spc = _get(sim, "samples_per_section", "sim", 40)
    if not isinstance(spc, int) or isinstance(spc, bool) or spc < 1:
        raise ConfigError("config key 'sim.samples_per_section' must be a positive integer")
    cfg.samples_per_section = spc

    ik_sec = _get(data, "ik", "", default={})
    _check_keys(ik_sec, {"tolerance", "max_iterations", "step_scale",
                         "pinv_cutoff"}, "ik")
    max_iter = _get(ik_sec, "max_iterations", "ik", 200)
    if not isinstance(max_iter, int) or isinstance(max_iter, bool) or max_iter < 1:
        raise ConfigError("config key 'ik.max_iterations' must be a positive integer")
    cfg.ik_settings = IkSettings(
        tolerance=_number(_get(ik_sec, "tolerance", "ik", 1e-6), "ik.tolerance"),
        max_iterations=max_iter,
        step_scale=_number(_get(ik_sec, "step_scale", "ik", 1.0), "ik.step_scale"),
        pinv_cutoff=_number(_get(ik_sec, "pinv_cutoff", "ik", 1e-8), "ik.pinv_cutoff"),
    )

    gains = _get(data, "gains", "", default={})
    _check_keys(gains, {"strain", "task"}, "gains")
    cfg.strain_gain = _number(_get(gains, "strain", "gains", 2.0), "gains.strain")
    cfg.task_gain = _number(_get(gains, "task", "gains", 2.0), "gains.task")

    if "trajectory" in data:
        traj = data["trajectory"]
        _check_keys(traj, {"center", "radius", "period"}, "trajectory")
        cfg.trajectory = CircleTrajectory(
            center=_vector(_get(traj, "center", "trajectory", [0.25, 0.0, 0.0]),
                           3, "trajectory.center"),
            radius=_number(_get(traj, "radius", "trajectory", 0.1),
                           "trajectory.radius"),
            period=_number(_get(traj, "period", "trajectory", 20.0),
                           "trajectory.period"),
        )

    if "target" in data:
        target = data["target"]
        _check_keys(target, {"rotation", "position", "initial_guesses"}, "target")
        rot_rows = _get(target, "rotation", "target")
        if not isinstance(rot_rows, list) or len(rot_rows) != 3:
            raise ConfigError("config key 'target.rotation' must be a 3x3 matrix")
        rot = np.array([_vector(row, 3, "target.rotation") for row in rot_rows])
        pos = _vector(_get(target, "position", "target"), 3, "target.position")
        mat = np.eye(4)
        mat[:3, :3] = rot
        mat[:3, 3] = pos
        try:
            cfg.target_pose = Pose.from_matrix(mat)
        except ValueError as exc:
            raise ConfigError(f"target.rotation: {exc}") from exc
        guesses = _get(target, "initial_guesses", "target")
        if not isinstance(guesses, list) or not guesses:
            raise ConfigError("config key 'target.initial_guesses' must be a non-empty list")
        cfg.initial_guesses = [
            _vector(g, rod.dof, f"target.initial_guesses[{i}]")
            for i, g in enumerate(guesses)
        ]

    if "shape_regulation" in data:
        shp = data["shape_regulation"]
        _check_keys(shp, {"desired_strain", "snapshot_times"}, "shape_regulation")
        rows = _get(shp, "desired_strain", "shape_regulation")
        if not isinstance(rows, list) or len(rows) != rod.num_sections:
            raise ConfigError("config key 'shape_regulation.desired_strain' must "
                              f"list one 6-vector per section ({rod.num_sections})")
        cfg.desired_strain = np.concatenate(
            [_vector(row, 6, f"shape_regulation.desired_strain[{i}]")
             for i, row in enumerate(rows)])
        if "snapshot_times" in shp:
            times = shp["snapshot_times"]
            if not isinstance(times, list):
                raise ConfigError("config key 'shape_regulation.snapshot_times' must be a list")
            cfg.snapshot_times = tuple(
                _number(t, "shape_regulation.snapshot_times") for t in times)

    out = _get(data, "output", "", default={})
    _check_keys(out, {"directory", "csv", "svg"}, "output")
    cfg.out_dir = _get(out, "directory", "output", "out")
    if not isinstance(cfg.out_dir, str):
        raise ConfigError("config key 'output.directory' must be a string")
    for key, attr in (("csv", "write_csv"), ("svg", "write_svg")):
        val = _get(out, key, "output", True)
        if not isinstance(val, bool):
            raise ConfigError(f"config key 'output.{key}' must be a boolean")
        setattr(cfg, attr, val)
    return cfg


def load_config(path) -> ExperimentConfig:
    p = pathlib.Path(path)
    try:
        text = p.read_text()
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("top-level config must be a JSON object")
    return parse_config(data)


# ---------------------------------------------------------------------------
# CSV output (17 significant digits: values survive a write/read round trip
# bit for bit)


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _tip_rotvecs(tip_poses):
    out, prev = [], None
    for pose in tip_poses:
        coords = task_coordinates(pose, prev)
        prev = coords.orientation
        out.append(prev)
    return out


def write_trace_csv(trace: Trace, path) -> None:
    nq = trace.spec.dof
    header = (["t"] + [f"qbar_{i}" for i in range(nq)]
              + ["tip_x", "tip_y", "tip_z", "tip_r0", "tip_r1", "tip_r2"]
              + [f"wrench_{i}" for i in range(trace.wrench_dim)]
              + ["error_norm", "energy"])
    rotvecs = _tip_rotvecs(trace.tip_poses)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(len(trace)):
            row = ([_fmt(trace.times[i])]
                   + [_fmt(v) for v in trace.strains[i]]
                   + [_fmt(v) for v in trace.tip_poses[i].position]
                   + [_fmt(v) for v in rotvecs[i]]
                   + [_fmt(v) for v in trace.wrenches[i]]
                   + [_fmt(trace.errors[i]), _fmt(trace.energies[i])])
            writer.writerow(row)


def write_shape_csv(samples, path) -> None:
    header = ["X", "x", "y", "z"] + [f"r{i}{j}" for i in range(3) for j in range(3)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for s in samples:
            writer.writerow([_fmt(s.arclength)]
                            + [_fmt(v) for v in s.pose.position]
                            + [_fmt(v) for v in s.pose.rotation.ravel()])


# ---------------------------------------------------------------------------
# Self-contained SVG plots


_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
            "#8c564b", "#e377c2"]
_W, _H = 720, 480
_ML, _MR, _MT, _MB = 70, 20, 40, 50


def _data_range(values):
    lo = min(values)
    hi = max(values)
    if hi - lo < 1e-300:
        pad = 1.0 if hi == 0.0 else abs(hi) * 0.1
        lo, hi = lo - pad, hi + pad
    return lo, hi


def _svg_chart(series, title, xlabel, ylabel, path):
    """Line chart of (label, xs, ys) triples as a standalone SVG file."""
    xlo, xhi = _data_range([x for _, xs, _ in series for x in xs])
    ylo, yhi = _data_range([y for _, _, ys in series for y in ys])

    def sx(x):
        return _ML + (x - xlo) / (xhi - xlo) * (_W - _ML - _MR)

    def sy(y):
        return _H - _MB - (y - ylo) / (yhi - ylo) * (_H - _MT - _MB)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
             f'viewBox="0 0 {_W} {_H}">',
             f'<rect width="{_W}" height="{_H}" fill="white"/>',
             f'<text x="{_W / 2:.1f}" y="24" text-anchor="middle" '
             f'font-family="sans-serif" font-size="15">{title}</text>']
    # axes box and ticks
    parts.append(f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" '
                 f'height="{_H - _MT - _MB}" fill="none" stroke="black"/>')
    for i in range(5):
        xv = xlo + (xhi - xlo) * i / 4
        yv = ylo + (yhi - ylo) * i / 4
        parts.append(f'<line x1="{sx(xv):.1f}" y1="{_H - _MB}" x2="{sx(xv):.1f}" '
                     f'y2="{_H - _MB + 5}" stroke="black"/>')
        parts.append(f'<text x="{sx(xv):.1f}" y="{_H - _MB + 18}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="11">{xv:.3g}</text>')
        parts.append(f'<line x1="{_ML - 5}" y1="{sy(yv):.1f}" x2="{_ML}" '
                     f'y2="{sy(yv):.1f}" stroke="black"/>')
        parts.append(f'<text x="{_ML - 8}" y="{sy(yv) + 4:.1f}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="11">{yv:.3g}</text>')
    parts.append(f'<text x="{_W / 2:.1f}" y="{_H - 12}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="13">{xlabel}</text>')
    parts.append(f'<text x="18" y="{_H / 2:.1f}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="13" '
                 f'transform="rotate(-90 18 {_H / 2:.1f})">{ylabel}</text>')
    for idx, (label, xs, ys) in enumerate(series):
        color = _PALETTE[idx % len(_PALETTE)]
        pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     f'stroke-width="1.5"/>')
        if label:
            ly = _MT + 16 + 16 * idx
            parts.append(f'<line x1="{_W - _MR - 110}" y1="{ly - 4}" '
                         f'x2="{_W - _MR - 90}" y2="{ly - 4}" stroke="{color}" '
                         f'stroke-width="2"/>')
            parts.append(f'<text x="{_W - _MR - 84}" y="{ly}" '
                         f'font-family="sans-serif" font-size="11">{label}</text>')
    parts.append("</svg>")
    pathlib.Path(path).write_text("\n".join(parts) + "\n")


def write_shape_svg(labeled_shapes, path, title="backbone shapes") -> None:
    """Plot backbone x-y projections for (label, samples) pairs."""
    series = [(label,
               [s.pose.position[0] for s in samples],
               [s.pose.position[1] for s in samples])
              for label, samples in labeled_shapes]
    _svg_chart(series, title, "x [m]", "y [m]", path)


def write_svg_plot(trace: Trace, kind: str, path) -> None:
    """Render one plot kind from a trace into a standalone SVG file."""
    if len(trace) == 0:
        raise ValueError("cannot plot an empty trace")
    times = trace.times
    if kind == "error-vs-time":
        logs = [math.log10(max(e, 1e-16)) for e in trace.errors]
        _svg_chart([("", times, logs)], "tracking error", "t [s]",
                   "log10 error norm", path)
    elif kind == "wrench-vs-time":
        # last 6 components = the tip wrench block in both layouts
        comps = np.array([w[-6:] for w in trace.wrenches])
        labels = ["m1", "m2", "m3", "f1", "f2", "f3"]
        series = [(labels[i], times, comps[:, i].tolist()) for i in range(6)]
        _svg_chart(series, "tip wrench", "t [s]", "wrench [N, N m]", path)
    elif kind == "tip-path-3d-projection":
        ys = [p.position[1] for p in trace.tip_poses]
        zs = [p.position[2] for p in trace.tip_poses]
        _svg_chart([("tip", ys, zs)], "tip path (e2-e3 projection)",
                   "y [m]", "z [m]", path)
    elif kind == "shape-xy":
        picks = np.unique(np.linspace(0, len(trace) - 1, 6).astype(int))
        shapes = []
        for i in picks:
            q = trace.strains[i] + np.tile(REFERENCE_STRAIN, trace.spec.num_sections)
            shapes.append((f"t={trace.times[i]:.2f}s", fk_shape(trace.spec, q)))
        write_shape_svg(shapes, path)
    else:
        raise ValueError(f"unknown plot kind {kind!r}")


# ---------------------------------------------------------------------------
# Subcommands


def _outdir(cfg: ExperimentConfig) -> pathlib.Path:
    out = pathlib.Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_ik(cfg: ExperimentConfig) -> int:
    if cfg.target_pose is None or cfg.initial_guesses is None:
        raise ConfigError("the ik command needs a 'target' config section")
    report = run_ik_experiment(cfg.rod, cfg.target_pose, cfg.initial_guesses,
                               cfg.ik_settings, cfg.samples_per_section)
    out = _outdir(cfg)
    labeled = []
    for i, (res, energy, density, shape) in enumerate(
            zip(report.results, report.energies, report.energy_densities,
                report.shapes), start=1):
        print(f"ik solution {i}: converged={res.converged} "
              f"iterations={res.iterations} error={res.final_error:.3e} "
              f"energy={energy:.4f} J energy_density={density:.4f} J/m")
        if cfg.write_csv:
            write_shape_csv(shape, out / f"ik_shape_{i}.csv")
        labeled.append((f"solution {i} ({density:.2f} J/m)", shape))
    if cfg.write_svg:
        write_shape_svg(labeled, out / "ik_shapes.svg", title="IK solutions")
    return 0


def cmd_shape_reg(cfg: ExperimentConfig) -> int:
    if cfg.desired_strain is None:
        raise ConfigError("the shape-reg command needs a 'shape_regulation' config section")
    sim_cfg = SimConfig(duration=cfg.duration if cfg.duration is not None else 5.0,
                        dt=cfg.dt, record_every=cfg.record_every,
                        samples_per_section=cfg.samples_per_section)
    gains = StrainGains.uniform(cfg.rod.num_sections, cfg.strain_gain)
    q_bar_des = cfg.desired_strain - np.tile(REFERENCE_STRAIN, cfg.rod.num_sections)
    result = run_shape_regulation(cfg.rod, q_bar_des, gains, sim_cfg,
                                  cfg.snapshot_times)
    trace = result.trace
    print(f"shape-reg: steps={sim_cfg.steps} final_error={trace.errors[-1]:.3e} "
          f"energy={trace.energies[-1]:.4f} J")
    out = _outdir(cfg)
    if cfg.write_csv:
        write_trace_csv(trace, out / "shape_reg_trace.csv")
        for t, samples in result.snapshots:
            write_shape_csv(samples, out / f"shape_reg_shape_t{t:.1f}.csv")
    if cfg.write_svg:
        write_svg_plot(trace, "error-vs-time", out / "shape_reg_error.svg")
        write_svg_plot(trace, "wrench-vs-time", out / "shape_reg_tip_wrench.svg")
        write_shape_svg([(f"t={t:.1f}s", s) for t, s in result.snapshots],
                        out / "shape_reg_shapes.svg",
                        title="regulated backbone shapes")
    return 0


def cmd_tip_track(cfg: ExperimentConfig, mode: str) -> int:
    circle = cfg.trajectory or CircleTrajectory(np.array([0.25, 0.0, 0.0]),
                                                0.1, 20.0)
    sim_cfg = SimConfig(duration=cfg.duration if cfg.duration is not None else 20.0,
                        dt=cfg.dt, record_every=cfg.record_every,
                        samples_per_section=cfg.samples_per_section)
    result = run_tip_tracking(
        cfg.rod, circle, mode, sim_cfg,
        strain_gains=StrainGains.uniform(cfg.rod.num_sections, cfg.strain_gain),
        task_gains=TaskGains.uniform(cfg.task_gain),
        ik_settings=cfg.ik_settings)
    trace = result.trace
    late = [e for t, e in zip(trace.times, trace.errors) if t > 3.0]
    worst_late = max(late) if late else float("nan")
    extra = (f"max_solve_residual={result.max_residual:.3e}" if mode == "task"
             else f"max_ik_iterations={max(result.ik_iterations)}")
    print(f"tip-track[{mode}]: steps={sim_cfg.steps} "
          f"max_error_after_3s={worst_late:.3e} {extra}")
    out = _outdir(cfg)
    if cfg.write_csv:
        write_trace_csv(trace, out / f"tip_track_{mode}_trace.csv")
    if cfg.write_svg:
        write_svg_plot(trace, "tip-path-3d-projection",
                       out / f"tip_track_{mode}_path.svg")
        write_svg_plot(trace, "error-vs-time", out / f"tip_track_{mode}_error.svg")
        write_svg_plot(trace, "wrench-vs-time", out / f"tip_track_{mode}_wrench.svg")
    return 0


# ---------------------------------------------------------------------------
# check: fast invariant battery


def _gravity_potential(spec: RodSpec, q, nodes_per_section=5):
    linear_gravity = spec.gravity_twist[3:]
    area, _ = cross_section(spec)
    nodes, weights = np.polynomial.legendre.leggauss(nodes_per_section)
    prods = SectionProducts(spec, q)
    half = 0.5 * spec.section_lengths[:, None]
    mats = prods.batch.transforms(half * (nodes + 1.0))
    total = 0.0
    for m in range(spec.num_sections):
        base = prods.poses[m]
        positions = mats[m, :, :3, 3] @ base.rotation.T + base.position
        total += (half[m, 0] * weights) @ (positions @ linear_gravity)
    return -spec.density * area * total


def _check_battery(rod: RodSpec):
    rng = np.random.default_rng(2024)

    def random_twist():
        ang = rng.normal(size=3)
        ang *= rng.uniform(0.0, 3.0) / np.linalg.norm(ang)
        return np.concatenate([ang, rng.normal(size=3)])

    def chk_exp_log():
        worst = 0.0
        for _ in range(20):
            xi = random_twist()
            worst = max(worst, np.abs(log_se3(exp_se3(xi)) - xi).max())
        return worst < 1e-10, f"exp/log roundtrip, worst {worst:.2e}"

    def chk_tangent():
        worst = 0.0
        for _ in range(5):
            xi = random_twist()
            s = rng.uniform(0.05, 1.0)
            worst = max(worst, np.abs(tangent_T(xi, s)
                                      - tangent_T_quadrature(xi, s)).max())
        return worst < 1e-10, f"tangent vs quadrature, worst {worst:.2e}"

    def chk_ad_hom():
        worst = 0.0
        for _ in range(5):
            g1 = exp_se3(random_twist())
            g2 = exp_se3(random_twist())
            worst = max(worst, np.abs(Ad(g1.compose(g2)) - Ad(g1) @ Ad(g2)).max())
        return worst < 1e-12, f"Adjoint homomorphism, worst {worst:.2e}"

    def chk_jacobian():
        worst, h = 0.0, 1e-7
        for _ in range(3):
            q = np.tile(REFERENCE_STRAIN, rod.num_sections) + 0.3 * rng.normal(size=rod.dof)
            delta = rng.normal(size=rod.dof)
            jd = jacobian(rod, q, rod.length) @ delta
            prods = SectionProducts(rod, q)
            tip_inv = prods.poses[-1].inverse()
            fp = log_se3(tip_inv.compose(SectionProducts(rod, q + h * delta).poses[-1]))
            fm = log_se3(tip_inv.compose(SectionProducts(rod, q - h * delta).poses[-1]))
            worst = max(worst, np.abs(jd - (fp - fm) / (2 * h)).max())
        return worst < 1e-6, f"Jacobian vs finite differences, worst {worst:.2e}"

    def chk_gravity():
        worst, h = 0.0, 1e-6
        gvec = np.concatenate([np.zeros(3), rod.gravity_twist[3:]])
        for _ in range(2):
            q = np.tile(REFERENCE_STRAIN, rod.num_sections) + 0.2 * rng.normal(size=rod.dof)
            force = gravity_matrix(rod, q) @ gvec
            grad = np.zeros(rod.dof)
            for i in range(rod.dof):
                dq = np.zeros(rod.dof)
                dq[i] = h
                grad[i] = (_gravity_potential(rod, q + dq)
                           - _gravity_potential(rod, q - dq)) / (2 * h)
            scale = max(np.abs(force).max(), 1e-12)
            worst = max(worst, np.abs(force + grad).max() / scale)
        return worst < 1e-6, f"gravity vs energy gradient, worst rel {worst:.2e}"

    def chk_free_decay():
        q_bar = 0.5 * rng.normal(size=rod.dof)
        zero = np.zeros(rod.dof)
        norms = [np.linalg.norm(q_bar)]
        grav_free = RodSpec(length=rod.length, num_sections=rod.num_sections,
                            radius=rod.radius, youngs_modulus=rod.youngs_modulus,
                            poisson_ratio=rod.poisson_ratio, density=rod.density,
                            shear_viscosity=rod.shear_viscosity,
                            section_lengths=rod.section_lengths,
                            gravity_twist=np.zeros(6))
        ws = StaticsWorkspace(grav_free)
        for _ in range(30):
            q_bar = rk4_step(lambda t, qb: ws.rhs_distributed(qb, zero), q_bar,
                             0.0, 1e-4)
            norms.append(np.linalg.norm(q_bar))
        mono = all(b <= a * (1 + 1e-12) for a, b in zip(norms, norms[1:]))
        return mono and norms[-1] < norms[0], "unforced strain decay monotone"

    def chk_rk4_order():
        def f(t, y):
            return -2.0 * y
        errs = []
        for dt in (1e-2, 5e-3):
            y = np.array([1.0])
            steps = int(round(1.0 / dt))
            for k in range(steps):
                y = rk4_step(f, y, k * dt, dt)
            errs.append(abs(y[0] - math.exp(-2.0)))
        ratio = errs[0] / errs[1]
        return 12.0 < ratio < 20.0, f"RK4 step-halving ratio {ratio:.1f}"

    return [("exp-log-roundtrip", chk_exp_log),
            ("tangent-quadrature", chk_tangent),
            ("adjoint-homomorphism", chk_ad_hom),
            ("jacobian-fd", chk_jacobian),
            ("gravity-gradient", chk_gravity),
            ("free-decay", chk_free_decay),
            ("rk4-order", chk_rk4_order)]


def cmd_check(cfg: ExperimentConfig) -> int:
    failures = 0
    for name, fn in _check_battery(cfg.rod):
        ok, detail = fn()
        print(f"{'ok' if ok else 'FAIL'} - {name}: {detail}")
        if not ok:
            print(f"ERROR:check: invariant '{name}' failed: {detail}",
                  file=sys.stderr)
            failures += 1
    return 2 if failures else 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pcsrod",
        description="Constant-strain rod experiments: IK, shape regulation, tip tracking.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("ik", "solve tip-pose IK from configured guesses"),
                            ("shape-reg", "regulate to a desired strain field"),
                            ("tip-track", "track a circular tip trajectory"),
                            ("check", "run the fast numerical invariant battery")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to a JSON config file")
        if name == "tip-track":
            p.add_argument("--mode", choices=("strain", "task"), required=True,
                           help="controller used to realize the trajectory")
    return parser


_FAILURE_CODES = ((NotConverged, "not-converged"),
                  (SingularJacobian, "singular-jacobian"),
                  (RankDeficient, "rank-deficient"),
                  (RotationNearPi, "rotation-near-pi"),
                  (NearSingular, "near-singular"),
                  (OutOfRange, "out-of-range"))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.command == "ik":
            return cmd_ik(cfg)
        if args.command == "shape-reg":
            return cmd_shape_reg(cfg)
        if args.command == "tip-track":
            return cmd_tip_track(cfg, args.mode)
        return cmd_check(cfg)
    except (ConfigError, ValueError) as exc:
        print(f"ERROR:config: {exc}", file=sys.stderr)
        return 1
    except PcsError as exc:
        for klass, code in _FAILURE_CODES:
            if isinstance(exc, klass):
                print(f"ERROR:{code}: {exc}", file=sys.stderr)
                return 2
        print(f"ERROR:numerical: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"ERROR:io: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())
