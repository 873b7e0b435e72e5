"""
Closed-loop scenario runner.

A scenario couples one plant, one controller (the evolving controller or a
PID baseline) and one reference trajectory.  Both controllers go through the
same loop: sample the reference, read the plant output, form the error and
its filtered derivative, compute the control, advance the plant, log a row.
"""

from __future__ import annotations

import configparser
import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import plants
from .controller import GController, GControllerConfig
from .evolution import EvolutionConfig
from .exceptions import ContractViolation, DivergenceError, NumericalError

CSV_COLUMNS = ("t", "ref", "y", "e", "u", "u_arc", "u_g", "s_h", "rules", "v_hat",
               "det_g", "a1", "a2", "a3", "event")

TRAJECTORY_KINDS = ("constant", "step", "multi_step", "square", "sawtooth", "sine",
                    "custom_piecewise")


# -- reference trajectories -------------------------------------------------

@dataclass(frozen=True)
class Trajectory:
    kind: str = "constant"
    amplitude: float = 1.0
    frequency: float = 0.0
    steps: Tuple[Tuple[float, float], ...] = ()      # (switch time, height) of unit steps
    points: Tuple[Tuple[float, float], ...] = ()     # (time, value) breakpoints
    offset: float = 0.0
    duration: float = 100.0

    def __post_init__(self):
        if self.kind not in TRAJECTORY_KINDS:
            raise ContractViolation(f"unknown trajectory kind {self.kind!r}")
        if self.duration <= 0:
            raise ContractViolation("duration must be positive")
        if self.kind in ("square", "sawtooth", "sine") and self.frequency <= 0:
            raise ContractViolation(f"{self.kind} trajectories need frequency > 0")
        if self.kind in ("step", "multi_step") and not self.steps:
            raise ContractViolation("step trajectories need at least one (time, height) pair")
        if self.kind == "custom_piecewise" and len(self.points) < 2:
            raise ContractViolation("custom trajectories need at least two breakpoints")


def reference(traj: Trajectory, t: float) -> float:
    if t < 0 or t > traj.duration + 1e-9:
        raise ContractViolation(f"t={t} outside [0, {traj.duration}]")
    kind, a = traj.kind, traj.amplitude
    if kind == "constant":
        r = a
    elif kind in ("step", "multi_step"):
        r = sum(h for ts, h in traj.steps if t >= ts)
    elif kind == "square":
        r = a if (traj.frequency * t) % 1.0 < 0.5 else -a
    elif kind == "sawtooth":
        r = a * (2.0 * ((traj.frequency * t) % 1.0) - 1.0)
    elif kind == "sine":
        r = a * math.sin(2.0 * math.pi * traj.frequency * t)
    else:
        ts, vs = zip(*traj.points)
        r = float(np.interp(t, ts, vs))
    return r + traj.offset


# -- PID baseline -------------------------------------------------------------

@dataclass(frozen=True)
class PidGains:
    kp: float = 0.0
    ki: float = 0.0
    kd: float = 0.0
    u_min: float = -1e6
    u_max: float = 1e6
    i_min: float = -1e6
    i_max: float = 1e6

    def __post_init__(self):
        if not all(math.isfinite(g) for g in (self.kp, self.ki, self.kd)):
            raise ContractViolation("PID gains must be finite")
        if self.u_min >= self.u_max or self.i_min >= self.i_max:
            raise ContractViolation("PID limits need lo < hi")


class PidController:
    """Positional PID; the integral state is clamped to ``[i_min, i_max]``."""

    def __init__(self, gains: PidGains):
        self.gains = gains
        self.integral = 0.0

    def step(self, e, e_dot, dt, y=None):
        g = self.gains
        self.integral = min(max(self.integral + e * dt, g.i_min), g.i_max)
        u = g.kp * e + g.ki * self.integral + g.kd * e_dot
        return min(max(u, g.u_min), g.u_max)


# -- scenario configuration ---------------------------------------------------

@dataclass
class ScenarioConfig:
    name: str = "scenario"
    plant: str = "lti"
    controller: str = "g"
    trajectory: Trajectory = field(default_factory=Trajectory)
    dt: float = 0.01
    duration: float = 100.0
    seed: int = 0
    gust: Optional[plants.GustModel] = None
    noise_std: float = 0.0
    initial_position: float = 0.0
    edot_tau_steps: float = 5.0
    lti: plants.LtiParams = field(default_factory=plants.LtiParams)
    hexa: plants.HexaParams = field(default_factory=plants.HexaParams)
    hexa_trim: Optional[float] = None
    wing: plants.WingGeometry = field(default_factory=plants.WingGeometry)
    flapping: plants.FlappingParams = field(default_factory=plants.FlappingParams)
    gcontrol: GControllerConfig = field(default_factory=GControllerConfig)
    pid: PidGains = field(default_factory=PidGains)

    def __post_init__(self):
        if self.plant not in ("lti", "hexa", "bifw"):
            raise ContractViolation(f"unknown plant {self.plant!r}")
        if self.controller not in ("g", "pid"):
            raise ContractViolation(f"unknown controller {self.controller!r}")
        if self.dt <= 0 or self.duration <= 0:
            raise ContractViolation("dt and duration must be positive")
        if self.trajectory.duration != self.duration:
            self.trajectory = replace(self.trajectory, duration=self.duration)


def _floats(text: str) -> Tuple[float, ...]:
    return tuple(float(x) for x in text.replace(",", " ").split())


def _pairs(text: str) -> Tuple[Tuple[float, float], ...]:
    out = []
    for item in text.split(","):
        item = item.strip()
        if item:
            a, b = item.split(":")
            out.append((float(a), float(b)))
    return tuple(out)


def load_config(path, overrides: Optional[Dict[str, str]] = None) -> ScenarioConfig:
    """
    Read an INI scenario file.

    Sections: ``[scenario]``, ``[trajectory]``, ``[plant]``, ``[gust]``,
    ``[controller]`` and ``[pid]``.  ``overrides`` maps the CLI override names
    (plant, controller, traj, dt, duration, seed, gust) to string values.
    """
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise FileNotFoundError(f"cannot read scenario config {path}")
    return config_from_parser(cp, default_name=Path(path).stem, overrides=overrides)


def config_from_parser(cp: configparser.ConfigParser, default_name: str = "scenario",
                       overrides: Optional[Dict[str, str]] = None) -> ScenarioConfig:
    overrides = dict(overrides or {})
    for sec in ("scenario", "trajectory", "plant", "gust", "controller", "pid"):
        if not cp.has_section(sec):
            cp.add_section(sec)
    sc, tr, pl, gu, co, pi = (cp[s] for s in
                              ("scenario", "trajectory", "plant", "gust", "controller", "pid"))
    if "traj" in overrides:
        tr["kind"] = overrides.pop("traj")
    for key in ("plant", "controller", "dt", "duration", "seed"):
        if key in overrides:
            sc[key] = str(overrides.pop(key))
    if "gust" in overrides:
        gu["enabled"] = str(overrides.pop("gust"))
    if overrides:
        raise ContractViolation(f"unknown overrides: {sorted(overrides)}")

    duration = sc.getfloat("duration", 100.0)
    traj = Trajectory(
        kind=tr.get("kind", "constant"),
        amplitude=tr.getfloat("amplitude", 1.0),
        frequency=tr.getfloat("frequency", 0.0),
        steps=_pairs(tr.get("steps", "")),
        points=_pairs(tr.get("points", "")),
        offset=tr.getfloat("offset", 0.0),
        duration=duration,
    )
    gust = None
    if gu.getboolean("enabled", False):
        gust = plants.GustModel(gu.getfloat("peak_velocity", 40.0), gu.getfloat("onset_time", 2.0),
                                gu.getfloat("duration", 1.0), gu.getfloat("drag_coeff", 0.05))

    evo_kw = {k: co.getfloat(k) for k in ("rho_a", "rho_b", "delta", "k_fs", "k_win", "g")
              if k in co}
    for k in ("ern_mode", "vmax_mode"):
        if k in co:
            evo_kw[k] = co[k]
    gkw = {}
    for k in ("g0", "sat_bound", "v0"):
        if k in co:
            gkw[k] = co.getfloat(k)
    for k in ("alpha_init", "alpha_target", "alpha_rate"):
        if k in co:
            gkw[k] = _floats(co[k])
    if "scheme" in co:
        gkw["scheme"] = co["scheme"]
    for k in ("prune", "normalize_inputs"):
        if k in co:
            gkw[k] = co.getboolean(k)
    if "input_range_e" in co or "input_range_edot" in co:
        gkw["input_range"] = (_floats(co.get("input_range_e", "-10 10")),
                              _floats(co.get("input_range_edot", "-50 50")))
    gcfg = GControllerConfig(evolution=EvolutionConfig(**evo_kw), **gkw)

    pid = PidGains(**{k: pi.getfloat(k) for k in
                      ("kp", "ki", "kd", "u_min", "u_max", "i_min", "i_max") if k in pi})
    lti = plants.LtiParams(**{k: pl.getfloat(k) for k in ("zeta", "wn", "gain") if k in pl})
    hexa = plants.HexaParams(**{k: pl.getfloat(k) for k in ("mass", "gravity", "drag") if k in pl})
    wing = plants.WingGeometry(mass=pl.getfloat("wing_mass", 0.1))
    flap = plants.FlappingParams(frequency=pl.getfloat("flap_frequency", 2.0))

    return ScenarioConfig(
        name=sc.get("name", default_name),
        plant=sc.get("plant", "lti"),
        controller=sc.get("controller", "g"),
        trajectory=traj,
        dt=sc.getfloat("dt", 0.01),
        duration=duration,
        seed=sc.getint("seed", 0),
        gust=gust,
        noise_std=sc.getfloat("noise_std", 0.0),
        initial_position=sc.getfloat("initial_position", 0.0),
        edot_tau_steps=sc.getfloat("edot_tau_steps", 5.0),
        lti=lti, hexa=hexa,
        hexa_trim=pl.getfloat("trim") if "trim" in pl else None,
        wing=wing, flapping=flap, gcontrol=gcfg, pid=pid,
    )


# -- simulation ---------------------------------------------------------------

class _Plant:
    """Maps a scalar control onto the configured plant's actuator."""

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        if cfg.plant == "hexa":
            self.trim = cfg.hexa.hover_thrust if cfg.hexa_trim is None else cfg.hexa_trim
        elif cfg.plant == "bifw":
            self.c_lift = plants.hover_lift_coefficient(cfg.wing, cfg.flapping.amplitude,
                                                        cfg.flapping.frequency)

    def step(self, state, u, t, dt):
        cfg = self.cfg
        if cfg.plant == "lti":
            dist = 0.0 if cfg.gust is None else cfg.gust.force(t)
            return plants.step_lti2(state, u, dt, cfg.lti, disturbance=dist, t=t)
        if cfg.plant == "hexa":
            return plants.step_hexa_altitude(state, self.trim + u, cfg.gust, t, dt, cfg.hexa)
        amp = min(max(cfg.flapping.amplitude + u, 0.0), math.pi)
        flap = replace(cfg.flapping, amplitude=amp, dt=dt)
        return plants.step_bifw(state, flap, cfg.wing, cfg.gust, t, dt, self.c_lift)


@dataclass
class ScenarioResult:
    name: str
    rows: List[tuple]
    summary: Dict[str, object]
    diverged: bool = False
    diagnostic: str = ""
    controller: object = None
    diagnostics: Dict[str, np.ndarray] = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        i = CSV_COLUMNS.index(name)
        return np.array([np.nan if r[i] is None else r[i] for r in self.rows],
                        dtype=object if name == "event" else float)


def _simulate(cfg: ScenarioConfig, controller) -> ScenarioResult:
    dt = cfg.dt
    n_steps = int(round(cfg.duration / dt))
    rng = np.random.default_rng(cfg.seed)
    plant = _Plant(cfg)
    state = plants.PlantState(cfg.initial_position, 0.0)
    smooth = dt / (cfg.edot_tau_steps * dt + dt)
    is_g = isinstance(controller, GController)

    rows: List[tuple] = []
    diag = {"logdet_g": [], "min_eig_g": [], "gpsi_norm": [], "structural": []}
    e_prev, e_dot = None, 0.0
    diverged, message = False, ""
    for n in range(n_steps):
        t = n * dt
        r = reference(cfg.trajectory, t)
        y = state.position
        if cfg.noise_std > 0:
            y += cfg.noise_std * rng.standard_normal()
        e = r - y
        if e_prev is not None:
            e_dot += smooth * ((e - e_prev) / dt - e_dot)
        e_prev = e

        if is_g:
            try:
                out = controller.step(e, e_dot, dt, y=y)
            except NumericalError as exc:
                diverged, message = True, f"controller failed at step {n} (t={t:.6g}): {exc}"
                break
            u = out.u
            row = (t, r, y, e, u, out.u_arc, out.u_g, out.s_h, out.rules, out.v_hat,
                   out.det_g, *out.alpha, ";".join(out.events))
            diag["logdet_g"].append(out.logdet_g)
            diag["min_eig_g"].append(np.nan if out.min_eig_g is None else out.min_eig_g)
            diag["gpsi_norm"].append(out.gpsi_norm)
            diag["structural"].append(any(ev.startswith(("grow", "prune", "recovery"))
                                          for ev in out.events))
        else:
            u = controller.step(e, e_dot, dt, y=y)
            row = (t, r, y, e, u) + (None,) * 9 + ("",)
        if not math.isfinite(u):
            diverged, message = True, f"non-finite control at step {n} (t={t:.6g})"
            rows.append(row)
            break
        rows.append(row)
        try:
            state = plant.step(state, u, t, dt)
        except DivergenceError as exc:
            diverged, message = True, f"plant diverged at step {n} (t={t:.6g}): {exc}"
            break

    res = ScenarioResult(cfg.name, rows, {}, diverged, message,
                         controller if is_g else None,
                         {k: np.array(v) for k, v in diag.items()} if is_g else {})
    res.summary = summarize(_columns(rows))
    res.summary["diverged"] = diverged
    if message:
        res.summary["diagnostic"] = message
    return res


def run_scenario(cfg: ScenarioConfig) -> ScenarioResult:
    if cfg.controller == "pid":
        return run_pid(cfg)
    return _simulate(cfg, GController(cfg.gcontrol))


def run_pid(cfg: ScenarioConfig) -> ScenarioResult:
    return _simulate(cfg, PidController(cfg.pid))


# -- metrics ------------------------------------------------------------------

def _columns(rows: Sequence[tuple]) -> Dict[str, np.ndarray]:
    cols = {}
    for i, name in enumerate(CSV_COLUMNS[:-1]):
        cols[name] = np.array([np.nan if r[i] is None else float(r[i]) for r in rows], dtype=float)
    return cols


def segments(ref: np.ndarray) -> List[Tuple[int, int]]:
    """Split a reference into runs separated by jumps (discontinuities)."""
    if len(ref) == 0:
        return []
    span = float(np.max(ref) - np.min(ref))
    jump = max(1e-9, 0.05 * span)
    cuts = [0] + [i for i in range(1, len(ref)) if abs(ref[i] - ref[i - 1]) > jump] + [len(ref)]
    return [(a, b) for a, b in zip(cuts[:-1], cuts[1:]) if b > a]


def segment_metrics(t, ref, y, e, start: int, stop: int) -> Dict[str, Optional[float]]:
    """
    Rise (10-90 %) and settling (2 % band) times of one segment.

    The segment moves from the output level at its first sample to the
    reference level at its last sample.  Rise time is the gap between the
    first 10 % and first 90 % crossings; settling time is measured from the
    segment start to the first sample after which ``|e|`` stays in the band.
    """
    base, target = y[start], ref[stop - 1]
    amp = abs(target - base)
    out = {"start_s": float(t[start]), "amplitude": float(amp),
           "rise_time_s": None, "settling_time_s": None}
    if amp < 1e-9:
        return out
    frac = (y[start:stop] - base) / (target - base)
    i10 = np.flatnonzero(frac >= 0.1)
    i90 = np.flatnonzero(frac >= 0.9)
    if i10.size and i90.size:
        out["rise_time_s"] = float(t[start + i90[0]] - t[start + i10[0]])
    outside = np.flatnonzero(np.abs(e[start:stop]) > 0.02 * amp)
    if outside.size == 0:
        out["settling_time_s"] = 0.0
    elif outside[-1] < stop - start - 1:
        out["settling_time_s"] = float(t[start + outside[-1] + 1] - t[start])
    return out


def _rmse(e: np.ndarray) -> float:
    with np.errstate(over="ignore"):    # diverged traces give inf
        return float(np.sqrt(np.mean(e * e)))


def metrics(t, ref, y, e) -> Dict[str, object]:
    t, ref, y, e = (np.asarray(a, dtype=float) for a in (t, ref, y, e))
    if len(t) < 2:
        raise ContractViolation("metrics need at least two rows")
    segs = [segment_metrics(t, ref, y, e, a, b) for a, b in segments(ref)]
    first = next((s for s in segs if s["amplitude"] >= 1e-9), None)
    return {
        "rmse": _rmse(e),
        "rise_time_s": None if first is None else first["rise_time_s"],
        "settling_time_s": None if first is None else first["settling_time_s"],
        "segment_start_s": None if first is None else first["start_s"],
        "segments": segs,
    }


def summarize(cols: Dict[str, np.ndarray]) -> Dict[str, object]:
    if len(cols["t"]) < 2:
        return {"rmse": float("nan"), "rise_time_s": None, "settling_time_s": None,
                "segment_start_s": None, "final_rule_count": None, "max_abs_u": None,
                "n_steps": len(cols["t"])}
    m = metrics(cols["t"], cols["ref"], cols["y"], cols["e"])
    m.pop("segments")
    rules = cols["rules"]
    m["final_rule_count"] = None if np.isnan(rules[-1]) else int(rules[-1])
    m["max_abs_u"] = float(np.max(np.abs(cols["u"])))
    m["n_steps"] = len(cols["t"])
    return m


# -- output -------------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def emit(result: ScenarioResult, out_dir, rule_series: bool = True) -> Dict[str, Path]:
    """Write ``<name>.csv``, ``<name>.summary.json`` and optionally ``<name>.rules.csv``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = {"csv": out / f"{result.name}.csv",
                 "summary": out / f"{result.name}.summary.json"}
        with open(paths["csv"], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for row in result.rows:
                w.writerow([_fmt(v) for v in row])
        with open(paths["summary"], "w") as fh:
            json.dump(result.summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
        if rule_series:
            paths["rules"] = out / f"{result.name}.rules.csv"
            with open(paths["rules"], "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(("t", "rules"))
                for row in result.rows:
                    w.writerow((_fmt(row[0]), _fmt(row[8])))
    except OSError as exc:
        raise OSError(f"cannot write results under {out}: {exc}") from exc
    return paths


def read_trace(path) -> Dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_COLUMNS:
            raise ContractViolation(f"{path}: unexpected CSV header {header}")
        data = list(reader)
    cols = {}
    for i, name in enumerate(CSV_COLUMNS):
        vals = [r[i] for r in data]
        if name == "event":
            cols[name] = np.array(vals, dtype=object)
        else:
            cols[name] = np.array([float(v) if v != "" else np.nan for v in vals], dtype=float)
    return cols


def summarize_csv(path) -> Dict[str, object]:
    return summarize(read_trace(path))
