"""Scenario files: robot + profile + terrain + noise + event script.

A scenario is fully resolved at load time (model and profile texts are
embedded) so that a run manifest can reproduce the run without touching
the original files.
"""

import importlib.resources
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..textcfg import ConfigError, parse_text, single_section
from ..wbc.profile import load_profile_text
from ..multibody.model import load_model_text
from .noise import NoiseConfig
from .terrain import TerrainMap, TerrainSegment


@dataclass
class ShiftEvent:
    kind: str
    t0: float
    duration: float
    target: str           # foot frame name or "center"
    offset: np.ndarray = field(default_factory=lambda: np.zeros(2))


@dataclass
class StepEvent:
    kind: str
    t0: float
    duration: float
    foot: str
    delta: np.ndarray = field(default_factory=lambda: np.zeros(2))
    apex: float = 0.04


@dataclass
class PushEvent:
    kind: str
    t0: float
    duration: float
    frame: str
    wrench: np.ndarray = field(default_factory=lambda: np.zeros(6))


@dataclass
class Scenario:
    name: str
    model: object
    profile: object
    terrain: TerrainMap
    noise: NoiseConfig
    duration: float
    dt: float
    seed: int
    integrator: str = "rk4"
    settle: bool = True
    gravity: float = 9.81
    events: list = field(default_factory=list)
    init_joints: np.ndarray = None
    init_base_xy: np.ndarray = field(default_factory=lambda: np.zeros(2))
    fall_fraction: float = 0.6
    scenario_text: str = ""
    model_text: str = ""
    profile_text: str = ""
    overrides: dict = field(default_factory=dict)


def _builtin_text(name, suffix):
    resource = importlib.resources.files("softwalk.data").joinpath(f"{name}{suffix}")
    try:
        return resource.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError(f"no builtin resource '{name}{suffix}'") from None


def _resolve_text(ref, suffix, base_dir):
    if ref.startswith("builtin:"):
        return _builtin_text(ref[len("builtin:"):], suffix)
    path = Path(ref)
    if not path.is_absolute() and base_dir is not None:
        path = Path(base_dir) / path
    try:
        return path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError(f"cannot read '{path}'") from None


def scenario_from_texts(scenario_text, model_text=None, profile_text=None,
                        path=None, base_dir=None, overrides=None):
    sections = parse_text(scenario_text, path=path)
    sc = single_section(sections, "scenario", path)
    overrides = dict(overrides or {})

    if model_text is None:
        model_text = _resolve_text(sc.get_str("model"), ".robot", base_dir)
    if profile_text is None:
        profile_text = _resolve_text(sc.get_str("profile"), ".profile", base_dir)
    model = load_model_text(model_text)
    profile = load_profile_text(profile_text)

    duration = sc.get_float("duration")
    dt = sc.get_float("dt", 1e-3)
    if duration <= 0.0 or dt <= 0.0:
        raise ConfigError("duration and dt must be positive", sc.line, path)
    seed = sc.get_int("seed", 0)
    integrator = sc.get_str("integrator", "rk4")
    if integrator not in ("rk4", "semi_implicit"):
        raise ConfigError(f"unknown integrator '{integrator}'", sc.line, path)

    noise_cfg = NoiseConfig(seed=seed)
    for sec in sections:
        if sec.name == "noise":
            sigma = sec.get_float("sigma", 0.0)
            tap = sec.get_str("tap", "both")
            if tap not in ("both", "plant", "sensor", "none"):
                raise ConfigError(f"unknown noise tap '{tap}'", sec.line, path)
            noise_cfg = NoiseConfig(
                sigma_plant=sigma if tap in ("both", "plant") else 0.0,
                sigma_sensor=sigma if tap in ("both", "sensor") else 0.0,
                shared_draw=tap == "both",
                seed=sec.get_int("seed", seed),
            )
            if sec.has("sigma_plant"):
                noise_cfg.sigma_plant = sec.get_float("sigma_plant")
                noise_cfg.shared_draw = False
            if sec.has("sigma_sensor"):
                noise_cfg.sigma_sensor = sec.get_float("sigma_sensor")
                noise_cfg.shared_draw = False

    segments = []
    for sec in sections:
        if sec.name == "terrain":
            k = sec.get_float("k")
            b = sec.get_float("b")
            if k <= 0.0 or b <= 0.0:
                raise ConfigError("terrain k and b must be positive", sec.line, path)
            segments.append((sec.line, TerrainSegment(sec.get_float("x_start", -1e30), k, b)))
    if not segments:
        raise ConfigError("scenario declares no [terrain] section", path=path)
    try:
        terrain = TerrainMap([seg for _, seg in segments])
    except ValueError as exc:
        raise ConfigError(str(exc), segments[0][0], path) from None

    foot_names = model.foot_frames()
    events = []
    last_t = -np.inf
    for sec in sections:
        if sec.name != "event":
            continue
        kind = sec.get_str("type")
        t0 = sec.get_float("t")
        duration_ev = sec.get_float("duration")
        if duration_ev <= 0.0:
            raise ConfigError("event duration must be positive", sec.line, path)
        if t0 < last_t:
            raise ConfigError("events must be time-ordered by 't'", sec.line, path)
        last_t = t0
        if kind == "shift":
            target = sec.get_str("to")
            if target != "center" and target not in foot_names:
                raise ConfigError(f"shift target '{target}' is not a foot frame", sec.line, path)
            offset = np.array(sec.get_floats("offset", count=2, default=[0.0, 0.0]))
            events.append(ShiftEvent("shift", t0, duration_ev, target, offset))
        elif kind == "step":
            foot = sec.get_str("foot")
            if foot not in foot_names:
                raise ConfigError(f"step foot '{foot}' is not a foot frame", sec.line, path)
            delta = np.array(sec.get_floats("delta", count=2))
            apex = sec.get_float("apex", 0.04)
            if apex <= 0.0:
                raise ConfigError("step apex must be positive", sec.line, path)
            events.append(StepEvent("step", t0, duration_ev, foot, delta, apex))
        elif kind == "push":
            frame = sec.get_str("frame", model.base)
            wrench = np.array(sec.get_floats("wrench", count=6))
            events.append(PushEvent("push", t0, duration_ev, frame, wrench))
        else:
            raise ConfigError(f"unknown event type '{kind}'", sec.line, path)

    for name in foot_names:
        windows = sorted((e.t0, e.t0 + e.duration) for e in events
                         if e.kind == "step" and e.foot == name)
        for (a0, a1), (b0, _) in zip(windows, windows[1:]):
            if b0 < a1:
                raise ConfigError(f"overlapping step events for foot '{name}'", path=path)

    init_joints = None
    init_base_xy = np.zeros(2)
    for sec in sections:
        if sec.name == "init":
            vals = sec.get_floats("joints", default=None)
            if vals is not None:
                if len(vals) != model.n_joints:
                    raise ConfigError(
                        f"init joints expects {model.n_joints} values, got {len(vals)}",
                        sec.lines.get("joints", sec.line), path,
                    )
                init_joints = np.array(vals)
            xy = sec.get_floats("base_xy", count=2, default=None)
            if xy is not None:
                init_base_xy = np.array(xy)

    scenario = Scenario(
        name=sc.get_str("name", "scenario"),
        model=model,
        profile=profile,
        terrain=terrain,
        noise=noise_cfg,
        duration=duration,
        dt=dt,
        seed=seed,
        integrator=integrator,
        settle=sc.get_bool("settle", True),
        gravity=sc.get_float("gravity", 9.81),
        events=events,
        init_joints=init_joints,
        init_base_xy=init_base_xy,
        fall_fraction=sc.get_float("fall_fraction", 0.6),
        scenario_text=scenario_text,
        model_text=model_text,
        profile_text=profile_text,
    )
    return apply_overrides(scenario, overrides)


def apply_overrides(scenario, overrides):
    """Apply sweep/compare overrides: mode, k, b, sigma, seed, duration."""
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    scenario.overrides.update(overrides)
    if "mode" in overrides:
        scenario.profile.mode = str(overrides["mode"])
        scenario.profile.validate()
    if "k" in overrides or "b" in overrides:
        k = float(overrides.get("k", scenario.terrain.segments[0].k))
        b = float(overrides.get("b", scenario.terrain.segments[0].b))
        scenario.terrain = TerrainMap.uniform(k, b)
    if "sigma" in overrides:
        sigma = float(overrides["sigma"])
        scenario.noise.sigma_plant = sigma
        scenario.noise.sigma_sensor = sigma
        scenario.noise.shared_draw = True
        scenario.noise.validate()
    if "seed" in overrides:
        scenario.seed = int(overrides["seed"])
        scenario.noise.seed = int(overrides["seed"])
    if "duration" in overrides:
        scenario.duration = float(overrides["duration"])
    return scenario


def load_scenario(path, overrides=None):
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    return scenario_from_texts(text, path=str(path), base_dir=path.parent, overrides=overrides)
