"""Whole-body controller configuration: gains, task weights, contact limits.

Profiles live in structured text files ([controller], [gains], [weights])
and are validated at construction; gain sets violating the centroidal
stability conditions (p, i, and d*p - i all positive) are rejected.
"""

from dataclasses import dataclass, field

import numpy as np

from ..textcfg import ConfigError, parse_file, parse_text, single_section


def _diag6(values):
    v = np.asarray(values, dtype=float).reshape(-1)
    if v.size == 1:
        v = np.full(6, v[0])
    if v.size == 3:
        v = np.concatenate([v, v])
    if v.size != 6:
        raise ValueError("expected 1, 3 or 6 gain values")
    return v


def _diag3(values):
    v = np.asarray(values, dtype=float).reshape(-1)
    if v.size == 1:
        v = np.full(3, v[0])
    if v.size != 3:
        raise ValueError("expected 1 or 3 gain values")
    return v


@dataclass
class ControllerGains:
    momentum_p: np.ndarray = field(default_factory=lambda: _diag6([60.0, 60.0, 60.0, 30.0, 30.0, 30.0]))
    momentum_d: np.ndarray = field(default_factory=lambda: _diag6([14.0, 14.0, 14.0, 10.0, 10.0, 10.0]))
    momentum_i: np.ndarray = field(default_factory=lambda: _diag6([80.0, 80.0, 80.0, 20.0, 20.0, 20.0]))
    rotation_c0: float = 1.0
    rotation_c1: float = 12.0
    rotation_c2: float = 36.0
    swing_p: np.ndarray = field(default_factory=lambda: _diag3(60.0))
    swing_d: np.ndarray = field(default_factory=lambda: _diag3(16.0))
    posture_p: float = 25.0
    posture_d: float = 10.0
    wrench_p: np.ndarray = field(default_factory=lambda: _diag6(8.0))

    def validate(self):
        for name, arr in (("momentum_p", self.momentum_p), ("momentum_i", self.momentum_i)):
            if np.any(arr <= 0.0):
                raise ValueError(f"{name} must be positive definite")
        if np.any(self.momentum_d * self.momentum_p - self.momentum_i <= 0.0):
            raise ValueError("momentum gains violate d*p - i > 0 (centroidal stability condition)")
        for name, val in (("rotation_c0", self.rotation_c0), ("rotation_c1", self.rotation_c1),
                          ("rotation_c2", self.rotation_c2)):
            if val <= 0.0:
                raise ValueError(f"{name} must be positive")
        for name, arr in (("swing_p", self.swing_p), ("swing_d", self.swing_d),
                          ("wrench_p", self.wrench_p)):
            if np.any(np.asarray(arr) <= 0.0):
                raise ValueError(f"{name} must be positive definite")
        if self.posture_p <= 0.0 or self.posture_d <= 0.0:
            raise ValueError("posture gains must be positive")
        return self


@dataclass
class TaskWeights:
    momentum: np.ndarray = field(default_factory=lambda: _diag6([20.0, 20.0, 20.0, 20.0, 20.0, 20.0]))
    rotation: np.ndarray = field(default_factory=lambda: _diag3(2.0))
    swing: np.ndarray = field(default_factory=lambda: _diag6([50.0, 50.0, 80.0, 15.0, 15.0, 15.0]))
    posture: float = 0.5
    wrench: np.ndarray = field(default_factory=lambda: _diag6([1e-6, 1e-6, 1e-6, 1e-4, 1e-4, 1e-4]))

    def validate(self):
        for name, arr in (("momentum", self.momentum), ("rotation", self.rotation),
                          ("swing", self.swing), ("wrench", self.wrench)):
            if np.any(np.asarray(arr) <= 0.0):
                raise ValueError(f"task weight {name} must be positive")
        if self.posture <= 0.0:
            raise ValueError("task weight posture must be positive")
        return self


@dataclass
class ControllerConfig:
    mode: str = "compliant"              # "compliant" | "rigid"
    period: float = 1e-3
    mu: float = 0.33
    friction_facets: int = 4
    min_normal_force: float = 1.0
    use_estimated_params: bool = False
    rigid_contact_damping: float = 30.0
    rotation_frames: tuple = ("root",)
    integral_limit: float = 30.0
    hessian_ridge: float = 1e-8
    gains: ControllerGains = field(default_factory=ControllerGains)
    weights: TaskWeights = field(default_factory=TaskWeights)

    def validate(self):
        if self.mode not in ("compliant", "rigid"):
            raise ValueError(f"unknown controller mode '{self.mode}'")
        if self.period <= 0.0:
            raise ValueError("control period must be positive")
        if self.mu <= 0.0:
            raise ValueError("friction coefficient must be positive")
        if self.friction_facets < 3:
            raise ValueError("friction pyramid needs at least 3 facets")
        self.gains.validate()
        self.weights.validate()
        return self


def config_from_sections(sections, path=None):
    cfg = ControllerConfig()
    ctrl = single_section(sections, "controller", path)
    cfg.mode = ctrl.get_str("mode", cfg.mode)
    cfg.period = ctrl.get_float("period", cfg.period)
    cfg.mu = ctrl.get_float("mu", cfg.mu)
    cfg.friction_facets = ctrl.get_int("friction_facets", cfg.friction_facets)
    cfg.min_normal_force = ctrl.get_float("min_normal_force", cfg.min_normal_force)
    cfg.use_estimated_params = ctrl.get_bool("use_estimated_params", cfg.use_estimated_params)
    cfg.rigid_contact_damping = ctrl.get_float("rigid_contact_damping", cfg.rigid_contact_damping)
    cfg.integral_limit = ctrl.get_float("integral_limit", cfg.integral_limit)
    frames = ctrl.get_str("rotation_frames", None)
    if frames is not None:
        cfg.rotation_frames = tuple(frames.split())

    for sec in sections:
        try:
            if sec.name == "gains":
                g = cfg.gains
                for key in sec.values:
                    if key in ("momentum_p", "momentum_d", "momentum_i", "wrench_p"):
                        setattr(g, key, _diag6(sec.get_floats(key)))
                    elif key in ("swing_p", "swing_d"):
                        setattr(g, key, _diag3(sec.get_floats(key)))
                    elif key in ("rotation_c0", "rotation_c1", "rotation_c2", "posture_p", "posture_d"):
                        setattr(g, key, sec.get_float(key))
                    else:
                        raise ConfigError(f"unknown gain '{key}'", sec.lines[key], path)
            elif sec.name == "weights":
                w = cfg.weights
                for key in sec.values:
                    if key in ("momentum", "swing", "wrench"):
                        setattr(w, key, _diag6(sec.get_floats(key)))
                    elif key == "rotation":
                        w.rotation = _diag3(sec.get_floats(key))
                    elif key == "posture":
                        w.posture = sec.get_float(key)
                    else:
                        raise ConfigError(f"unknown weight '{key}'", sec.lines[key], path)
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc), sec.line, path) from None

    try:
        cfg.validate()
    except ValueError as exc:
        raise ConfigError(str(exc), path=path) from None
    return cfg


def load_profile(path):
    return config_from_sections(parse_file(path), path=str(path))


def load_profile_text(text, path=None):
    return config_from_sections(parse_text(text, path=path), path=path)
