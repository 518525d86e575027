"""Tree-structured floating-base robot description and its text-file parser.

A robot file is a sequence of [link], [joint] and [frame] sections; see
data/minibiped.robot for the shipped sample. The parser validates tree
topology, positive masses, SPD inertias and name uniqueness, reporting
line-numbered errors.
"""

from dataclasses import dataclass, field

import numpy as np

from ..contact import SurfaceGeometry
from ..so3 import rpy_to_rotation
from ..textcfg import ConfigError, parse_file, parse_text


@dataclass
class Link:
    name: str
    mass: float
    inertia: np.ndarray       # 3x3 about the CoM, link axes
    com: np.ndarray           # (3,) CoM offset in the link frame
    index: int = -1


@dataclass
class Joint:
    name: str
    parent: str
    child: str
    kind: str                 # "revolute" | "prismatic"
    axis: np.ndarray          # unit vector in the joint (child) frame
    origin_pos: np.ndarray
    origin_rot: np.ndarray
    pos_limits: tuple = (-2.0 * np.pi, 2.0 * np.pi)
    vel_limit: float = 50.0
    tau_limit: float = 500.0
    index: int = -1           # dof index


@dataclass
class Frame:
    name: str
    parent: str
    offset_pos: np.ndarray
    offset_rot: np.ndarray
    foot: SurfaceGeometry = None


@dataclass
class RobotModel:
    name: str
    base: str
    links: list
    joints: list
    frames: dict = field(default_factory=dict)

    def __post_init__(self):
        self.link_index = {l.name: i for i, l in enumerate(self.links)}
        for i, link in enumerate(self.links):
            link.index = i
        for d, joint in enumerate(self.joints):
            joint.index = d
        # parent joint per link (None for base), and root-to-link joint paths
        self.parent_joint = {self.base: None}
        for joint in self.joints:
            self.parent_joint[joint.child] = joint
        self.paths = {self.base: []}
        for joint in self._topological_joints():
            self.paths[joint.child] = self.paths[joint.parent] + [joint.index]
        # stacked arrays for vectorized dynamics assembly
        self.ancestor_mask = np.zeros((len(self.links), len(self.joints)), dtype=bool)
        for name, path in self.paths.items():
            if path:
                self.ancestor_mask[self.link_index[name], path] = True
        self.revolute_mask = np.array([j.kind == "revolute" for j in self.joints], dtype=bool)
        self.link_masses = np.array([l.mass for l in self.links])
        self.link_coms = np.stack([l.com for l in self.links]) if self.links else np.zeros((0, 3))
        self.link_inertias = np.stack([l.inertia for l in self.links]) if self.links else np.zeros((0, 3, 3))
        for joint in self.joints:
            ax = joint.axis
            K = np.array([[0.0, -ax[2], ax[1]], [ax[2], 0.0, -ax[0]], [-ax[1], ax[0], 0.0]])
            joint.axis_skew = K
            joint.axis_skew2 = K @ K

    def _topological_joints(self):
        ordered, placed = [], {self.base}
        pending = list(self.joints)
        while pending:
            progressed = False
            for joint in list(pending):
                if joint.parent in placed:
                    ordered.append(joint)
                    placed.add(joint.child)
                    pending.remove(joint)
                    progressed = True
            if not progressed:
                raise ConfigError("joint graph is not a tree rooted at the base")
        return ordered

    @property
    def n_joints(self):
        return len(self.joints)

    @property
    def nv(self):
        return 6 + len(self.joints)

    @property
    def total_mass(self):
        return sum(link.mass for link in self.links)

    def foot_frames(self):
        return [f.name for f in self.frames.values() if f.foot is not None]

    def joint_order(self):
        """Joints sorted topologically (parents before children)."""
        return self._topological_joints()


@dataclass
class RobotState:
    base_pos: np.ndarray      # (3,)
    base_rot: np.ndarray      # (3,3)
    s: np.ndarray             # (n,)
    base_lin_vel: np.ndarray  # (3,)
    base_ang_vel: np.ndarray  # (3,)
    s_dot: np.ndarray         # (n,)

    @staticmethod
    def zero(model):
        n = model.n_joints
        return RobotState(np.zeros(3), np.eye(3), np.zeros(n), np.zeros(3), np.zeros(3), np.zeros(n))

    def copy(self):
        return RobotState(
            self.base_pos.copy(), self.base_rot.copy(), self.s.copy(),
            self.base_lin_vel.copy(), self.base_ang_vel.copy(), self.s_dot.copy(),
        )

    def generalized_velocity(self):
        return np.concatenate([self.base_lin_vel, self.base_ang_vel, self.s_dot])


def _parse_inertia(section):
    vals = section.get_floats("inertia", count=6)
    ixx, ixy, ixz, iyy, iyz, izz = vals
    I = np.array([[ixx, ixy, ixz], [ixy, iyy, iyz], [ixz, iyz, izz]])
    if np.min(np.linalg.eigvalsh(I)) <= 0.0:
        raise ConfigError(
            f"inertia of link '{section.get_str('name')}' is not positive definite",
            section.lines.get("inertia", section.line),
        )
    return I


def _parse_pose(section, key, default_zero=True):
    if not section.has(key):
        if default_zero:
            return np.zeros(3), np.eye(3)
        raise ConfigError(f"section [{section.name}] is missing key '{key}'", section.line)
    vals = section.get_floats(key)
    if len(vals) == 3:
        return np.array(vals), np.eye(3)
    if len(vals) == 6:
        return np.array(vals[:3]), rpy_to_rotation(vals[3:])
    raise ConfigError(
        f"key '{key}' expects 'x y z' or 'x y z roll pitch yaw'", section.lines.get(key, section.line)
    )


def model_from_sections(sections, path=None):
    links, joints, frames = [], [], {}
    names = set()
    for sec in sections:
        if sec.name == "robot":
            continue
        if sec.name == "link":
            name = sec.get_str("name")
            if name in names:
                raise ConfigError(f"duplicate name '{name}'", sec.line, path)
            names.add(name)
            mass = sec.get_float("mass")
            if mass <= 0.0:
                raise ConfigError(f"link '{name}' must have positive mass", sec.lines.get("mass", sec.line), path)
            com, _ = _parse_pose(sec, "com")
            links.append(Link(name, mass, _parse_inertia(sec), com))
        elif sec.name == "joint":
            name = sec.get_str("name")
            if name in names:
                raise ConfigError(f"duplicate name '{name}'", sec.line, path)
            names.add(name)
            kind = sec.get_str("type")
            if kind not in ("revolute", "prismatic"):
                raise ConfigError(f"joint '{name}' has unknown type '{kind}'", sec.lines.get("type", sec.line), path)
            axis = np.array(sec.get_floats("axis", count=3))
            norm = np.linalg.norm(axis)
            if norm < 1e-12:
                raise ConfigError(f"joint '{name}' axis is zero", sec.lines.get("axis", sec.line), path)
            pos, rot = _parse_pose(sec, "origin")
            joint = Joint(name, sec.get_str("parent"), sec.get_str("child"), kind, axis / norm, pos, rot)
            lims = sec.get_floats("limits", default=None)
            if lims is not None:
                if len(lims) != 4:
                    raise ConfigError(
                        f"joint '{name}' limits expect 'pos_min pos_max vel_max tau_max'",
                        sec.lines.get("limits", sec.line), path,
                    )
                joint.pos_limits = (lims[0], lims[1])
                joint.vel_limit = lims[2]
                joint.tau_limit = lims[3]
            joints.append(joint)
        elif sec.name == "frame":
            name = sec.get_str("name")
            if name in names or name in frames:
                raise ConfigError(f"duplicate name '{name}'", sec.line, path)
            pos, rot = _parse_pose(sec, "origin")
            foot = None
            if sec.has("foot"):
                l, w = sec.get_floats("foot", count=2)
                foot = SurfaceGeometry(l, w)
            frames[name] = Frame(name, sec.get_str("parent"), pos, rot, foot)
        else:
            raise ConfigError(f"unknown section [{sec.name}]", sec.line, path)

    if not links:
        raise ConfigError("robot file declares no links", path=path)
    link_names = {l.name for l in links}
    children = set()
    for joint in joints:
        for end, role in ((joint.parent, "parent"), (joint.child, "child")):
            if end not in link_names:
                raise ConfigError(f"joint '{joint.name}' references unknown {role} link '{end}'", path=path)
        if joint.child in children:
            raise ConfigError(f"link '{joint.child}' has more than one parent joint (loop)", path=path)
        children.add(joint.child)
    roots = link_names - children
    if len(roots) != 1:
        raise ConfigError(f"expected exactly one root link, found {sorted(roots)}", path=path)
    base = roots.pop()
    for frame in frames.values():
        if frame.parent not in link_names:
            raise ConfigError(f"frame '{frame.name}' references unknown link '{frame.parent}'", path=path)

    robot_name = "robot"
    for sec in sections:
        if sec.name == "robot":
            robot_name = sec.get_str("name", robot_name)
    model = RobotModel(robot_name, base, links, joints, frames)
    model.joint_order()  # raises on disconnected subtrees / loops
    return model


def load_model(path):
    return model_from_sections(parse_file(path), path=str(path))


def load_model_text(text, path=None):
    return model_from_sections(parse_text(text, path=path), path=path)
