"""Floating-base kinematics and dynamics in mixed representation.

All twists/Jacobians use the mixed convention: origin on the body, axes
aligned with the inertial frame. Generalized velocity is
nu = (base linear velocity, base angular velocity, joint rates).
The mass matrix and bias vector are assembled from per-link mixed
Jacobians and spatial inertias; correctness is pinned by the energy,
momentum and finite-difference test oracles rather than by a particular
recursive algorithm.
"""

from dataclasses import dataclass

import numpy as np

from ..so3 import cross3, hat

GRAVITY = 9.81


class UnknownFrameError(KeyError):
    pass


def _hat_rows(v):
    """(N,3) -> (N,3,3) stacked skew matrices."""
    out = np.zeros(v.shape[:-1] + (3, 3))
    out[..., 0, 1] = -v[..., 2]
    out[..., 0, 2] = v[..., 1]
    out[..., 1, 0] = v[..., 2]
    out[..., 1, 2] = -v[..., 0]
    out[..., 2, 0] = -v[..., 1]
    out[..., 2, 1] = v[..., 0]
    return out


def _cross_rows(a, b):
    """Row-wise cross product for (...,3) arrays."""
    out = np.empty(np.broadcast_shapes(a.shape, b.shape))
    out[..., 0] = a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1]
    out[..., 1] = a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2]
    out[..., 2] = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    return out


class Kinematics:
    """Forward pass over the tree: poses, velocities, Jacobian ingredients.

    Built once per (model, state) evaluation and reused by every query.
    """

    def __init__(self, model, state):
        self.model = model
        self.state = state
        self._frame_cache = {}
        n_links = len(model.links)
        self.link_pos = np.zeros((n_links, 3))
        self.link_rot = np.zeros((n_links, 3, 3))
        self.link_vel = np.zeros((n_links, 3))
        self.link_omega = np.zeros((n_links, 3))
        nj = model.n_joints
        self.joint_axis = np.zeros((nj, 3))      # world direction
        self.joint_anchor = np.zeros((nj, 3))    # world position of the child frame origin
        self.joint_axis_dot = np.zeros((nj, 3))
        self.joint_anchor_vel = np.zeros((nj, 3))
        self.joint_parent_link = np.zeros(nj, dtype=int)

        base_idx = model.link_index[model.base]
        self.link_pos[base_idx] = state.base_pos
        self.link_rot[base_idx] = state.base_rot
        self.link_vel[base_idx] = state.base_lin_vel
        self.link_omega[base_idx] = state.base_ang_vel

        s, s_dot = state.s, state.s_dot
        for joint in model.joint_order():
            p = model.link_index[joint.parent]
            c = model.link_index[joint.child]
            d = joint.index
            Rp = self.link_rot[p]
            R_pre = Rp @ joint.origin_rot
            axis_w = R_pre @ joint.axis
            anchor = self.link_pos[p] + Rp @ joint.origin_pos
            sd = s_dot[d]
            omega_p = self.link_omega[p]
            anchor_vel = self.link_vel[p] + cross3(omega_p, anchor - self.link_pos[p])

            if joint.kind == "revolute":
                # Rodrigues with the precomputed axis generators
                self.link_rot[c] = R_pre + R_pre @ (
                    np.sin(s[d]) * joint.axis_skew + (1.0 - np.cos(s[d])) * joint.axis_skew2
                )
                self.link_pos[c] = anchor
                self.link_omega[c] = omega_p + axis_w * sd
                self.link_vel[c] = anchor_vel
            else:  # prismatic
                self.link_rot[c] = R_pre
                self.link_pos[c] = anchor + axis_w * s[d]
                self.link_omega[c] = omega_p
                self.link_vel[c] = (
                    self.link_vel[p]
                    + cross3(omega_p, self.link_pos[c] - self.link_pos[p])
                    + axis_w * sd
                )

            self.joint_axis[d] = axis_w
            self.joint_anchor[d] = anchor
            self.joint_axis_dot[d] = cross3(omega_p, axis_w)
            self.joint_anchor_vel[d] = anchor_vel
            self.joint_parent_link[d] = p

    def _resolve(self, frame_name):
        """(link index, world position, world rotation) for a link or named frame."""
        model = self.model
        if frame_name in model.link_index:
            i = model.link_index[frame_name]
            return i, self.link_pos[i], self.link_rot[i]
        frame = model.frames.get(frame_name)
        if frame is None:
            raise UnknownFrameError(f"unknown frame '{frame_name}'")
        i = model.link_index[frame.parent]
        pos = self.link_pos[i] + self.link_rot[i] @ frame.offset_pos
        rot = self.link_rot[i] @ frame.offset_rot
        return i, pos, rot

    def frame_pose(self, frame_name):
        _, pos, rot = self._resolve(frame_name)
        return pos, rot

    def frame_twist(self, frame_name):
        i, pos, _ = self._resolve(frame_name)
        vel = self.link_vel[i] + cross3(self.link_omega[i], pos - self.link_pos[i])
        return vel, self.link_omega[i].copy()

    def point_jacobian(self, link_idx, point):
        """Mixed 6x(n+6) Jacobian of a frame at `point` on link `link_idx`."""
        model = self.model
        J = np.zeros((6, model.nv))
        J[:3, :3] = np.eye(3)
        J[:3, 3:6] = -hat(point - self.state.base_pos)
        J[3:, 3:6] = np.eye(3)
        for d in model.paths[model.links[link_idx].name]:
            joint = model.joints[d]
            a = self.joint_axis[d]
            if joint.kind == "revolute":
                J[:3, 6 + d] = cross3(a, point - self.joint_anchor[d])
                J[3:, 6 + d] = a
            else:
                J[:3, 6 + d] = a
        return J

    def point_bias_acceleration(self, link_idx, point):
        """(Jdot @ nu) of the same frame: its acceleration when nu_dot = 0."""
        model = self.model
        st = self.state
        vel = self.link_vel[link_idx] + cross3(
            self.link_omega[link_idx], point - self.link_pos[link_idx]
        )
        acc_lin = cross3(st.base_ang_vel, vel - st.base_lin_vel)
        acc_ang = np.zeros(3)
        for d in model.paths[model.links[link_idx].name]:
            joint = model.joints[d]
            sd = st.s_dot[d]
            a = self.joint_axis[d]
            a_dot = self.joint_axis_dot[d]
            if joint.kind == "revolute":
                acc_lin += sd * (cross3(a_dot, point - self.joint_anchor[d])
                                 + cross3(a, vel - self.joint_anchor_vel[d]))
                acc_ang += sd * a_dot
            else:
                acc_lin += sd * a_dot
        return np.concatenate([acc_lin, acc_ang])

    def frame_jacobian(self, frame_name):
        key = ("J", frame_name)
        if key not in self._frame_cache:
            i, pos, _ = self._resolve(frame_name)
            self._frame_cache[key] = self.point_jacobian(i, pos)
        return self._frame_cache[key]

    def frame_bias_acceleration(self, frame_name):
        key = ("Jdnu", frame_name)
        if key not in self._frame_cache:
            i, pos, _ = self._resolve(frame_name)
            self._frame_cache[key] = self.point_bias_acceleration(i, pos)
        return self._frame_cache[key]

    def all_link_jacobians(self):
        """Stacked mixed Jacobians (n_links, 6, nv) at each link origin."""
        if "J_all" in self._frame_cache:
            return self._frame_cache["J_all"]
        model = self.model
        N = len(model.links)
        J = np.zeros((N, 6, model.nv))
        J[:, 0, 0] = J[:, 1, 1] = J[:, 2, 2] = 1.0
        J[:, 3, 3] = J[:, 4, 4] = J[:, 5, 5] = 1.0
        J[:, :3, 3:6] = -_hat_rows(self.link_pos - self.state.base_pos)
        if model.n_joints:
            axis = self.joint_axis[None, :, :]
            arm = self.link_pos[:, None, :] - self.joint_anchor[None, :, :]
            rev = model.revolute_mask[None, :, None]
            mask = model.ancestor_mask[:, :, None]
            lin = np.where(rev, _cross_rows(axis, arm), axis)
            ang = np.where(rev, np.broadcast_to(axis, arm.shape), 0.0)
            J[:, :3, 6:] = np.where(mask, lin, 0.0).transpose(0, 2, 1)
            J[:, 3:, 6:] = np.where(mask, ang, 0.0).transpose(0, 2, 1)
        self._frame_cache["J_all"] = J
        return J

    def all_link_bias_accelerations(self):
        """Stacked (Jdot nu) terms (n_links, 6) at each link origin."""
        if "Jdnu_all" in self._frame_cache:
            return self._frame_cache["Jdnu_all"]
        model = self.model
        st = self.state
        N = len(model.links)
        out = np.zeros((N, 6))
        out[:, :3] = _cross_rows(st.base_ang_vel[None, :], self.link_vel - st.base_lin_vel[None, :])
        if model.n_joints:
            axis = self.joint_axis[None, :, :]
            axis_dot = self.joint_axis_dot[None, :, :]
            arm = self.link_pos[:, None, :] - self.joint_anchor[None, :, :]
            rel_vel = self.link_vel[:, None, :] - self.joint_anchor_vel[None, :, :]
            rev = model.revolute_mask[None, :, None]
            mask = model.ancestor_mask[:, :, None]
            sd = st.s_dot[None, :, None]
            lin = np.where(rev, _cross_rows(axis_dot, arm) + _cross_rows(axis, rel_vel),
                           np.broadcast_to(axis_dot, arm.shape))
            ang = np.where(rev, np.broadcast_to(axis_dot, arm.shape), 0.0)
            out[:, :3] += np.sum(np.where(mask, sd * lin, 0.0), axis=1)
            out[:, 3:] += np.sum(np.where(mask, sd * ang, 0.0), axis=1)
        self._frame_cache["Jdnu_all"] = out
        return out


def _axis_rotation(axis, angle):
    """Rodrigues rotation about a unit axis."""
    K = hat(axis)
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


@dataclass
class DynamicsTerms:
    M: np.ndarray   # (n+6, n+6)
    h: np.ndarray   # (n+6,)
    B: np.ndarray   # (n+6, n) selector, zeros atop identity


def dynamics_terms(model, state, gravity=GRAVITY, kin=None):
    """Mass matrix and bias vector (Coriolis + centrifugal + gravity).

    Gravity acts along -e3 and lives inside h, so M nu_dot + h = B tau + J' f.
    Assembly is vectorized over links: M = sum_i J_i' M_i J_i and h collects
    the velocity-product wrenches, the (Jdot nu) inertial terms and gravity.
    """
    kin = kin or Kinematics(model, state)
    R = kin.link_rot                      # (N,3,3)
    m = model.link_masses                 # (N,)
    d = (R @ model.link_coms[:, :, None])[:, :, 0]
    Iw = R @ model.link_inertias @ R.transpose(0, 2, 1)
    Sd = _hat_rows(d)

    N = len(model.links)
    Mi = np.zeros((N, 6, 6))
    Mi[:, 0, 0] = Mi[:, 1, 1] = Mi[:, 2, 2] = m
    Mi[:, :3, 3:] = -m[:, None, None] * Sd
    Mi[:, 3:, :3] = m[:, None, None] * Sd
    Mi[:, 3:, 3:] = Iw - m[:, None, None] * (Sd @ Sd)

    omega = kin.link_omega
    wxd = _cross_rows(omega, d)
    centripetal = _cross_rows(omega, wxd)
    Iw_omega = (Iw @ omega[:, :, None])[:, :, 0]
    beta = np.concatenate([
        m[:, None] * centripetal,
        _cross_rows(omega, Iw_omega) + m[:, None] * _cross_rows(d, centripetal),
    ], axis=1)
    g_vec = np.array([0.0, 0.0, -gravity])
    grav = np.concatenate([
        np.broadcast_to(m[:, None] * g_vec, (N, 3)),
        _cross_rows(d, m[:, None] * g_vec),
    ], axis=1)

    J = kin.all_link_jacobians()
    bias_acc = kin.all_link_bias_accelerations()
    MiJ = Mi @ J
    M = np.tensordot(J, MiJ, axes=([0, 1], [0, 1]))
    link_wrench = (Mi @ bias_acc[:, :, None])[:, :, 0] + beta - grav
    h = np.tensordot(J, link_wrench, axes=([0, 1], [0, 1]))

    B = np.zeros((model.nv, model.n_joints))
    B[6:, :] = np.eye(model.n_joints)
    return DynamicsTerms(M, h, B)


@dataclass
class CentroidalMomentum:
    momentum: np.ndarray      # (6,) linear then angular about the CoM
    com: np.ndarray           # (3,)
    com_vel: np.ndarray       # (3,)
    mass: float


def centroidal_momentum(model, state, kin=None):
    kin = kin or Kinematics(model, state)
    m_tot = 0.0
    p_weighted = np.zeros(3)
    lin = np.zeros(3)
    com_pts = []
    com_vels = []
    for i, link in enumerate(model.links):
        R = kin.link_rot[i]
        x = kin.link_pos[i] + R @ link.com
        v = kin.link_vel[i] + cross3(kin.link_omega[i], R @ link.com)
        com_pts.append(x)
        com_vels.append(v)
        m_tot += link.mass
        p_weighted += link.mass * x
        lin += link.mass * v
    com = p_weighted / m_tot
    ang = np.zeros(3)
    for i, link in enumerate(model.links):
        Iw = kin.link_rot[i] @ link.inertia @ kin.link_rot[i].T
        ang += Iw @ kin.link_omega[i] + link.mass * cross3(com_pts[i] - com, com_vels[i])
    return CentroidalMomentum(np.concatenate([lin, ang]), com, lin / m_tot, m_tot)


def momentum_rate_contact_map(contact_point, com):
    """6x6 map from a contact wrench to the centroidal momentum rate."""
    A = np.eye(6)
    A[3:, :3] = hat(contact_point - com)
    return A


def momentum_accel_velocity_map(contact_vel, com_vel):
    """6x6 map from a contact wrench to the velocity part of the momentum 2nd rate."""
    D = np.zeros((6, 6))
    D[3:, :3] = hat(contact_vel - com_vel)
    return D


def gravity_momentum_rate(mass, gravity=GRAVITY):
    return np.array([0.0, 0.0, -mass * gravity, 0.0, 0.0, 0.0])


def forward_dynamics(model, state, tau, frame_wrenches=None, gravity=GRAVITY, kin=None, terms=None):
    """nu_dot = M^-1 (B tau + sum J_f' w_f - h).

    frame_wrenches maps frame names to 6-vectors (force, torque) in the
    mixed frame of that frame's origin.
    """
    kin = kin or Kinematics(model, state)
    terms = terms or dynamics_terms(model, state, gravity=gravity, kin=kin)
    rhs = terms.B @ np.asarray(tau, dtype=float).reshape(model.n_joints) - terms.h
    for frame_name, wrench in (frame_wrenches or {}).items():
        J = kin.frame_jacobian(frame_name)
        rhs += J.T @ np.asarray(wrench, dtype=float).reshape(6)
    return np.linalg.solve(terms.M, rhs)


def joint_torques_from_acceleration(model, state, nu_dot, frame_wrenches=None, gravity=GRAVITY,
                                    kin=None, terms=None):
    """Actuated-row inverse dynamics: tau = M_s nu_dot + h_s - sum J_s' w."""
    kin = kin or Kinematics(model, state)
    terms = terms or dynamics_terms(model, state, gravity=gravity, kin=kin)
    nu_dot = np.asarray(nu_dot, dtype=float).reshape(model.nv)
    tau = terms.M[6:, :] @ nu_dot + terms.h[6:]
    for frame_name, wrench in (frame_wrenches or {}).items():
        J = kin.frame_jacobian(frame_name)
        tau -= J[:, 6:].T @ np.asarray(wrench, dtype=float).reshape(6)
    return tau
