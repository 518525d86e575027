"""Task-stack whole-body torque controller.

Two modes share the task set (centroidal momentum, frame rotations, swing
foot, posture and wrench regularization) but differ in the contact
handling:

* compliant: decision variables (nu_dot, fdot_k). Contact wrenches are
  measured; their rates couple to the foot acceleration through the
  analytic wrench-rate split of the patch model, and feasibility bounds
  act on the one-step-ahead wrench f + fdot T.
* rigid: decision variables (nu_dot, f_k), stance feet constrained to zero
  acceleration and wrenches free inside the friction/CoP bounds (the
  classical task-space inverse-dynamics baseline).

Joint torques follow from the actuated rows of the dynamics with the
respective wrench source.
"""

from dataclasses import dataclass, field

import numpy as np

from ..contact import ContactKinematics, wrench_rate_decomposition
from ..multibody.dynamics import (
    Kinematics,
    centroidal_momentum,
    dynamics_terms,
    gravity_momentum_rate,
    momentum_accel_velocity_map,
    momentum_rate_contact_map,
)
from ..so3 import hat, skew_vee
from .qp import QpInfeasibleError, solve_qp


class ControllerFailure(RuntimeError):
    """Raised when no admissible torque command exists (QP infeasible)."""


@dataclass
class FootInput:
    name: str
    geom: object                  # SurfaceGeometry
    stance: bool                  # scheduled support flag from the scenario
    in_contact: bool              # physical contact record exists
    wrench: np.ndarray = None     # measured wrench (6,), mixed frame
    rest: object = None           # RestPose while in contact
    params: object = None         # ContactParams for the rate coupling


@dataclass
class RotationRef:
    rotation: np.ndarray
    omega: np.ndarray = field(default_factory=lambda: np.zeros(3))
    omega_dot: np.ndarray = field(default_factory=lambda: np.zeros(3))


@dataclass
class SwingRef:
    position: np.ndarray
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    acceleration: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rotation: RotationRef = None


@dataclass
class References:
    com_pos: np.ndarray
    com_vel: np.ndarray = field(default_factory=lambda: np.zeros(3))
    com_acc: np.ndarray = field(default_factory=lambda: np.zeros(3))
    com_jerk: np.ndarray = field(default_factory=lambda: np.zeros(3))
    momentum_ang: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rotations: dict = field(default_factory=dict)   # frame -> RotationRef
    swings: dict = field(default_factory=dict)      # foot frame -> SwingRef
    posture: np.ndarray = None


@dataclass
class ControlOutput:
    torques: np.ndarray
    nu_dot: np.ndarray
    wrench_rates: dict        # foot -> fdot (compliant) or None
    wrench_commands: dict     # foot -> f* (rigid) or None
    cost: float
    max_violation: float
    used_fallback: bool


def rotation_accel_law(R, omega, ref, c0, c1, c2):
    """Reference angular acceleration for almost-global attitude tracking.

    omega_dot* = omega_dot_ref - c0 (hat(omega) E - E hat(omega_ref))^v
                 - c1 (omega - omega_ref) - c2 (E)^v,  E = R R_ref'.
    The vee terms use the skew projection since E is not skew.
    """
    E = R @ ref.rotation.T
    term0 = skew_vee(hat(omega) @ E - E @ hat(ref.omega))
    return ref.omega_dot - c0 * term0 - c1 * (omega - ref.omega) - c2 * skew_vee(E)


def wrench_feasibility_rows(rotation, geom, mu, facets, f_min):
    """Half-space rows A w <= b for a wrench in the mixed frame.

    Rows encode the inscribed friction pyramid, the CoP rectangle and the
    minimum normal force, all expressed in foot axes and rotated to act on
    the world-aligned wrench.
    """
    rows = []
    rhs = []
    mu_eff = mu * np.cos(np.pi / facets)
    for i in range(facets):
        phi = 2.0 * np.pi * i / facets
        rows.append([np.cos(phi), np.sin(phi), -mu_eff, 0.0, 0.0, 0.0])
        rhs.append(0.0)
    rows.append([0.0, 0.0, -1.0, 0.0, 0.0, 0.0])
    rhs.append(-f_min)
    half_l, half_w = 0.5 * geom.l, 0.5 * geom.w
    rows.extend([
        [0.0, 0.0, -half_l, 0.0, -1.0, 0.0],   # cop_x <= l/2
        [0.0, 0.0, -half_l, 0.0, 1.0, 0.0],    # cop_x >= -l/2
        [0.0, 0.0, -half_w, 1.0, 0.0, 0.0],    # cop_y <= w/2
        [0.0, 0.0, -half_w, -1.0, 0.0, 0.0],   # cop_y >= -w/2
    ])
    rhs.extend([0.0, 0.0, 0.0, 0.0])
    A_local = np.array(rows)
    to_foot = np.zeros((6, 6))
    to_foot[:3, :3] = rotation.T
    to_foot[3:, 3:] = rotation.T
    return A_local @ to_foot, np.array(rhs)


class WholeBodyController:
    def __init__(self, model, config, gravity=9.81):
        self.model = model
        self.config = config.validate()
        self.gravity = gravity
        self.mass = model.total_mass
        self._ang_momentum_integral = np.zeros(3)

    def reset(self):
        self._ang_momentum_integral = np.zeros(3)

    # ------------------------------------------------------------------
    def step(self, state, feet, refs, kin=None):
        cfg = self.config
        model = self.model
        kin = kin or Kinematics(model, state)
        terms = dynamics_terms(model, state, gravity=self.gravity, kin=kin)
        cm = centroidal_momentum(model, state, kin=kin)
        nv = model.nv
        nu = state.generalized_velocity()

        rigid = cfg.mode == "rigid"
        if rigid:
            dec_feet = [f for f in feet if f.stance]
        else:
            dec_feet = [f for f in feet if f.in_contact]
        nx = nv + 6 * len(dec_feet)
        block = {f.name: nv + 6 * i for i, f in enumerate(dec_feet)}

        foot_kin = {}
        for f in feet:
            pos, rot = kin.frame_pose(f.name)
            vel, omega = kin.frame_twist(f.name)
            foot_kin[f.name] = (pos, rot, vel, omega)

        H = np.zeros((nx, nx))
        g = np.zeros(nx)

        def add_task(A, b, weight):
            W = np.asarray(weight, dtype=float)
            AW = A * W[:, None]
            H[:, :] += A.T @ AW
            g[:] -= AW.T @ b

        # --- centroidal momentum task -------------------------------------
        h_meas = cm.momentum
        h_ref = np.concatenate([self.mass * refs.com_vel, refs.momentum_ang])
        hd_ref = np.concatenate([self.mass * refs.com_acc, np.zeros(3)])
        integral = np.concatenate([self.mass * (refs.com_pos - cm.com), self._ang_momentum_integral])
        integral = np.clip(integral, -cfg.integral_limit, cfg.integral_limit)
        gains = cfg.gains

        A_cm = np.zeros((6, nx))
        if rigid:
            hd_star = hd_ref + gains.momentum_p * (h_ref - h_meas) + gains.momentum_i * integral
            b_cm = hd_star - gravity_momentum_rate(self.mass, self.gravity)
            for f in dec_feet:
                pos = foot_kin[f.name][0]
                A_cm[:, block[f.name]:block[f.name] + 6] = momentum_rate_contact_map(pos, cm.com)
        else:
            hd_meas = gravity_momentum_rate(self.mass, self.gravity)
            drift = np.zeros(6)
            for f in feet:
                if not f.in_contact:
                    continue
                pos, _, vel, _ = foot_kin[f.name]
                hd_meas = hd_meas + momentum_rate_contact_map(pos, cm.com) @ f.wrench
                drift = drift + momentum_accel_velocity_map(vel, cm.com_vel) @ f.wrench
            hdd_ref = np.concatenate([self.mass * refs.com_jerk, np.zeros(3)])
            hdd_star = (hdd_ref + gains.momentum_d * (hd_ref - hd_meas)
                        + gains.momentum_p * (h_ref - h_meas) + gains.momentum_i * integral)
            b_cm = hdd_star - drift
            for f in dec_feet:
                pos = foot_kin[f.name][0]
                A_cm[:, block[f.name]:block[f.name] + 6] = momentum_rate_contact_map(pos, cm.com)
        add_task(A_cm, b_cm, cfg.weights.momentum)

        # --- frame rotation tasks -----------------------------------------
        for frame in cfg.rotation_frames:
            ref = refs.rotations.get(frame)
            if ref is None:
                continue
            J = kin.frame_jacobian(frame)
            bias = kin.frame_bias_acceleration(frame)
            _, rot = kin.frame_pose(frame)
            _, omega = kin.frame_twist(frame)
            wd_star = rotation_accel_law(rot, omega, ref, gains.rotation_c0,
                                         gains.rotation_c1, gains.rotation_c2)
            A = np.zeros((3, nx))
            A[:, :nv] = J[3:, :]
            add_task(A, wd_star - bias[3:], cfg.weights.rotation)

        # --- swing / free foot tasks ----------------------------------------
        for f in feet:
            if f.name in block:
                continue
            sref = refs.swings.get(f.name)
            if sref is None:
                continue
            pos, rot, vel, omega = foot_kin[f.name]
            J = kin.frame_jacobian(f.name)
            bias = kin.frame_bias_acceleration(f.name)
            vd_star = (sref.acceleration - gains.swing_d * (vel - sref.velocity)
                       - gains.swing_p * (pos - sref.position))
            rref = sref.rotation or RotationRef(rot)
            wd_star = rotation_accel_law(rot, omega, rref, gains.rotation_c0,
                                         gains.rotation_c1, gains.rotation_c2)
            A = np.zeros((6, nx))
            A[:, :nv] = J
            add_task(A, np.concatenate([vd_star, wd_star]) - bias, cfg.weights.swing)

        # --- posture regularization -----------------------------------------
        n = model.n_joints
        s_ref = refs.posture if refs.posture is not None else state.s
        A_post = np.zeros((n, nx))
        A_post[:, 6:nv] = np.eye(n)
        b_post = gains.posture_p * (s_ref - state.s) - gains.posture_d * state.s_dot
        add_task(A_post, b_post, np.full(n, cfg.weights.posture))

        # --- wrench regularization -------------------------------------------
        # compliant: rows are fdot with target k_f (f_ref - f_meas); rigid mode
        # penalizes the implied rate (f* - f_meas)/T around the same law, which
        # anchors the decision wrench to the measured one
        n_stance = max(1, sum(1 for f in feet if f.stance))
        f_share = np.array([0.0, 0.0, self.mass * self.gravity / n_stance, 0.0, 0.0, 0.0])
        for f in dec_feet:
            f_ref = f_share if f.stance else np.zeros(6)
            A = np.zeros((6, nx))
            A[:, block[f.name]:block[f.name] + 6] = np.eye(6)
            f_meas = f.wrench if f.wrench is not None else np.zeros(6)
            if rigid:
                b = f_meas + cfg.period * gains.wrench_p * (f_ref - f_meas)
                weight = cfg.weights.wrench / (cfg.period * cfg.period)
            else:
                b = gains.wrench_p * (f_ref - f_meas)
                weight = cfg.weights.wrench
            add_task(A, b, weight)

        H[np.diag_indices(nx)] += cfg.hessian_ridge

        # --- equality constraints ---------------------------------------------
        eq_rows = []
        eq_rhs = []
        base_dyn = np.zeros((6, nx))
        base_dyn[:, :nv] = terms.M[:6, :]
        base_rhs = -terms.h[:6]
        if rigid:
            for f in dec_feet:
                J = kin.frame_jacobian(f.name)
                base_dyn[:, block[f.name]:block[f.name] + 6] = -J[:, :6].T
        else:
            for f in feet:
                if f.in_contact:
                    J = kin.frame_jacobian(f.name)
                    base_rhs = base_rhs + J[:, :6].T @ f.wrench
        eq_rows.append(base_dyn)
        eq_rhs.append(base_rhs)

        if rigid:
            # Stance feet: J nu_dot + Jdot nu = -kd v (damped zero acceleration;
            # pure zero acceleration leaves foot oscillations on any finitely
            # stiff ground undamped and the controller unstable)
            kd = cfg.rigid_contact_damping
            for f in dec_feet:
                J = kin.frame_jacobian(f.name)
                bias = kin.frame_bias_acceleration(f.name)
                pos, rot, vel, omega = foot_kin[f.name]
                rows = np.zeros((6, nx))
                rows[:, :nv] = J
                eq_rows.append(rows)
                eq_rhs.append(-bias - kd * np.concatenate([vel, omega]))
        else:
            for f in dec_feet:
                pos, rot, vel, omega = foot_kin[f.name]
                ckin = ContactKinematics(pos, rot, vel, omega)
                ra = wrench_rate_decomposition(f.params, f.geom, f.rest, ckin)
                J = kin.frame_jacobian(f.name)
                bias = kin.frame_bias_acceleration(f.name)
                rows = np.zeros((6, nx))
                rows[:, :nv] = -ra.gain @ J
                rows[:, block[f.name]:block[f.name] + 6] = np.eye(6)
                eq_rows.append(rows)
                eq_rhs.append(ra.bias + ra.gain @ bias)

        A_eq = np.vstack(eq_rows)
        b_eq = np.concatenate(eq_rhs)

        # --- wrench feasibility inequalities -----------------------------------
        in_rows = []
        in_rhs = []
        for f in dec_feet:
            rot = foot_kin[f.name][1]
            A_w, b_w = wrench_feasibility_rows(rot, f.geom, cfg.mu, cfg.friction_facets,
                                               cfg.min_normal_force)
            rows = np.zeros((A_w.shape[0], nx))
            if rigid:
                rows[:, block[f.name]:block[f.name] + 6] = A_w
                in_rows.append(rows)
                in_rhs.append(b_w)
            else:
                rows[:, block[f.name]:block[f.name] + 6] = A_w * cfg.period
                in_rows.append(rows)
                in_rhs.append(b_w - A_w @ f.wrench)
        A_in = np.vstack(in_rows) if in_rows else None
        b_in = np.concatenate(in_rhs) if in_rows else None

        try:
            sol = solve_qp(H, g, A_eq, b_eq, A_in, b_in)
        except QpInfeasibleError as exc:
            raise ControllerFailure(str(exc)) from exc

        nu_dot = sol.x[:nv]
        wrench_rates = {}
        wrench_commands = {}
        torque_wrenches = {}
        for f in feet:
            if f.name in block:
                xb = sol.x[block[f.name]:block[f.name] + 6]
                if rigid:
                    wrench_commands[f.name] = xb
                else:
                    wrench_rates[f.name] = xb
                # torque extraction always uses the measured wrench: commanding
                # against the optimizer's imagined wrench dumps the mismatch
                # onto the lightest links (feet) as spurious acceleration
                if f.in_contact:
                    torque_wrenches[f.name] = f.wrench

        tau = terms.M[6:, :] @ nu_dot + terms.h[6:]
        for name, wrench in torque_wrenches.items():
            J = kin.frame_jacobian(name)
            tau -= J[:, 6:].T @ wrench

        # integrate the angular-momentum error numerically (linear part is exact)
        self._ang_momentum_integral = np.clip(
            self._ang_momentum_integral + cfg.period * (refs.momentum_ang - h_meas[3:]),
            -cfg.integral_limit, cfg.integral_limit,
        )

        return ControlOutput(tau, nu_dot, wrench_rates, wrench_commands,
                             sol.cost, sol.max_violation, sol.used_fallback)
