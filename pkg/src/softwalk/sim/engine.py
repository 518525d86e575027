"""Deterministic closed-loop simulator.

Physics integrates the floating-base forward dynamics under the patch
contact model (RK4 by default); the controller runs at its own period with
zero-order-hold torques. Contact records (activation, rest pose, terrain
parameters) are frozen during a physics step and updated at step
boundaries; measurement noise is drawn once per control step.
"""

from dataclasses import dataclass

import numpy as np

from ..contact import ContactKinematics, ContactParams, RestPose, wrench_closed_form
from ..estimation import ContactParameterEstimator, EstimatorConfig
from ..multibody.dynamics import Kinematics, centroidal_momentum, forward_dynamics
from ..multibody.model import RobotState
from ..so3 import hat, orthonormalize, rotation_to_rpy
from ..wbc.controller import ControllerFailure, FootInput, WholeBodyController
from .logio import SimLog
from .noise import NoiseStream
from .references import ReferenceGenerator


@dataclass
class ContactRecord:
    frame: str
    geom: object
    active: bool = False
    rest: RestPose = None
    params: ContactParams = None
    prev_penetration: float = 0.0
    negative_time: float = 0.0


@dataclass
class RunResult:
    outcome: str
    reason: str
    fail_time: float
    log: SimLog
    summary: dict


class Simulator:
    def __init__(self, scenario):
        self.sc = scenario
        self.model = scenario.model
        self.foot_names = self.model.foot_frames()
        if not self.foot_names:
            raise ValueError("robot model declares no foot frames")
        self.geoms = {name: self.model.frames[name].foot for name in self.foot_names}
        self.controller = WholeBodyController(self.model, scenario.profile, gravity=scenario.gravity)
        self.period = scenario.profile.period
        self.steps_per_control = max(1, int(round(self.period / scenario.dt)))
        if abs(self.steps_per_control * scenario.dt - self.period) > 1e-12:
            raise ValueError("control period must be an integer multiple of the physics dt")

    # ------------------------------------------------------------------
    def initial_state(self):
        """Settled (or surface-touching) standing state plus contact records."""
        sc = self.sc
        model = self.model
        state = RobotState.zero(model)
        if sc.init_joints is not None:
            state.s = sc.init_joints.copy()
        state.base_pos = np.array([sc.init_base_xy[0], sc.init_base_xy[1], 0.0])

        kin = Kinematics(model, state)
        sole_z = np.mean([kin.frame_pose(name)[0][2] for name in self.foot_names])

        records = {name: ContactRecord(name, self.geoms[name]) for name in self.foot_names}
        weight_share = model.total_mass * sc.gravity / len(self.foot_names)
        drop = -sole_z  # raise the base so soles touch z = 0
        if sc.settle:
            depths = {}
            for name in self.foot_names:
                params = sc.terrain.lookup(kin.frame_pose(name)[0][0])
                geom = self.geoms[name]
                depths[name] = weight_share / (geom.l * geom.w * params.k)
            drop -= np.mean(list(depths.values()))
        state.base_pos[2] = drop

        kin = Kinematics(model, state)
        for name in self.foot_names:
            pos, rot = kin.frame_pose(name)
            rec = records[name]
            rec.prev_penetration = max(0.0, -pos[2])
            if sc.settle:
                rec.active = True
                rec.rest = RestPose(np.array([pos[0], pos[1], 0.0]), rot.copy())
                rec.params = sc.terrain.lookup(pos[0])
        return state, records

    # ------------------------------------------------------------------
    def _true_wrench(self, kin, rec):
        """Unilateral-filtered model wrench of one contact record."""
        if not rec.active:
            return np.zeros(6)
        pos, rot = kin.frame_pose(rec.frame)
        vel, omega = kin.frame_twist(rec.frame)
        ck = ContactKinematics(pos, rot, vel, omega)
        w = wrench_closed_form(rec.params, rec.geom, rec.rest, ck).as_vector()
        if w[2] <= 0.0:
            return np.zeros(6)
        return w

    def _applied_wrenches(self, state, records, plant_noise, pushes, kin=None):
        kin = kin or Kinematics(self.model, state)
        wrenches = {}
        for i, name in enumerate(self.foot_names):
            w = self._true_wrench(kin, records[name])
            if np.any(w) and plant_noise is not None:
                w = w + plant_noise[i]
            if np.any(w):
                wrenches[name] = w
        for frame, wrench in pushes:
            wrenches[frame] = wrenches.get(frame, np.zeros(6)) + wrench
        return wrenches, kin

    def _derivative(self, state, tau, records, plant_noise, pushes, kin=None):
        wrenches, kin = self._applied_wrenches(state, records, plant_noise, pushes, kin=kin)
        nu_dot = forward_dynamics(self.model, state, tau, wrenches,
                                  gravity=self.sc.gravity, kin=kin)
        return nu_dot

    def _pack(self, state):
        return np.concatenate([state.base_pos, state.base_rot.reshape(9), state.s,
                               state.generalized_velocity()])

    def _unpack(self, y):
        n = self.model.n_joints
        nu = y[12 + n:]
        return RobotState(y[:3].copy(), y[3:12].reshape(3, 3).copy(), y[12:12 + n].copy(),
                          nu[:3].copy(), nu[3:6].copy(), nu[6:].copy())

    def _flat_derivative(self, y, tau, records, plant_noise, pushes):
        n = self.model.n_joints
        state = self._unpack(y)
        nu = y[12 + n:]
        dy = np.empty_like(y)
        dy[:3] = nu[:3]
        dy[3:12] = (hat(nu[3:6]) @ y[3:12].reshape(3, 3)).reshape(9)
        dy[12:12 + n] = nu[6:]
        dy[12 + n:] = self._derivative(state, tau, records, plant_noise, pushes)
        return dy

    def _integrate(self, state, tau, records, plant_noise, pushes, dt):
        n = self.model.n_joints
        y0 = self._pack(state)
        if self.sc.integrator == "semi_implicit":
            nu_dot = self._derivative(state, tau, records, plant_noise, pushes)
            nu = state.generalized_velocity() + dt * nu_dot
            y1 = y0.copy()
            y1[:3] += dt * nu[:3]
            y1[3:12] = (y0[3:12].reshape(3, 3) + dt * hat(nu[3:6]) @ y0[3:12].reshape(3, 3)).reshape(9)
            y1[12:12 + n] += dt * nu[6:]
            y1[12 + n:] = nu
        else:
            k1 = self._flat_derivative(y0, tau, records, plant_noise, pushes)
            k2 = self._flat_derivative(y0 + 0.5 * dt * k1, tau, records, plant_noise, pushes)
            k3 = self._flat_derivative(y0 + 0.5 * dt * k2, tau, records, plant_noise, pushes)
            k4 = self._flat_derivative(y0 + dt * k3, tau, records, plant_noise, pushes)
            y1 = y0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out = self._unpack(y1)
        out.base_rot = orthonormalize(out.base_rot)
        return out

    # ------------------------------------------------------------------
    def _contact_events(self, state, records, dt):
        """Touchdown/liftoff bookkeeping at a physics step boundary."""
        kin = Kinematics(self.model, state)
        touchdowns = []
        for name in self.foot_names:
            rec = records[name]
            pos, rot = kin.frame_pose(name)
            pen = -pos[2]
            if not rec.active:
                if pen > 0.0 and rec.prev_penetration <= 0.0:
                    rec.active = True
                    rec.rest = RestPose(np.array([pos[0], pos[1], 0.0]), rot.copy())
                    rec.params = self.sc.terrain.lookup(pos[0])
                    rec.negative_time = 0.0
                    touchdowns.append(name)
            else:
                w = self._true_wrench(kin, rec)
                if w[2] <= 0.0:
                    rec.negative_time += dt
                    if rec.negative_time >= self.period - 1e-12:
                        rec.active = False
                        rec.rest = None
                        rec.params = None
                        rec.negative_time = 0.0
                else:
                    rec.negative_time = 0.0
            rec.prev_penetration = pen
        return touchdowns

    def _active_pushes(self, t):
        return [(ev.frame, ev.wrench) for ev in self.sc.events
                if ev.kind == "push" and ev.t0 <= t < ev.t0 + ev.duration]

    # ------------------------------------------------------------------
    def run(self):
        sc = self.sc
        model = self.model
        state, records = self.initial_state()

        kin = Kinematics(model, state)
        cm = centroidal_momentum(model, state, kin=kin)
        nominal_com_z = cm.com[2]
        footholds = {name: kin.frame_pose(name)[0][:2].copy() for name in self.foot_names}
        refgen = ReferenceGenerator(sc, cm.com, state.base_rot, state.s, footholds)

        est_cfg = EstimatorConfig(sigma=sc.noise.sigma_sensor)
        estimators = {name: ContactParameterEstimator(self.geoms[name], est_cfg)
                      for name in self.foot_names}
        noise = NoiseStream(sc.noise, len(self.foot_names))
        log = SimLog(self.foot_names)

        n_control = int(round(sc.duration / self.period))
        outcome, reason, fail_time = "success", "", None

        for step_idx in range(n_control):
            t = step_idx * self.period
            plant_eps, sensor_eps = noise.draw_step()
            plant_noise = sc.noise.sigma_plant * plant_eps if sc.noise.sigma_plant > 0.0 else None

            if not (np.all(np.isfinite(state.base_pos)) and np.all(np.isfinite(state.base_rot))
                    and np.all(np.isfinite(state.s)) and np.all(np.isfinite(state.generalized_velocity()))):
                outcome, reason, fail_time = "failure", "diverged", t
                break
            kin = Kinematics(model, state)
            cm = centroidal_momentum(model, state, kin=kin)
            if cm.com[2] < sc.fall_fraction * nominal_com_z:
                outcome, reason, fail_time = "failure", "fell", t
                break

            stance = refgen.stance_flags(t)
            refs = refgen.references(t)

            feet_inputs = []
            true_wr = {}
            meas_wr = {}
            for i, name in enumerate(self.foot_names):
                rec = records[name]
                w_true = self._true_wrench(kin, rec)
                w_meas = w_true + sc.noise.sigma_sensor * sensor_eps[i] if sc.noise.sigma_sensor > 0.0 else w_true.copy()
                true_wr[name] = w_true
                meas_wr[name] = w_meas

                pos, rot = kin.frame_pose(name)
                vel, omega = kin.frame_twist(name)
                if rec.active:
                    est = estimators[name]
                    est.update(rec.rest, ContactKinematics(pos, rot, vel, omega), w_meas, active=True)

                params = rec.params
                if params is not None and sc.profile.use_estimated_params:
                    k_hat = max(1e3, float(estimators[name].estimate[0]))
                    b_hat = max(1e1, float(estimators[name].estimate[1]))
                    params = ContactParams(k_hat, b_hat)
                feet_inputs.append(FootInput(
                    name=name, geom=self.geoms[name], stance=stance[name],
                    in_contact=rec.active, wrench=w_meas, rest=rec.rest, params=params,
                ))

            try:
                out = self.controller.step(state, feet_inputs, refs, kin=kin)
            except ControllerFailure:
                outcome, reason, fail_time = "failure", "qp_infeasible", t
                break

            self._log_row(log, t, kin, cm, refs, records, stance, true_wr, meas_wr,
                          estimators, out)

            pushes = self._active_pushes(t)
            for _ in range(self.steps_per_control):
                state = self._integrate(state, out.torques, records, plant_noise, pushes, sc.dt)
                for name in self._contact_events(state, records, sc.dt):
                    estimators[name].on_touchdown()

        summary = summarize(log, outcome, reason, fail_time, self.foot_names, self.period)
        return RunResult(outcome, reason, fail_time, log, summary)

    # ------------------------------------------------------------------
    def _log_row(self, log, t, kin, cm, refs, records, stance, true_wr, meas_wr,
                 estimators, out):
        mass = self.model.total_mass
        row = [t]
        row += list(cm.com) + list(refs.com_pos)
        row += list(cm.momentum)
        row += list(mass * refs.com_vel) + list(refs.momentum_ang)
        row += [1.0 if out.used_fallback else 0.0, out.cost, out.max_violation]
        for name in self.foot_names:
            rec = records[name]
            pos, rot = kin.frame_pose(name)
            vel, omega = kin.frame_twist(name)
            row += list(pos) + list(rotation_to_rpy(rot))
            row += list(vel) + list(omega)
            row += list(true_wr[name]) + list(meas_wr[name])
            if rec.rest is not None:
                row += list(rec.rest.position) + list(rotation_to_rpy(rec.rest.rotation))
            else:
                row += [0.0] * 6
            params = self.sc.terrain.lookup(pos[0])
            est = estimators[name]
            row += [1.0 if rec.active else 0.0, 1.0 if stance[name] else 0.0,
                    params.k, params.b, est.estimate[0], est.estimate[1], est.covariance_trace]
        log.append(row)


def summarize(log, outcome, reason, fail_time, foot_names, period):
    """Post-run summary statistics (computed outside the control loop)."""
    summary = {
        "outcome": outcome,
        "reason": reason,
        "fail_time": fail_time if fail_time is not None else float("nan"),
        "steps": len(log.rows),
    }
    if not log.rows:
        summary.update(com_rms=float("nan"), com_max=float("nan"),
                       momentum_err_mean=float("nan"), wrench_rate_rms=float("nan"),
                       qp_violation_max=float("nan"))
        return summary
    com_err = np.stack([log.column(f"com_{a}") - log.column(f"com_ref_{a}") for a in "xyz"], axis=1)
    err_norm = np.linalg.norm(com_err, axis=1)
    summary["com_rms"] = float(np.sqrt(np.mean(err_norm**2)))
    summary["com_max"] = float(np.max(err_norm))
    mom_err = np.stack([log.column(f"mom_l{a}") - log.column(f"mom_ref_l{a}") for a in "xyz"], axis=1)
    summary["momentum_err_mean"] = float(np.mean(np.linalg.norm(mom_err, axis=1)))

    rates = []
    for name in foot_names:
        contact = log.column(f"{name}.contact") > 0.5
        w = np.stack([log.column(f"{name}.{c}") for c in ("f_x", "f_y", "f_z", "tau_x", "tau_y", "tau_z")], axis=1)
        dw = np.diff(w, axis=0) / period
        both = contact[:-1] & contact[1:]
        if np.any(both):
            rates.append(np.linalg.norm(dw[both], axis=1))
    summary["wrench_rate_rms"] = float(np.sqrt(np.mean(np.concatenate(rates) ** 2))) if rates else 0.0
    summary["qp_violation_max"] = float(np.max(log.column("qp_violation")))
    return summary
