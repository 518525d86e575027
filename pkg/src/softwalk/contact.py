"""Visco-elastic contact over a rectangular patch.

The terrain is a continuum of vertical spring-damper elements. Integrating
the force density over the rectangular sole gives a closed-form wrench
(force and torque about the patch frame origin, world-aligned axes), an
exact Gauss-Legendre quadrature twin used as oracle, a small-angle
linearization, and the analytic wrench-rate split fdot = h_f + g_f @ vdot
consumed by the whole-body controller.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .so3 import cross3, hat

_E1 = np.array([1.0, 0.0, 0.0])
_E2 = np.array([0.0, 1.0, 0.0])
_E3 = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class ContactParams:
    """Terrain spring density k [N/m^3] and damper density b [N*s/m^3].

    Physical terrain has k > 0 and b > 0 (enforced by the terrain map);
    zero values are allowed here so single-branch evaluations (pure spring,
    pure damper) and the estimator's regressor columns stay expressible.
    """

    k: float
    b: float

    def __post_init__(self):
        if self.k < 0.0 or self.b < 0.0:
            raise ValueError(f"contact parameters must be non-negative, got k={self.k}, b={self.b}")


@dataclass(frozen=True)
class SurfaceGeometry:
    """Rectangular patch, length l along x and width w along y [m]."""

    l: float
    w: float

    def __post_init__(self):
        if not (self.l > 0.0 and self.w > 0.0):
            raise ValueError(f"patch dimensions must be positive, got l={self.l}, w={self.w}")


@dataclass
class RestPose:
    """Patch pose at which the wrench vanishes, captured at touchdown."""

    position: np.ndarray  # (3,)
    rotation: np.ndarray  # (3,3)


@dataclass
class ContactKinematics:
    """Current patch pose and mixed twist (world-aligned axes)."""

    position: np.ndarray  # (3,)
    rotation: np.ndarray  # (3,3)
    velocity: np.ndarray  # (3,) [m/s]
    omega: np.ndarray     # (3,) [rad/s]

    @property
    def area_factor(self):
        """|e3 . R e3|: vertical projection scaling of the patch area."""
        return abs(self.rotation[2, 2])


@dataclass
class Wrench:
    """Force and torque at the patch frame origin, world-aligned axes."""

    force: np.ndarray   # (3,) [N]
    torque: np.ndarray  # (3,) [N*m]

    def as_vector(self):
        return np.concatenate([self.force, self.torque])

    @staticmethod
    def from_vector(v):
        v = np.asarray(v, dtype=float).reshape(6)
        return Wrench(v[:3].copy(), v[3:].copy())

    @staticmethod
    def zero():
        return Wrench(np.zeros(3), np.zeros(3))


@dataclass
class WrenchRateAffine:
    """fdot = bias + gain @ (pddot, omegadot), both evaluated at a state."""

    bias: np.ndarray  # (6,)
    gain: np.ndarray  # (6,6)


class ContactState(Enum):
    ACTIVE = "active"
    INACTIVE = "inactive"
    SLIDING_VIOLATION = "sliding-violation"


def point_force_density(params, rest, kin, u, v):
    """Force density [N/m^2] at sole coordinates (u, v).

    rho = k (xbar - x) - b xdot with x = p + R [u,v,0], xdot = pdot +
    hat(omega) R [u,v,0], xbar = pbar + Rbar [u,v,0].
    """
    uv = np.array([u, v, 0.0])
    x = kin.position + kin.rotation @ uv
    xdot = kin.velocity + cross3(kin.omega, kin.rotation @ uv)
    xbar = rest.position + rest.rotation @ uv
    return params.k * (xbar - x) - params.b * xdot


def wrench_closed_form(params, geom, rest, kin):
    """Exact patch wrench from the surface integral of the force density.

    force  = l w a [k (pbar - p) - b pdot]
    torque = (l w a / 12) sum_i kappa_i S(R e_i) [b S(R e_i) omega + k Rbar e_i]
    with a = |e3 . R e3|, kappa = (l^2, w^2), i in {1, 2}.
    """
    k, b = params.k, params.b
    l, w = geom.l, geom.w
    a = kin.area_factor
    force = l * w * a * (k * (rest.position - kin.position) - b * kin.velocity)

    r1 = kin.rotation[:, 0]
    r2 = kin.rotation[:, 1]
    t1 = cross3(r1, b * cross3(r1, kin.omega) + k * rest.rotation[:, 0])
    t2 = cross3(r2, b * cross3(r2, kin.omega) + k * rest.rotation[:, 1])
    torque = (l * w * a / 12.0) * (l * l * t1 + w * w * t2)
    return Wrench(force, torque)


def wrench_quadrature(params, geom, rest, kin, order=4):
    """Brute-force wrench by tensor-product Gauss-Legendre quadrature.

    Integrates the force density and its torque about the patch origin over
    the rectangle, with the vertical-projection area factor. The integrand
    is polynomial of degree <= 2 in (u, v), so order >= 2 is exact up to
    round-off; this is the transcription oracle for wrench_closed_form.
    """
    if order < 2:
        raise ValueError("quadrature order must be >= 2")
    nodes, weights = np.polynomial.legendre.leggauss(order)
    us = 0.5 * geom.l * nodes
    ws_u = 0.5 * geom.l * weights
    vs = 0.5 * geom.w * nodes
    ws_v = 0.5 * geom.w * weights

    a = kin.area_factor
    force = np.zeros(3)
    torque = np.zeros(3)
    for u, wu in zip(us, ws_u):
        for v, wv in zip(vs, ws_v):
            rho = point_force_density(params, rest, kin, u, v)
            arm = kin.rotation @ np.array([u, v, 0.0])
            force += wu * wv * rho
            torque += wu * wv * cross3(arm, rho)
    return Wrench(a * force, a * torque)


def wrench_linearized(params, geom, theta, theta_dot, displacement, velocity):
    """Small-orientation lumped spring-damper wrench (rest rotation identity).

    force  = K_l @ displacement - B_l @ velocity        (displacement = pbar - p)
    torque = -K_a @ theta - B_a @ theta_dot
    with K_l = l w k I, B_l = l w b I and the rotational gains
    K_a, B_a = (l w {k,b} / 12) diag(w^2, l^2, l^2 + w^2).
    """
    k, b = params.k, params.b
    l, w = geom.l, geom.w
    lw = l * w
    rot_diag = (lw / 12.0) * np.array([w * w, l * l, l * l + w * w])
    force = lw * k * np.asarray(displacement, float) - lw * b * np.asarray(velocity, float)
    torque = -k * rot_diag * np.asarray(theta, float) - b * rot_diag * np.asarray(theta_dot, float)
    return Wrench(force, torque)


def wrench_rate_decomposition(params, geom, rest, kin):
    """Analytic time derivative of the closed-form wrench.

    Returns (bias, gain) with fdot = bias + gain @ (pddot, omegadot). The
    gain is block diagonal and only damper-proportional: spring terms carry
    no acceleration. It is full rank whenever the area factor and b are
    positive: the linear block is -l w a b I and the angular block is
    -(l w a b / 12) diag(w^2, l^2, l^2 + w^2) in the patch axes.
    """
    k, b = params.k, params.b
    l, w = geom.l, geom.w
    lw = l * w
    R = kin.rotation
    omega = kin.omega
    a = abs(R[2, 2])
    sign = 1.0 if R[2, 2] >= 0.0 else -1.0
    # d/dt |e3 . R e3| with Rdot = hat(omega) R
    a_dot = sign * float(cross3(omega, R[:, 2])[2])

    disp = rest.position - kin.position
    force_now = k * disp - b * kin.velocity
    bias_force = lw * (a_dot * force_now - a * k * kin.velocity)

    r = [R[:, 0], R[:, 1]]
    rbar = [rest.rotation[:, 0], rest.rotation[:, 1]]
    kappa = [l * l, w * w]
    torque_now = np.zeros(3)
    torque_vel = np.zeros(3)
    gain_ang = np.zeros((3, 3))
    for i in range(2):
        ri_dot = cross3(omega, r[i])
        inner = b * cross3(r[i], omega) + k * rbar[i]
        inner_dot = b * cross3(ri_dot, omega)  # omegadot part handled by the gain
        torque_now += kappa[i] * cross3(r[i], inner)
        torque_vel += kappa[i] * (cross3(ri_dot, inner) + cross3(r[i], inner_dot))
        Si = hat(r[i])
        gain_ang += kappa[i] * (Si @ Si)
    bias_torque = (lw / 12.0) * (a_dot * torque_now + a * torque_vel)

    gain = np.zeros((6, 6))
    gain[:3, :3] = -lw * a * b * np.eye(3)
    gain[3:, 3:] = (lw * a * b / 12.0) * gain_ang
    return WrenchRateAffine(np.concatenate([bias_force, bias_torque]), gain)


def contact_activation(wrench, mu):
    """Unilaterality and friction-cone validity of a wrench.

    ACTIVE when the normal force is positive and the tangential force lies
    inside the cone; INACTIVE on non-positive normal force (the effective
    wrench must then be zeroed by the caller); SLIDING_VIOLATION when the
    normal force is positive but the tangential component exceeds mu * fn.
    """
    fn = float(wrench.force[2])
    if fn <= 0.0:
        return ContactState.INACTIVE
    ft = float(np.hypot(wrench.force[0], wrench.force[1]))
    if ft > mu * fn:
        return ContactState.SLIDING_VIOLATION
    return ContactState.ACTIVE
