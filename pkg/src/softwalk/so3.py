"""Rotation utilities: skew maps, rpy conversions, attitude errors.

Conventions: rotations are plain 3x3 numpy arrays (orthonormal, det +1),
rpy follows the z-y-x composition R = Rz(yaw) @ Ry(pitch) @ Rx(roll).
"""

import numpy as np

_EYE3 = np.eye(3)


def hat(v):
    """Skew matrix of a 3-vector: hat(v) @ w == cross(v, w)."""
    x, y, z = np.asarray(v, dtype=float).reshape(3)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def cross3(a, b):
    """Cross product of two 3-vectors (np.cross has ~50x overhead here)."""
    return np.array([
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])


def vee(M, tol=1e-9):
    """Inverse of hat. Raises ValueError if M is not skew within tol."""
    M = np.asarray(M, dtype=float)
    if np.max(np.abs(M + M.T)) > tol:
        raise ValueError("matrix is not skew-symmetric within tolerance")
    return np.array([M[2, 1], M[0, 2], M[1, 0]])


def skew_vee(M):
    """vee of the skew-symmetric part of an arbitrary 3x3 matrix.

    Used for attitude errors of the form (R @ R_ref.T)^vee where the
    argument is not skew; the symmetric part carries no axis information.
    """
    M = np.asarray(M, dtype=float)
    A = 0.5 * (M - M.T)
    return np.array([A[2, 1], A[0, 2], A[1, 0]])


def rotx(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def roty(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rotz(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rpy_to_rotation(rpy):
    """R = Rz(yaw) @ Ry(pitch) @ Rx(roll)."""
    r, p, y = np.asarray(rpy, dtype=float).reshape(3)
    return rotz(y) @ roty(p) @ rotx(r)


def rotation_to_rpy(R, gimbal_margin=1e-6):
    """Inverse of rpy_to_rotation; valid for |pitch| < pi/2 - gimbal_margin."""
    R = np.asarray(R, dtype=float)
    sp = -R[2, 0]
    if abs(sp) >= np.cos(gimbal_margin):
        raise ValueError("rotation_to_rpy near gimbal lock (|pitch| ~ pi/2)")
    pitch = np.arcsin(np.clip(sp, -1.0, 1.0))
    roll = np.arctan2(R[2, 1], R[2, 2])
    yaw = np.arctan2(R[1, 0], R[0, 0])
    return np.array([roll, pitch, yaw])


def rpy_rates_to_omega(rpy, rpy_rates):
    """World-frame angular velocity of a frame with pose rpy and rates rpy_rates.

    From R = Rz Ry Rx: omega = yaw_dot*e3 + pitch_dot*Rz@e2 + roll_dot*Rz@Ry@e1.
    """
    r, p, y = np.asarray(rpy, dtype=float).reshape(3)
    rd, pd, yd = np.asarray(rpy_rates, dtype=float).reshape(3)
    Rz = rotz(y)
    return yd * np.array([0.0, 0.0, 1.0]) + pd * Rz[:, 1] + rd * (Rz @ roty(p))[:, 0]


def exp_hat(v):
    """Rotation matrix exp(hat(v)) via Rodrigues's formula."""
    v = np.asarray(v, dtype=float).reshape(3)
    th = np.linalg.norm(v)
    if th < 1e-12:
        return _EYE3 + hat(v)
    K = hat(v / th)
    return _EYE3 + np.sin(th) * K + (1.0 - np.cos(th)) * (K @ K)


def orthonormalize(R, tol=1e-9):
    """Re-orthonormalize R (polar projection via SVD) when drift exceeds tol.

    Below the tolerance the input is returned untouched, so clean rotations
    stay bitwise stable across integration steps. Non-finite input is
    returned as-is for the caller's divergence handling.
    """
    R = np.asarray(R, dtype=float)
    if not np.all(np.isfinite(R)):
        return R
    if np.max(np.abs(R.T @ R - _EYE3)) <= tol:
        return R
    U, _, Vt = np.linalg.svd(R)
    Q = U @ Vt
    if np.linalg.det(Q) < 0.0:
        U[:, -1] = -U[:, -1]
        Q = U @ Vt
    return Q
