"""Scripted reference trajectories: CoM shifts, footsteps, posture holds.

The scenario's event script is expanded once into a deterministic timeline
of minimum-jerk CoM segments and swing-foot windows; references at any
instant are a pure function of the script, never of the simulated state.
"""

from dataclasses import dataclass

import numpy as np

from ..wbc.controller import References, RotationRef, SwingRef

# scheduled swing targets press slightly below the surface for firm contact
TOUCHDOWN_OVERLAP = 0.002


def min_jerk(tau):
    """Normalized min-jerk blend and its first three derivatives at tau."""
    tau = min(max(tau, 0.0), 1.0)
    t2, t3, t4, t5 = tau * tau, tau**3, tau**4, tau**5
    s = 10.0 * t3 - 15.0 * t4 + 6.0 * t5
    sd = 30.0 * t2 - 60.0 * t3 + 30.0 * t4
    sdd = 60.0 * tau - 180.0 * t2 + 120.0 * t3
    sddd = 60.0 - 360.0 * tau + 360.0 * t2
    return s, sd, sdd, sddd


@dataclass
class Segment:
    t0: float
    t1: float
    x0: np.ndarray
    x1: np.ndarray

    def eval(self, t):
        T = self.t1 - self.t0
        if t <= self.t0 or T <= 0.0:
            z = np.zeros_like(self.x0)
            return self.x0.copy(), z, z.copy(), z.copy()
        if t >= self.t1:
            z = np.zeros_like(self.x1)
            return self.x1.copy(), z, z.copy(), z.copy()
        s, sd, sdd, sddd = min_jerk((t - self.t0) / T)
        d = self.x1 - self.x0
        return (self.x0 + s * d, sd / T * d, sdd / (T * T) * d, sddd / (T**3) * d)


@dataclass
class SwingWindow:
    t0: float
    t1: float
    foot: str
    p0: np.ndarray  # (x, y) at liftoff
    p1: np.ndarray  # (x, y) target
    apex: float

    def eval(self, t):
        """Sole position/velocity/acceleration during the swing."""
        T = self.t1 - self.t0
        tau = (t - self.t0) / T
        s, sd, sdd, _ = min_jerk(tau)
        xy = self.p0 + s * (self.p1 - self.p0)
        vxy = sd / T * (self.p1 - self.p0)
        axy = sdd / (T * T) * (self.p1 - self.p0)
        # vertical: min-jerk from 0 to -overlap plus a sin^2 apex bump
        z0, z1 = 0.0, -TOUCHDOWN_OVERLAP
        z = z0 + s * (z1 - z0) + self.apex * np.sin(np.pi * tau) ** 2
        zd = sd / T * (z1 - z0) + self.apex * np.pi / T * np.sin(2.0 * np.pi * tau)
        zdd = sdd / (T * T) * (z1 - z0) + self.apex * 2.0 * np.pi**2 / (T * T) * np.cos(2.0 * np.pi * tau)
        pos = np.array([xy[0], xy[1], z])
        vel = np.array([vxy[0], vxy[1], zd])
        acc = np.array([axy[0], axy[1], zdd])
        return pos, vel, acc


class ReferenceGenerator:
    """Expanded event script for one scenario run."""

    def __init__(self, scenario, com0, base_rot0, posture0, foothold0):
        self.com_height = float(com0[2])
        self.base_ref = RotationRef(np.asarray(base_rot0, dtype=float).copy())
        self.posture = np.asarray(posture0, dtype=float).copy()
        self.feet = list(foothold0.keys())
        self.rotation_frames = scenario.profile.rotation_frames

        footholds = {name: np.asarray(xy, dtype=float).copy() for name, xy in foothold0.items()}
        com_segments = []
        swing_windows = {name: [] for name in self.feet}
        foothold_tracks = {name: [(0.0, footholds[name].copy())] for name in self.feet}
        com_xy = np.asarray(com0[:2], dtype=float).copy()

        def com_target(spec, offset):
            if spec == "center":
                pts = [footholds[n] for n in self.feet]
                base = np.mean(pts, axis=0)
            else:
                base = footholds[spec]
            return base + np.asarray(offset, dtype=float)

        for ev in scenario.events:
            if ev.kind == "shift":
                target = com_target(ev.target, ev.offset)
                com_segments.append(Segment(ev.t0, ev.t0 + ev.duration, com_xy.copy(), target))
                com_xy = target.copy()
            elif ev.kind == "step":
                p0 = footholds[ev.foot].copy()
                p1 = p0 + np.asarray(ev.delta, dtype=float)
                swing_windows[ev.foot].append(SwingWindow(ev.t0, ev.t0 + ev.duration, ev.foot, p0, p1, ev.apex))
                footholds[ev.foot] = p1
                foothold_tracks[ev.foot].append((ev.t0 + ev.duration, p1.copy()))

        self.com_segments = com_segments
        self.swing_windows = swing_windows
        self.foothold_tracks = foothold_tracks
        self.com_xy0 = np.asarray(com0[:2], dtype=float).copy()

    # ------------------------------------------------------------------
    def com_ref(self, t):
        active = None
        for seg in self.com_segments:
            if seg.t0 <= t:
                active = seg
            else:
                break
        if active is None:
            pos_xy, vel, acc, jerk = self.com_xy0, np.zeros(2), np.zeros(2), np.zeros(2)
        else:
            pos_xy, vel, acc, jerk = active.eval(t)

        def lift(v2, z=0.0):
            return np.array([v2[0], v2[1], z])

        return (lift(pos_xy, self.com_height), lift(vel), lift(acc), lift(jerk))

    def foothold(self, foot, t):
        xy = self.foothold_tracks[foot][0][1]
        for when, value in self.foothold_tracks[foot]:
            if t >= when:
                xy = value
        return xy

    def stance_flags(self, t):
        flags = {}
        for foot in self.feet:
            flags[foot] = not any(w.t0 <= t < w.t1 for w in self.swing_windows[foot])
        return flags

    def references(self, t):
        com, vel, acc, jerk = self.com_ref(t)
        refs = References(com_pos=com, com_vel=vel, com_acc=acc, com_jerk=jerk,
                          posture=self.posture)
        for frame in self.rotation_frames:
            refs.rotations[frame] = self.base_ref
        for foot in self.feet:
            window = next((w for w in self.swing_windows[foot] if w.t0 <= t < w.t1), None)
            if window is not None:
                pos, v, a = window.eval(t)
                refs.swings[foot] = SwingRef(pos, v, a, RotationRef(np.eye(3)))
            else:
                xy = self.foothold(foot, t)
                hold = np.array([xy[0], xy[1], -TOUCHDOWN_OVERLAP])
                refs.swings[foot] = SwingRef(hold, rotation=RotationRef(np.eye(3)))
        return refs
