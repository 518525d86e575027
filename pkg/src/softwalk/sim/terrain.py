"""Piecewise-constant terrain parameters along the forward (x) direction.

Terrain varies in stiffness/damping only; the surface height is flat at
z = 0. All points under one foot share the segment of the foot center.
"""

from dataclasses import dataclass

from ..contact import ContactParams


@dataclass(frozen=True)
class TerrainSegment:
    x_start: float
    k: float
    b: float


class TerrainMap:
    def __init__(self, segments):
        segs = sorted(segments, key=lambda s: s.x_start)
        if not segs:
            raise ValueError("terrain map needs at least one segment")
        for prev, cur in zip(segs, segs[1:]):
            if cur.x_start <= prev.x_start:
                raise ValueError("terrain segments must have strictly increasing x_start")
        for seg in segs:
            if seg.k <= 0.0 or seg.b <= 0.0:
                raise ValueError(f"terrain parameters must be positive (segment at x={seg.x_start})")
        self.segments = segs

    @staticmethod
    def uniform(k, b):
        return TerrainMap([TerrainSegment(-1e30, k, b)])

    def lookup(self, x):
        """Parameters of the segment containing x (first segment extends left)."""
        chosen = self.segments[0]
        for seg in self.segments:
            if x >= seg.x_start:
                chosen = seg
            else:
                break
        return ContactParams(chosen.k, chosen.b)

    @property
    def height(self):
        return 0.0
