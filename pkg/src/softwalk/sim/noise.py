"""Seeded Gaussian wrench noise, applied at the plant and/or sensor tap.

One 6-vector is drawn per foot per control step in a fixed order, and
draws are consumed even when a foot is airborne, so the stream stays
aligned across controller modes and terrain settings for a given seed.
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class NoiseConfig:
    sigma_plant: float = 0.0
    sigma_sensor: float = 0.0
    shared_draw: bool = True
    seed: int = 0

    def validate(self):
        if self.sigma_plant < 0.0 or self.sigma_sensor < 0.0:
            raise ValueError("noise standard deviations must be non-negative")
        return self


class NoiseStream:
    def __init__(self, config, n_feet):
        self.config = config.validate()
        self.n_feet = n_feet
        self._rng_shared = np.random.default_rng(np.random.PCG64(config.seed))
        self._rng_sensor = np.random.default_rng(np.random.PCG64(config.seed + 1))

    def draw_step(self):
        """(plant_eps, sensor_eps), each (n_feet, 6), for one control step."""
        eps = self._rng_shared.standard_normal((self.n_feet, 6))
        if self.config.shared_draw:
            return eps, eps
        return eps, self._rng_sensor.standard_normal((self.n_feet, 6))


def noisy_wrench(true_wrench, sigma, eps):
    """true + sigma * eps; identity when sigma == 0."""
    if sigma == 0.0:
        return np.asarray(true_wrench, dtype=float).copy()
    return np.asarray(true_wrench, dtype=float) + sigma * np.asarray(eps, dtype=float)
