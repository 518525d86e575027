"""Online estimation of terrain spring/damper densities from wrenches.

The patch wrench is linear in (k, b), so each measurement gives a 6x2
regressor and a recursive least-squares update with Joseph-form covariance
propagation. Touchdowns reset the covariance so the estimator re-converges
quickly after terrain changes.
"""

from dataclasses import dataclass, field

import numpy as np

from .contact import ContactParams, wrench_closed_form

DEFAULT_INITIAL_ESTIMATE = np.array([1e6, 1e3])
DEFAULT_INITIAL_COVARIANCE = np.diag([1e12, 1e8])


def regressor(geom, rest, kin):
    """6x2 matrix Y with Y @ (k, b) equal to the closed-form wrench.

    Column 1 is the wrench at (k, b) = (1, 0), column 2 at (0, 1); the
    closed form is jointly linear in the parameters so this is exact.
    """
    col_k = wrench_closed_form(ContactParams(1.0, 0.0), geom, rest, kin).as_vector()
    col_b = wrench_closed_form(ContactParams(0.0, 1.0), geom, rest, kin).as_vector()
    return np.column_stack([col_k, col_b])


def _check_spd(P, name):
    P = np.asarray(P, dtype=float)
    if P.shape != (2, 2) or np.max(np.abs(P - P.T)) > 1e-10:
        raise ValueError(f"{name} must be symmetric 2x2")
    if np.min(np.linalg.eigvalsh(P)) <= 0.0:
        raise ValueError(f"{name} must be positive definite")
    return P


@dataclass
class EstimatorState:
    """Parameter estimate (k_hat, b_hat) and its 2x2 error covariance."""

    estimate: np.ndarray = field(default_factory=lambda: DEFAULT_INITIAL_ESTIMATE.copy())
    covariance: np.ndarray = field(default_factory=lambda: DEFAULT_INITIAL_COVARIANCE.copy())


def rls_update(state, Y, wrench_measured, gamma):
    """One recursive least-squares step.

    gain L = P Y' (Gamma + Y P Y')^-1, estimate += L (f - Y pi_hat), and
    the covariance is propagated in Joseph form
    P <- (I - L Y) P (I - L Y)' + L Gamma L', which preserves SPD.
    """
    Y = np.asarray(Y, dtype=float).reshape(6, 2)
    f = np.asarray(wrench_measured, dtype=float).reshape(6)
    gamma = np.asarray(gamma, dtype=float).reshape(6, 6)
    P = state.covariance

    S = gamma + Y @ P @ Y.T
    try:
        np.linalg.cholesky(S)  # SPD guard; raises on a degenerate weighting
    except np.linalg.LinAlgError as exc:
        raise ValueError("innovation covariance Gamma + Y P Y' is singular") from exc
    L = np.linalg.solve(S, Y @ P).T  # P Y' S^-1, 2x6

    innovation = f - Y @ state.estimate
    estimate = state.estimate + L @ innovation
    ImLY = np.eye(2) - L @ Y
    P_new = ImLY @ P @ ImLY.T + L @ gamma @ L.T
    P_new = 0.5 * (P_new + P_new.T)
    return EstimatorState(estimate, P_new)


def covariance_reset(state, P0):
    """Reset the covariance (touchdown event), keeping the estimate."""
    P0 = _check_spd(P0, "reset covariance")
    return EstimatorState(state.estimate.copy(), P0.copy())


@dataclass
class EstimatorConfig:
    """Weighting and initialization for one per-foot estimator."""

    sigma: float = 5.0
    initial_estimate: np.ndarray = field(default_factory=lambda: DEFAULT_INITIAL_ESTIMATE.copy())
    initial_covariance: np.ndarray = field(default_factory=lambda: DEFAULT_INITIAL_COVARIANCE.copy())

    def gamma(self):
        # Unit weighting when the configured noise is zero, otherwise sigma^2 I.
        s2 = self.sigma * self.sigma if self.sigma > 0.0 else 1.0
        return s2 * np.eye(6)


class ContactParameterEstimator:
    """Per-foot RLS wrapper used by the simulator and the batch CLI."""

    def __init__(self, geom, config=None):
        self.geom = geom
        self.config = config or EstimatorConfig()
        self.state = EstimatorState(
            self.config.initial_estimate.copy(), self.config.initial_covariance.copy()
        )

    def on_touchdown(self):
        self.state = covariance_reset(self.state, self.config.initial_covariance)

    def update(self, rest, kin, wrench_measured, active=True):
        """Feed one sample; inactive or tensile samples are skipped."""
        if not active or float(np.asarray(wrench_measured).reshape(6)[2]) <= 0.0:
            return self.state
        Y = regressor(self.geom, rest, kin)
        self.state = rls_update(self.state, Y, wrench_measured, self.config.gamma())
        return self.state

    @property
    def estimate(self):
        return self.state.estimate

    @property
    def covariance_trace(self):
        return float(np.trace(self.state.covariance))
