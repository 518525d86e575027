from .controller import (
    ControlOutput,
    ControllerFailure,
    FootInput,
    References,
    RotationRef,
    SwingRef,
    WholeBodyController,
    rotation_accel_law,
    wrench_feasibility_rows,
)
from .profile import ControllerConfig, ControllerGains, TaskWeights, load_profile, load_profile_text
from .qp import QpInfeasibleError, QpSolution, solve_qp
