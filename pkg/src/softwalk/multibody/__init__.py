from .model import Frame, Joint, Link, RobotModel, RobotState, load_model, load_model_text
from .dynamics import (
    CentroidalMomentum,
    DynamicsTerms,
    GRAVITY,
    Kinematics,
    UnknownFrameError,
    centroidal_momentum,
    dynamics_terms,
    forward_dynamics,
    gravity_momentum_rate,
    joint_torques_from_acceleration,
    momentum_accel_velocity_map,
    momentum_rate_contact_map,
)
