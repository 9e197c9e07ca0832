"""geoflow: feedback-stabilized rigid-body and charged channel-flow solvers.

Lie-Poisson dynamics with gain-modified Kaluza-Klein metrics: the satellite
with an internal rotor, and 2D incompressible charged shear flow in an
external magnetic field, plus the stability-analysis toolchain (second
variations, drifted-Laplacian eigenvalue bounds, enstrophy bounds).
"""

__version__ = "0.1.0"

from .algebra import (KKData, MetricMatrix, discrete_diamond, kk_metric,
                      kk_metric_inverse, modified_kk_data, so3_ad_star)
from .control import (DesignConstants, ShearControl, apply_C, casimir_profile,
                      condition_report, design_constants, designed_control,
                      enstrophy_bound, explicit_control)
from .geometry import ChannelGeometry
from .rigidbody import (ControlGainK, RigidState, RotorParams, controlled_rhs,
                        free_rhs, integrate, second_variation_so3,
                        stability_condition)

__all__ = [
    "KKData", "MetricMatrix", "kk_metric", "kk_metric_inverse",
    "modified_kk_data", "so3_ad_star", "discrete_diamond",
    "RotorParams", "RigidState", "ControlGainK", "free_rhs", "controlled_rhs",
    "stability_condition", "integrate", "second_variation_so3",
    "ChannelGeometry",
    "DesignConstants", "ShearControl", "design_constants", "designed_control",
    "explicit_control", "apply_C", "condition_report", "casimir_profile",
    "enstrophy_bound",
    "__version__",
]
