"""Lower and upper bounds on KL divergence and mutual information from kernel MMD statistics."""

__version__ = "0.1.0"

from .bounds import (
    BoundEstimate,
    MiProxy,
    kl_bounds,
    kl_lower_from_mmd,
    kl_upper_from_mmd_sq,
    mi_bounds_continuous,
    mi_bounds_discrete,
    tv_bounds_from_kl,
)
from .errors import InputError, MmdKlError, NumericalError, VerificationError
from .estimators import (
    EstimatorConfig,
    LambdaPolicy,
    MmdStatistics,
    estimate,
    lb_statistic,
    mmd_sq_plugin,
    ub_statistic_sq,
)
from .kernels import KernelFamily, KernelSpec, Transform, eval_kernel, gram, sup_bound

__all__ = [
    "BoundEstimate",
    "EstimatorConfig",
    "InputError",
    "KernelFamily",
    "KernelSpec",
    "LambdaPolicy",
    "MiProxy",
    "MmdKlError",
    "MmdStatistics",
    "NumericalError",
    "Transform",
    "VerificationError",
    "estimate",
    "eval_kernel",
    "gram",
    "kl_bounds",
    "kl_lower_from_mmd",
    "kl_upper_from_mmd_sq",
    "lb_statistic",
    "mi_bounds_continuous",
    "mi_bounds_discrete",
    "mmd_sq_plugin",
    "sup_bound",
    "tv_bounds_from_kl",
    "ub_statistic_sq",
]
