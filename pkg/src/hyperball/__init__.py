"""Hyperbolic embeddings on the Poincare ball.

Gyrovector operations, Einstein-midpoint averaging, hyperbolic layers,
Gromov delta-hyperbolicity estimation and few-shot prototype evaluation.
"""

from .delta import (
    EFFECTIVE_DELTA_REL,
    GromovReport,
    delta_brute_force,
    delta_from_matrix,
    delta_rel_batched,
    estimate_curvature,
    gromov_product_matrix,
    minmax_product,
)
from .errors import (
    CurvatureMismatchError,
    DimensionMismatchError,
    DomainError,
    HyperballError,
    TrainingDivergedError,
)
from .fewshot import (
    Episode,
    classify,
    distance_to_origin_profile,
    euclidean_classify,
    ks_statistic,
    p_max_profile,
    prototypes,
)
from .klein import hyp_ave, klein_to_poincare, lorentz_factor, poincare_to_klein
from .layers import (
    MlrModel,
    MobiusLinear,
    mlr_logits,
    mlr_loss_and_grad,
    mlr_train,
    mobius_concat,
    mobius_linear,
    mobius_matvec,
)
from .poincare import (
    PoincarePoint,
    conformal_factor,
    dist,
    dist_euclidean_limit_check,
    exp_map,
    log_map,
    mobius_add,
    project_to_ball,
)
from .synthetic import generate_synthetic

__version__ = "0.1.0"
