"""Width-5 ReLU approximation of Lipschitz functions through a cache of
quantized piecewise-linear profiles.

Typical use::

    from relucache import UnitBallSpec, make_unit_ball_function, build_adaptive, embed_standard
    f = make_unit_ball_function(UnitBallSpec.parse("pwl-random:K=37:seed=3"))
    net = build_adaptive(f, T=64, m=3)
    standard = embed_standard(net, mode="strict-relu").network
"""

import sys

from .adaptive_net import (AdaptiveNet, Approximant, approximate, build_adaptive,
                           check_mod3_identity, eval_adaptive, eval_formula, mod3_forms)
from .cache import (CacheAssignment, GammaCode, GammaCoeffs, assign_cache,
                    central_trinomial, enumerate_gamma, quantize, relu_coeffs, theta, tooth)
from .embed import (EXACT_LINEAR, STRICT_RELU, WIDTH, BoundCertificate, EmbedPlan,
                    Embedding, choose_params, depth_bound, embed_standard, n_min,
                    param_formula)
from .errors import (AssignmentError, ConstructionError, DomainError, InfeasibleBudget,
                     InvariantError, ParameterError, ReluCacheError, StructureError)
from .harness import (ExperimentConfig, RunRecord, fit_rate, load_config, run_baseline,
                      run_single, sweep)
from .kernels import BACKEND
from .pwl import (PwlFunction, UnitBallSpec, interpolate, make_unit_ball_function,
                  sup_dist)
from .relu_net import (Network, StandardShape, forward, standard_weight_count,
                       validate_standard, weight_count)

__version__ = "0.1.0"

__all__ = [name for name, obj in list(globals().items())
           if not name.startswith("_") and not isinstance(obj, type(sys))]
