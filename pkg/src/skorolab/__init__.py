"""Numerical laboratory for randomly indexed processes in the Skorokhod space D[0, 1]."""

__version__ = "0.1.0"

from .cadlag import (  # noqa: E402
    CadlagFn,
    IndexedFamily,
    IndexProcess,
    TimeChange,
    cadlag_from_dict,
    cadlag_to_dict,
    compose_time_change,
    evaluate,
    index_compose,
    jump_sizes,
    left_limit,
    make_cadlag,
    polygon,
    read_cadlag,
    step_function,
    sup_norm_dist,
    write_cadlag,
)
from .counterexample import build_example, common_reparam_obstruction, counterexample_row  # noqa: E402
from .errors import SkorolabError  # noqa: E402
from .limits import (  # noqa: E402
    FiniteModel,
    SweepModel,
    convergence_sweep,
    ecdf,
    grid_index,
    ks_two_sample,
    ks_vs_cdf,
    lemma_check,
    rate_bound_exact,
    toy_model,
)
from .processes import (  # noqa: E402
    IncrementSpec,
    Seed,
    const_index,
    donsker_family,
    donsker_polygon,
    partial_sum_family,
    poisson_index,
    sample_wiener,
)
from .skorokhod import DistanceResult, distance, distance_given, distance_oracle, jump_lower_bound  # noqa: E402
