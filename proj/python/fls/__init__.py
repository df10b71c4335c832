"""Fast local search for low-dimensional weighted k-means."""

import json as _json

from ._core import (
    BudgetExceeded,
    Dissection,
    Error,
    Instance,
    Solution,
    build_dissection,
    default_gamma,
    dsquared_seed,
    eval_cost,
    exact_opt,
    exact_opt_delta,
    exhaustive_swap_search,
    find_improvement,
    generate_candidates,
    lloyd_refine,
    moat_candidates,
    moat_centers_of,
    round_weight,
    round_weights,
    run_local_search,
    snap_to_grid,
    verify_local_optimality,
)
from ._core import generate_instance as _generate_instance


def generate_instance(seed=1, **spec):
    """Generator spec keys: kind, d, n, k, epsilon, p, components, spread,
    ring_candidates, opening_cost."""
    return _generate_instance(_json.dumps(spec), seed)


__all__ = [name for name in dir() if not name.startswith("_")]
